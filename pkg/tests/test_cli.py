import json
import logging

import pandas as pd
import pytest

from app.cli import EXIT_BACKEND, EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION, main, resolve_configs
from app.core.exceptions import InvalidConfigurationError


@pytest.fixture(autouse=True)
def detach_cli_log_handler():
    yield
    app_logger = logging.getLogger("app")
    for handler in list(app_logger.handlers):
        app_logger.removeHandler(handler)


SATURATING = {
    "dynamics": {
        "beta_l": 0.0,
        "event_effect": 0.0,
        "visit_loneliness_effect": 0.0,
        "visit_stress_effect": 0.0,
        "baseline_range": [0.8, 0.9],
        "frailty_range": [1.0, 1.0],
    },
    "run": {"n_agents": 10, "n_days": 28},
}


@pytest.fixture
def saturating_config(tmp_path):
    path = tmp_path / "saturating.json"
    path.write_text(json.dumps(SATURATING))
    return path


def test_run_prints_final_mean(tmp_path, capsys):
    code = main(["run", "--condition", "baseline", "--seed", "42", "--n-agents", "10", "--n-days", "14",
                 "--output-dir", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert out.startswith("final_mean_loneliness=")
    assert (tmp_path / "audit" / "baseline_seed42.jsonl").is_file()


def test_flags_override_file_and_file_overrides_defaults(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[control]\nupdate_cap = 0.08\nrisk_threshold = 0.3\n[run]\nn_agents = 8\n[backend]\nmax_retries = 4\n")
    resolved = resolve_configs(path, {"update_cap": 0.06, "max_retries": None})

    assert resolved.control.update_cap == 0.06
    assert resolved.control.risk_threshold == 0.3
    assert resolved.control.priority_threshold == 0.75
    assert resolved.backend.max_retries == 4
    assert resolved.n_agents == 8
    assert resolved.n_days == 200


def test_unknown_run_key_is_rejected(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[run]\nn_agent = 8\n")
    with pytest.raises(InvalidConfigurationError):
        resolve_configs(path, {})


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--bogus"],
        ["run", "--seed", "42"],
        ["run", "--condition", "adaptive", "--seed", "42"],
        ["run", "--condition", "closed", "--seed", "42", "--risk-threshold", "1.5"],
        ["run", "--condition", "closed", "--seed", "42", "--backend", "oracle"],
        ["suite", "--seeds", "300,x"],
        ["verify", "does-not-exist.jsonl"],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path):
    assert main(argv + ["--output-dir", str(tmp_path)]) == EXIT_USAGE


def test_unknown_config_section_exits_1(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"dynamic": {}}))
    assert main(["run", "--condition", "baseline", "--seed", "1", "--config", str(path)]) == EXIT_USAGE


def test_verify_passes_then_fails_after_tampering(saturating_config, tmp_path, capsys):
    out_dir = tmp_path / "out"
    assert main(["run", "--condition", "closed", "--seed", "42", "--config", str(saturating_config),
                 "--output-dir", str(out_dir)]) == EXIT_OK
    audit = out_dir / "audit" / "closed_seed42.jsonl"
    capsys.readouterr()

    assert main(["verify", str(audit), "--config", str(saturating_config)]) == EXIT_OK
    assert capsys.readouterr().out.startswith("verified: 4 decision(s)")

    lines = audit.read_text().splitlines()
    record = json.loads(lines[1])
    record["decision"]["delta_theta_t"] = -0.03
    lines[1] = json.dumps(record)
    audit.write_text("\n".join(lines) + "\n")

    assert main(["verify", str(audit), "--config", str(saturating_config)]) == EXIT_VERIFICATION
    out = capsys.readouterr().out
    assert "day(s) 14" in out
    assert "delta_theta_t" in out


def test_verify_black_box_is_informational(tmp_path, capsys):
    assert main(["run", "--condition", "blackbox", "--seed", "300", "--n-agents", "8", "--n-days", "14",
                 "--output-dir", str(tmp_path)]) == EXIT_OK
    capsys.readouterr()
    assert main(["verify", str(tmp_path / "audit" / "blackbox_seed300.jsonl")]) == EXIT_OK
    assert capsys.readouterr().out.startswith("not replayable")


def test_backend_down_exits_3(dead_endpoint, tmp_path):
    argv = [
        "run", "--condition", "closed", "--seed", "42", "--n-agents", "6", "--n-days", "7",
        "--backend", "llm", "--endpoint-url", dead_endpoint, "--max-retries", "0",
        "--timeout-ms", "500", "--diagnose-all", "true", "--output-dir", str(tmp_path),
    ]
    assert main(argv) == EXIT_BACKEND


def test_suite_then_stats(tmp_path, capsys):
    argv = ["suite", "--seeds", "300,400", "--conditions", "baseline,closed", "--n-agents", "8",
            "--n-days", "14", "--output-dir", str(tmp_path)]
    assert main(argv) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "results.csv")) == 4
    (tmp_path / "pairwise.json").unlink()
    capsys.readouterr()

    assert main(["stats", "--output-dir", str(tmp_path), "--welch"]) == EXIT_OK
    pairwise = json.loads((tmp_path / "pairwise.json").read_text())
    assert [(row["group_a"], row["group_b"]) for row in pairwise] == [("Closed-Loop", "Baseline")]
    assert pairwise[0]["equal_var"] is False
    assert "Closed-Loop vs Baseline" in capsys.readouterr().out


def test_stats_without_results_exits_1(tmp_path):
    assert main(["stats", "--output-dir", str(tmp_path)]) == EXIT_USAGE


def test_export_writes_trajectory(tmp_path, capsys):
    assert main(["export", "--condition", "fixed", "--seed", "42", "--n-agents", "8", "--n-days", "21",
                 "--output-dir", str(tmp_path)]) == EXIT_OK
    frame = pd.read_csv(tmp_path / "trajectory_fixed_seed42.csv")
    assert len(frame) == 22
    assert "trajectory=" in capsys.readouterr().out


def test_sensitivity_command(tmp_path):
    argv = ["sensitivity", "--seeds", "300", "--n-agents", "8", "--n-days", "14", "--output-dir", str(tmp_path)]
    assert main(argv) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "sensitivity.csv")) == 7


def test_identical_invocations_write_identical_files(tmp_path):
    commands = [
        ["suite", "--seeds", "300,400", "--conditions", "baseline,closed", "--n-agents", "8", "--n-days", "14"],
        ["export", "--condition", "closed", "--seed", "300", "--n-agents", "8", "--n-days", "14"],
    ]

    def invoke_all():
        for argv in commands:
            assert main(argv + ["--output-dir", str(tmp_path)]) == EXIT_OK
        return {
            path.relative_to(tmp_path): path.read_bytes()
            for path in sorted(tmp_path.rglob("*"))
            if path.is_file()
        }

    first = invoke_all()
    assert {"results.csv", "summary.json", "pairwise.json", "trajectory_closed_seed300.csv"} <= {
        path.name for path in first
    }
    assert invoke_all() == first
