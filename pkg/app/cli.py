"""
Command-line front end.

Exit codes: 0 ok, 1 usage or configuration error, 2 audit verification
failure, 3 backend unavailable / run aborted.

Every flag has a config-file key; a flag given on the command line wins over
the file, the file wins over environment settings, which win over built-in
defaults.
"""
import logging
import sys
from dataclasses import dataclass, field
from functools import wraps
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
from pydantic import ValidationError

from app.audit.log import AuditLog
from app.audit.replay import replay_verify
from app.control.models import ControlConfig
from app.core.config import load_config_file, settings
from app.core.exceptions import (
    AuditIntegrityError,
    BackendUnavailableError,
    InsufficientSampleError,
    InvalidConfigurationError,
    RunAbortedError,
)
from app.diagnosis.models import BackendConfig
from app.experiments.conditions import HOLDOUT_SEEDS, Condition, parse_condition
from app.experiments.runner import run_condition
from app.experiments.sensitivity import SENSITIVITY_SEEDS, sensitivity_sweep, write_sensitivity_csv
from app.experiments.suite import RESULTS_FILE, recompute_stats, run_suite
from app.simulation.config import DynamicsConfig
from app.simulation.export import write_trajectory_csv
from app.utils.secure_logger import configure_logging, sanitize_log_data
from app.utils.validators import parse_seed_list

logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFICATION = 2
EXIT_BACKEND = 3

# CLI option name -> config-file key, per section
BACKEND_FLAGS = {
    "backend": "kind",
    "endpoint_url": "endpoint_url",
    "model_name": "model_name",
    "temperature": "temperature",
    "timeout_ms": "timeout_ms",
    "max_retries": "max_retries",
    "fallback": "fallback",
    "diagnose_all": "diagnose_all",
    "store_raw_responses": "store_raw_responses",
    "max_concurrency": "max_concurrency",
}
CONTROL_FLAGS = {
    "risk_threshold": "risk_threshold",
    "priority_threshold": "priority_threshold",
    "update_cap": "update_cap",
    "theta_t_step": "theta_t_step",
    "theta_p_step": "theta_p_step",
    "social_gain": "social_gain",
    "social_cap": "social_cap",
}
RUN_FLAGS = ("output_dir", "n_agents", "n_days")
RUN_KEYS = set(RUN_FLAGS) | {"seed", "seeds", "condition", "conditions", "workers", "welch"}


@dataclass
class ResolvedConfig:
    dynamics: DynamicsConfig
    control: ControlConfig
    backend: BackendConfig
    run: Dict[str, Any] = field(default_factory=dict)

    @property
    def output_dir(self) -> Path:
        return Path(self.run.get("output_dir") or settings.OUTPUT_DIR)

    @property
    def n_agents(self) -> int:
        return int(self.run.get("n_agents", settings.N_AGENTS))

    @property
    def n_days(self) -> int:
        return int(self.run.get("n_days", settings.N_DAYS))


def _merge(section: Dict[str, Any], flags: Dict[str, Any], mapping: Dict[str, str]) -> Dict[str, Any]:
    merged = dict(section)
    for flag, key in mapping.items():
        value = flags.get(flag)
        if value is not None:
            merged[key] = value
    return merged


def resolve_configs(config_path: Optional[Path], flags: Dict[str, Any]) -> ResolvedConfig:
    """Build the domain configs from the file sections with flags layered on top"""
    data = load_config_file(config_path)
    unknown = set(data.get("run", {})) - RUN_KEYS
    if unknown:
        raise InvalidConfigurationError(f"unknown [run] key(s) {sorted(unknown)}")
    run_section = _merge(data.get("run", {}), flags, {name: name for name in RUN_FLAGS})
    return ResolvedConfig(
        dynamics=DynamicsConfig(**data.get("dynamics", {})),
        control=ControlConfig(**_merge(data.get("control", {}), flags, CONTROL_FLAGS)),
        backend=BackendConfig(**_merge(data.get("backend", {}), flags, BACKEND_FLAGS)),
        run=run_section,
    )


def common_options(func):
    """Config file, output, population size and every backend/control flag"""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
                     help="JSON, TOML or YAML file with dynamics/control/backend/run sections."),
        click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path), default=None,
                     help="Directory for all outputs [run.output_dir]."),
        click.option("--n-agents", type=int, default=None, help="Population size [run.n_agents]."),
        click.option("--n-days", type=int, default=None, help="Simulated days [run.n_days]."),
        click.option("--backend", type=click.Choice(["heuristic", "llm"]), default=None,
                     help="Diagnosis backend [backend.kind]."),
        click.option("--endpoint-url", default=None, help="Ollama generate endpoint [backend.endpoint_url]."),
        click.option("--model-name", default=None, help="Model name [backend.model_name]."),
        click.option("--temperature", type=float, default=None, help="Sampling temperature [backend.temperature]."),
        click.option("--timeout-ms", type=int, default=None, help="Per-call timeout [backend.timeout_ms]."),
        click.option("--max-retries", type=int, default=None, help="Retries per call [backend.max_retries]."),
        click.option("--fallback", type=click.Choice(["skip_agent", "use_heuristic"]), default=None,
                     help="What to do with malformed model output [backend.fallback]."),
        click.option("--diagnose-all", type=click.BOOL, default=None,
                     help="true: diagnose every agent, not only high-loneliness ones [backend.diagnose_all]."),
        click.option("--store-raw-responses", type=click.BOOL, default=None,
                     help="Keep verbatim model output in the audit log [backend.store_raw_responses]."),
        click.option("--max-concurrency", type=int, default=None,
                     help="Parallel LLM calls per cycle [backend.max_concurrency]."),
        click.option("--risk-threshold", type=float, default=None, help="[control.risk_threshold]"),
        click.option("--priority-threshold", type=float, default=None, help="[control.priority_threshold]"),
        click.option("--update-cap", type=float, default=None, help="[control.update_cap]"),
        click.option("--theta-t-step", type=float, default=None, help="[control.theta_t_step]"),
        click.option("--theta-p-step", type=float, default=None, help="[control.theta_p_step]"),
        click.option("--social-gain", type=float, default=None, help="[control.social_gain]"),
        click.option("--social-cap", type=float, default=None,
                     help="Bound on the social escalation step, default update_cap [control.social_cap]."),
    ]
    for option in reversed(options):
        func = option(func)

    @wraps(func)
    def wrapper(config_path, **kwargs):
        resolved = resolve_configs(config_path, kwargs)
        logger.debug(f"[CLI] Backend {sanitize_log_data(resolved.backend.model_dump(mode='json'))}")
        return func(resolved=resolved, **{k: v for k, v in kwargs.items() if k not in _COMMON_NAMES})

    return wrapper


_COMMON_NAMES = set(BACKEND_FLAGS) | set(CONTROL_FLAGS) | set(RUN_FLAGS)


def _seeds(flag: Optional[str], resolved: ResolvedConfig, key: str, default: Sequence[int]) -> List[int]:
    if flag is not None:
        return parse_seed_list(flag)
    value = resolved.run.get(key)
    if value is None:
        return list(default)
    if isinstance(value, (list, tuple)):
        return parse_seed_list(",".join(str(v) for v in value))
    return parse_seed_list(str(value))


def _condition(flag: Optional[str], resolved: ResolvedConfig) -> Condition:
    value = flag if flag is not None else resolved.run.get("condition")
    if value is None:
        raise click.UsageError("--condition is required (or run.condition in the config file)")
    return parse_condition(str(value))


def _conditions(flag: Optional[str], resolved: ResolvedConfig) -> List[Condition]:
    value = flag if flag is not None else resolved.run.get("conditions")
    if value is None:
        return list(Condition)
    items = value if isinstance(value, (list, tuple)) else str(value).split(",")
    return [parse_condition(str(item)) for item in items if str(item).strip()]


def _single_seed(flag: Optional[int], resolved: ResolvedConfig) -> int:
    value = flag if flag is not None else resolved.run.get("seed")
    if value is None:
        raise click.UsageError("--seed is required (or run.seed in the config file)")
    return parse_seed_list(str(value))[0]


@click.group()
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default: LOG_LEVEL setting).")
@click.version_option(settings.VERSION, prog_name=settings.APP_NAME)
def cli(log_level):
    """Care-facility policy simulator: diagnosis, rule-based control and audit."""
    configure_logging(log_level or settings.LOG_LEVEL)


@cli.command()
@click.option("--condition", default=None, help="baseline, fixed, mapping, closed or blackbox [run.condition].")
@click.option("--seed", type=int, default=None, help="Random seed [run.seed].")
@common_options
def run(resolved: ResolvedConfig, condition, seed):
    """Run one condition for one seed and print the final mean loneliness."""
    cond = _condition(condition, resolved)
    seed_value = _single_seed(seed, resolved)
    result = run_condition(
        cond,
        seed_value,
        resolved.dynamics,
        resolved.control,
        resolved.backend,
        n_agents=resolved.n_agents,
        n_days=resolved.n_days,
        audit_dir=resolved.output_dir / "audit",
    )
    click.echo(f"final_mean_loneliness={result.final_mean_loneliness:.6f}")
    click.echo(f"audit={result.audit_path}")


@cli.command()
@click.option("--seeds", default=None, help="Comma separated seeds [run.seeds] (default: 300,400,500,600).")
@click.option("--conditions", default=None, help="Comma separated conditions [run.conditions] (default: all five).")
@click.option("--workers", type=int, default=None, help="Parallel processes [run.workers].")
@click.option("--welch", is_flag=True, default=False, help="Use Welch's t-test instead of pooled variance [run.welch].")
@common_options
def suite(resolved: ResolvedConfig, seeds, conditions, workers, welch):
    """Run every condition on every seed and write results, summary and pairwise files."""
    seed_list = _seeds(seeds, resolved, "seeds", HOLDOUT_SEEDS)
    outcome = run_suite(
        _conditions(conditions, resolved),
        seed_list,
        dynamics=resolved.dynamics,
        control=resolved.control,
        backend=resolved.backend,
        n_agents=resolved.n_agents,
        n_days=resolved.n_days,
        output_dir=resolved.output_dir,
        workers=workers if workers is not None else int(resolved.run.get("workers", 1)),
        equal_var=not (welch or bool(resolved.run.get("welch", False))),
        progress=sys.stderr.isatty(),
    )
    for key, group in outcome.summary.items():
        sd = f"{group.sd:.3f}" if group.sd is not None else "n/a"
        click.echo(f"{Condition(key).label:<14} mean={group.mean:.3f} sd={sd} n={group.n}")
    click.echo(f"results={resolved.output_dir / RESULTS_FILE}")
    if outcome.aborted:
        click.echo(f"{len(outcome.aborted)} run(s) aborted and excluded", err=True)
        return EXIT_BACKEND
    return EXIT_OK


@cli.command()
@click.option("--seeds", default=None, help="Comma separated seeds [run.seeds] (default: 300,400).")
@common_options
def sensitivity(resolved: ResolvedConfig, seeds):
    """One-factor-at-a-time sweep of the closed-loop thresholds and cap."""
    rows = sensitivity_sweep(
        resolved.control,
        _seeds(seeds, resolved, "seeds", SENSITIVITY_SEEDS),
        dynamics=resolved.dynamics,
        backend=resolved.backend,
        n_agents=resolved.n_agents,
        n_days=resolved.n_days,
    )
    for row in rows:
        value = "--" if row.value is None else f"{row.value:.2f}"
        click.echo(f"{row.parameter:<20} {value:>5} mean={row.mean:.3f} delta={row.delta_pct:+.1f}%")
    click.echo(f"sensitivity={write_sensitivity_csv(rows, resolved.output_dir)}")


@cli.command()
@click.option("--results", "results_path", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="results.csv to read (default: <output-dir>/results.csv).")
@click.option("--welch", is_flag=True, default=False, help="Use Welch's t-test [run.welch].")
@common_options
def stats(resolved: ResolvedConfig, results_path, welch):
    """Recompute summary.json and pairwise.json from an existing results.csv."""
    path = results_path or resolved.output_dir / RESULTS_FILE
    _, pairwise = recompute_stats(
        path, resolved.output_dir, equal_var=not (welch or bool(resolved.run.get("welch", False)))
    )
    for row in pairwise:
        improve = f"{row.improvement_pct:.1f}%" if row.improvement_pct is not None else "--"
        click.echo(
            f"{row.group_a} vs {row.group_b}: diff={row.mean_diff:+.3f} improve={improve} "
            f"d={row.cohens_d:+.2f} p={row.p_value:.3f}{row.significance}"
        )


@cli.command()
@click.argument("audit_file", type=click.Path(dir_okay=False, path_type=Path))
@common_options
def verify(resolved: ResolvedConfig, audit_file):
    """Recompute every rule-based decision in AUDIT_FILE; exit 2 on any mismatch."""
    if not audit_file.is_file():
        raise click.UsageError(f"audit file not found: {audit_file}")
    log = AuditLog.read(audit_file)
    verdict = replay_verify(log, resolved.control, resolved.dynamics)
    click.echo(verdict.summary())
    if verdict.config_hash_matches is False:
        click.echo("note: config hash differs from the one recorded in the log")
    for mismatch in verdict.mismatches:
        click.echo(f"  day {mismatch.day}: {mismatch.field} recorded={mismatch.recorded} recomputed={mismatch.recomputed}")
    if verdict.mismatches:
        raise AuditIntegrityError(f"replay mismatch on day(s) {', '.join(map(str, verdict.mismatched_days))}")


@cli.command()
@click.option("--condition", default=None, help="Condition to run [run.condition].")
@click.option("--seed", type=int, default=None, help="Random seed [run.seed].")
@common_options
def export(resolved: ResolvedConfig, condition, seed):
    """Write the per-day trajectory CSV (loneliness, parameters, visits) of one run."""
    cond = _condition(condition, resolved)
    seed_value = _single_seed(seed, resolved)
    result = run_condition(
        cond,
        seed_value,
        resolved.dynamics,
        resolved.control,
        resolved.backend,
        n_agents=resolved.n_agents,
        n_days=resolved.n_days,
        audit_dir=resolved.output_dir / "audit",
    )
    path = write_trajectory_csv(
        result.to_frame(), resolved.output_dir / f"trajectory_{cond.value}_seed{seed_value}.csv"
    )
    click.echo(f"trajectory={path}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point returning the exit code instead of raising SystemExit"""
    try:
        rv = cli.main(args=list(argv) if argv is not None else None, prog_name="care-sim", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except (InvalidConfigurationError, InsufficientSampleError, ValidationError) as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_USAGE
    except AuditIntegrityError as e:
        click.echo(f"Verification failed: {e}", err=True)
        return EXIT_VERIFICATION
    except (BackendUnavailableError, RunAbortedError) as e:
        click.echo(f"Backend unavailable: {e}", err=True)
        return EXIT_BACKEND
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
