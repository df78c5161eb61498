import json
from pathlib import Path

import pytest

from app.audit.log import AuditLog
from app.audit.models import AuditRecord, config_digest
from app.audit.replay import replay_verify
from app.control.models import ControlConfig
from app.core.exceptions import AuditIntegrityError
from app.diagnosis.models import Diagnosis
from app.experiments.conditions import Condition
from app.experiments.runner import simulate
from app.simulation.config import DynamicsConfig
from app.simulation.models import PolicyParams


@pytest.fixture
def closed_loop_run(saturating_dynamics, tmp_path):
    result, log = simulate(
        Condition.CLOSED_LOOP,
        42,
        dynamics=saturating_dynamics,
        n_agents=10,
        n_days=28,
        audit_dir=tmp_path / "audit",
    )
    return result, log


def _tampered(record, **decision_updates):
    decision = record.decision.model_copy(update=decision_updates)
    return record.model_copy(update={"decision": decision})


def test_one_record_per_cycle(closed_loop_run):
    _, log = closed_loop_run
    assert [r.day for r in log] == [7, 14, 21, 28]
    for previous, current in zip(log.records, log.records[1:]):
        assert current.prior_params == previous.decision.new_params
    assert log.last.day == 28


def test_records_carry_run_metadata(closed_loop_run, saturating_dynamics):
    _, log = closed_loop_run
    first = log.records[0]
    assert first.seed == 42
    assert first.condition == Condition.CLOSED_LOOP
    assert first.backend_kind.value == "heuristic"
    assert first.prompt_hash is None
    assert first.raw_responses is None
    assert first.config_hash == config_digest(ControlConfig(), saturating_dynamics)


def test_file_mirror_matches_memory(closed_loop_run):
    result, log = closed_loop_run
    with open(result.audit_path, encoding="utf-8", newline="") as fh:
        on_disk = fh.read()
    assert on_disk == log.dumps()
    assert on_disk.count("\n") == 4


def test_text_round_trip_is_byte_identical(closed_loop_run, tmp_path):
    _, log = closed_loop_run
    text = log.dumps()
    assert AuditLog.loads(text).dumps() == text

    path = log.write(tmp_path / "copy.jsonl")
    assert path.read_bytes() == text.encode("utf-8")
    assert [r.day for r in AuditLog.read(path)] == [7, 14, 21, 28]


def test_out_of_order_day_is_refused(closed_loop_run):
    _, log = closed_loop_run
    fresh = AuditLog()
    fresh.append(log.records[1])
    with pytest.raises(AuditIntegrityError, match="does not follow"):
        fresh.append(log.records[0])
    with pytest.raises(AuditIntegrityError):
        fresh.append(log.records[1])


def test_broken_parameter_chain_is_refused(closed_loop_run):
    _, log = closed_loop_run
    fresh = AuditLog()
    fresh.append(log.records[0])
    bad = log.records[1].model_copy(update={"prior_params": PolicyParams(theta_s=1.4)})
    with pytest.raises(AuditIntegrityError, match="prior_params"):
        fresh.append(bad)
    assert len(fresh) == 1


def test_invalid_line_names_its_position(closed_loop_run):
    _, log = closed_loop_run
    lines = log.dumps().splitlines()
    lines[1] = lines[1].replace('"backend_kind":"heuristic"', '"backend_kind":"oracle"')
    with pytest.raises(AuditIntegrityError, match="line 2 \\(day 14\\)"):
        AuditLog.loads("\n".join(lines))


def test_non_utf8_file_is_rejected(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_bytes(b"\xff\xfe\x00garbage")
    with pytest.raises(AuditIntegrityError):
        AuditLog.read(path)


def test_replay_verifies_an_untouched_log(closed_loop_run, saturating_dynamics):
    _, log = closed_loop_run
    verdict = replay_verify(log, ControlConfig(), saturating_dynamics)
    assert verdict.verified
    assert verdict.records_checked == 4
    assert verdict.config_hash_matches is True
    assert verdict.summary().startswith("verified")


def test_replay_flags_the_tampered_day(closed_loop_run):
    _, log = closed_loop_run
    records = list(log)
    assert records[1].decision.delta_theta_t == -0.02
    records[1] = _tampered(records[1], delta_theta_t=-0.03)
    tampered = AuditLog.loads("".join(r.to_line() + "\n" for r in records))

    verdict = replay_verify(tampered, ControlConfig())
    assert not verdict.verified
    assert verdict.mismatched_days == [14]
    assert [m.field for m in verdict.mismatches] == ["delta_theta_t"]
    assert verdict.mismatches[0].recorded == -0.03
    assert verdict.mismatches[0].recomputed == -0.02
    assert "day(s) 14" in verdict.summary()


def test_replay_under_other_thresholds_disagrees(closed_loop_run):
    _, log = closed_loop_run
    verdict = replay_verify(log, ControlConfig(priority_threshold=0.99))
    assert not verdict.verified
    assert 7 in verdict.mismatched_days


def test_config_hash_difference_is_reported_not_failed(closed_loop_run):
    _, log = closed_loop_run
    verdict = replay_verify(log, ControlConfig(), DynamicsConfig())
    assert verdict.config_hash_matches is False
    assert verdict.verified


def test_empty_log_verifies():
    verdict = replay_verify(AuditLog(), ControlConfig())
    assert verdict.verified
    assert verdict.records_checked == 0


def test_mapping_log_replays():
    _, log = simulate(Condition.LLM_MAPPING, 300, n_agents=12, n_days=42)
    assert len(log) == 6
    assert replay_verify(log, ControlConfig()).verified


def test_black_box_log_is_not_replayable():
    _, log = simulate(Condition.BLACK_BOX, 300, n_agents=10, n_days=14)
    verdict = replay_verify(log, ControlConfig())
    assert not verdict.replayable
    assert not verdict.verified
    assert len(verdict.raw_proposals) == 2
    assert verdict.raw_proposals[0]["day"] == 7
    assert set(verdict.raw_proposals[0]["proposal"]) == {"theta_s", "theta_t", "theta_p"}
    assert verdict.summary().startswith("not replayable")


def test_published_schemas_match_models():
    root = Path(__file__).resolve().parent.parent / "schema"
    audit_schema = json.loads((root / "audit_record.schema.json").read_text())
    diagnosis_schema = json.loads((root / "diagnosis.schema.json").read_text())

    assert set(audit_schema["required"]) == set(AuditRecord.model_json_schema()["required"])
    assert set(audit_schema["properties"]) == set(AuditRecord.model_fields)
    assert set(diagnosis_schema["required"]) == set(Diagnosis.model_json_schema()["required"])
