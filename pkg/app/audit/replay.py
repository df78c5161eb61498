"""
Audit Replay
Recomputes every rule-based decision from the recorded statistics and prior
parameters and reports each field that differs from what was logged.
"""
import logging
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.audit.log import AuditLog
from app.audit.models import AuditRecord, config_digest
from app.control.models import ControlConfig, ControlDecision
from app.control.rules import closed_loop_update, mapping_decision
from app.experiments.conditions import WIRING, Condition
from app.simulation.config import DynamicsConfig

logger = logging.getLogger(__name__)


DECISION_FIELDS = ("delta_theta_s", "delta_theta_t", "delta_theta_p", "new_params", "fired_rules")


class Mismatch(BaseModel):
    day: int
    field: str
    recorded: Any
    recomputed: Any


class ReplayVerdict(BaseModel):
    condition: Optional[Condition] = None
    replayable: bool = True
    records_checked: int = 0
    mismatches: List[Mismatch] = Field(default_factory=list)
    config_hash_matches: Optional[bool] = None
    raw_proposals: List[Dict[str, Any]] = Field(default_factory=list)
    reason: Optional[str] = None

    @property
    def verified(self) -> bool:
        return self.replayable and not self.mismatches

    @property
    def mismatched_days(self) -> List[int]:
        return sorted({m.day for m in self.mismatches})

    def summary(self) -> str:
        if not self.replayable:
            return f"not replayable: {self.reason} ({len(self.raw_proposals)} raw proposal(s) attached)"
        if self.verified:
            return f"verified: {self.records_checked} decision(s) recomputed, 0 mismatches"
        days = ", ".join(str(d) for d in self.mismatched_days)
        return f"FAILED: {len(self.mismatches)} mismatch(es) on day(s) {days}"


def recompute(record: AuditRecord, config: ControlConfig) -> ControlDecision:
    controller = WIRING[record.condition].controller
    if controller == "closed_loop":
        return closed_loop_update(record.macro_stats, record.prior_params, config)
    if controller == "mapping":
        return mapping_decision(record.macro_stats, record.prior_params)
    raise ValueError(f"{record.condition.value} decisions cannot be recomputed")


def compare(record: AuditRecord, recomputed: ControlDecision) -> List[Mismatch]:
    mismatches = []
    for name in DECISION_FIELDS:
        recorded_value = getattr(record.decision, name)
        recomputed_value = getattr(recomputed, name)
        if recorded_value != recomputed_value:
            mismatches.append(
                Mismatch(
                    day=record.day,
                    field=name,
                    recorded=_plain(recorded_value),
                    recomputed=_plain(recomputed_value),
                )
            )
    return mismatches


def _plain(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def replay_verify(
    log: AuditLog,
    config: ControlConfig,
    dynamics: Optional[DynamicsConfig] = None,
) -> ReplayVerdict:
    """
    Closed-loop and mapping logs are recomputed record by record. Black-box
    logs get a "not replayable" verdict with their raw proposals attached.
    With `dynamics`, the config hash of every record is compared as well.
    """
    records = list(log)
    if not records:
        return ReplayVerdict()

    condition = records[0].condition
    verdict = ReplayVerdict(condition=condition)

    if dynamics is not None:
        expected = config_digest(config, dynamics)
        verdict.config_hash_matches = all(r.config_hash == expected for r in records)

    if not WIRING[condition].replayable:
        verdict.replayable = False
        verdict.reason = f"{condition.label} decisions come from a model, not from rules"
        for record in records:
            for firing in record.decision.fired_rules:
                entry = {"day": record.day, "proposal": firing.proposal, "violation": firing.violation}
                verdict.raw_proposals.append(entry)
        return verdict

    for record in records:
        if record.condition != condition:
            verdict.mismatches.append(
                Mismatch(day=record.day, field="condition", recorded=record.condition.value, recomputed=condition.value)
            )
            continue
        verdict.mismatches.extend(compare(record, recompute(record, config)))
        verdict.records_checked += 1

    if verdict.mismatches:
        logger.warning(f"[Replay] {verdict.summary()}")
    else:
        logger.info(f"[Replay] {verdict.summary()}")
    return verdict
