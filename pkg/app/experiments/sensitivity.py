"""
Sensitivity Sweep
One-factor-at-a-time variants of the closed-loop thresholds and cap, each run
on the same seeds and compared with the baseline configuration.
"""
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel

from app.audit.log import AuditLog
from app.audit.replay import recompute
from app.control.models import ControlConfig
from app.core.exceptions import InvalidConfigurationError
from app.diagnosis.models import BackendConfig
from app.experiments.conditions import Condition
from app.experiments.runner import simulate
from app.experiments.stats import summarize
from app.simulation.config import DynamicsConfig

logger = logging.getLogger(__name__)


SENSITIVITY_FILE = "sensitivity.csv"
SENSITIVITY_SEEDS = (300, 400)

SENSITIVITY_GRID: List[Tuple[str, float]] = [
    ("risk_threshold", 0.30),
    ("risk_threshold", 0.50),
    ("priority_threshold", 0.65),
    ("priority_threshold", 0.85),
    ("update_cap", 0.03),
    ("update_cap", 0.08),
]

SENSITIVITY_COLUMNS = ["parameter", "value", "mean", "sd", "min", "max", "delta_pct", "replay_identical"]


class SensitivityRow(BaseModel):
    parameter: str
    value: Optional[float] = None
    mean: float
    sd: Optional[float] = None
    min: float
    max: float
    delta_pct: float = 0.0
    # Variant reproduces every baseline decision on the baseline's recorded stats
    replay_identical: Optional[bool] = None


def variant_config(base: ControlConfig, parameter: str, value: float) -> ControlConfig:
    if parameter == "update_cap":
        return base.with_cap(value)
    if parameter not in ControlConfig.model_fields:
        raise InvalidConfigurationError(f"unknown control parameter {parameter!r}")
    return ControlConfig(**{**base.model_dump(), parameter: value})


def same_decisions(logs: Sequence[AuditLog], config: ControlConfig) -> bool:
    """
    True when `config` makes the same parameter moves as the logged ones on
    every recorded cycle. Threshold values inside the rule evaluations are
    allowed to differ; only deltas and resulting parameters count.
    """
    for log in logs:
        for record in log:
            decision = recompute(record, config)
            if decision.deltas() != record.decision.deltas() or decision.new_params != record.decision.new_params:
                return False
    return True


def sensitivity_sweep(
    base: ControlConfig,
    seeds: Sequence[int] = SENSITIVITY_SEEDS,
    dynamics: Optional[DynamicsConfig] = None,
    backend: Optional[BackendConfig] = None,
    n_agents: Optional[int] = None,
    n_days: Optional[int] = None,
    grid: Sequence[Tuple[str, float]] = SENSITIVITY_GRID,
) -> List[SensitivityRow]:
    """Baseline row first, then one row per grid entry in order"""
    if not seeds:
        raise InvalidConfigurationError("sensitivity_sweep needs at least one seed")

    def run(config: ControlConfig) -> Tuple[List[float], List[AuditLog]]:
        finals, logs = [], []
        for seed in seeds:
            result, log = simulate(
                Condition.CLOSED_LOOP, seed, dynamics, config, backend, n_agents=n_agents, n_days=n_days
            )
            finals.append(result.final_mean_loneliness)
            logs.append(log)
        return finals, logs

    base_finals, base_logs = run(base)
    base_summary = summarize(base_finals)
    rows = [SensitivityRow(parameter="baseline", **base_summary.model_dump(exclude={"n"}))]

    for parameter, value in grid:
        config = variant_config(base, parameter, value)
        finals, _ = run(config)
        summary = summarize(finals)
        delta = (summary.mean - base_summary.mean) / base_summary.mean * 100.0
        identical = same_decisions(base_logs, config)
        rows.append(
            SensitivityRow(
                parameter=parameter,
                value=value,
                delta_pct=delta,
                replay_identical=identical,
                **summary.model_dump(exclude={"n"}),
            )
        )
        logger.info(f"[Sensitivity] {parameter}={value}: mean {summary.mean:.4f} ({delta:+.1f}%)")

    return rows


def write_sensitivity_csv(rows: Sequence[SensitivityRow], output_dir: Path) -> Path:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    path = output_dir / SENSITIVITY_FILE
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=SENSITIVITY_COLUMNS)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path
