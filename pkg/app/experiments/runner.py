"""
Condition Runner
Runs one (condition, seed) pair end to end: world init, daily steps, weekly
diagnosis and control, audit log and the per-day series.
"""
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, Field

from app.audit.log import AuditLog
from app.audit.models import AuditRecord, config_digest
from app.control.black_box import SurrogateProposer, black_box_update, proposal_template_hash
from app.control.models import ControlConfig, ControlDecision
from app.control.rules import closed_loop_update, mapping_decision
from app.core.config import settings
from app.core.exceptions import BackendUnavailableError, InvalidConfigurationError, RunAbortedError
from app.diagnosis.models import BackendConfig, MacroStats
from app.diagnosis.ollama_client import OllamaClient, TextGenerator
from app.diagnosis.service import DiagnosisLayer
from app.experiments.conditions import WIRING, Condition, seed_split
from app.simulation.config import DIAGNOSIS_PERIOD, DynamicsConfig
from app.simulation.engine import advance_day, init_world
from app.simulation.export import TRAJECTORY_COLUMNS, TrajectoryRecorder
from app.simulation.models import FIXED_POLICY, PolicyParams

logger = logging.getLogger(__name__)


class RunResult(BaseModel):
    seed: int
    condition: Condition
    split: str = "holdout"
    final_mean_loneliness: float
    daily_means: List[float]
    param_history: List[Optional[PolicyParams]]
    daily_visits: List[int] = Field(default_factory=list)
    daily_high_risk: List[int] = Field(default_factory=list)
    visit_count: int = 0
    llm_call_count: int = 0
    audit_path: Optional[str] = None

    def to_frame(self) -> pd.DataFrame:
        """Per-day trajectory in the export column layout"""
        rows = []
        for day, mean in enumerate(self.daily_means):
            params = self.param_history[day]
            rows.append({
                "day": day,
                "mean_loneliness": mean,
                "theta_s": params.theta_s if params else None,
                "theta_t": params.theta_t if params else None,
                "theta_p": params.theta_p if params else None,
                "visits_today": self.daily_visits[day],
                "high_risk_count": self.daily_high_risk[day],
            })
        return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)


def audit_filename(condition: Condition, seed: int) -> str:
    return f"{condition.value}_seed{seed}.jsonl"


def _controller_step(
    condition: Condition,
    stats: MacroStats,
    params: PolicyParams,
    control: ControlConfig,
    backend: BackendConfig,
    proposer: Optional[TextGenerator],
    transcript: List[str],
) -> ControlDecision:
    controller = WIRING[condition].controller
    if controller == "closed_loop":
        return closed_loop_update(stats, params, control)
    if controller == "mapping":
        return mapping_decision(stats, params)
    if controller == "black_box":
        return black_box_update(stats, params, backend, proposer, transcript)
    return ControlDecision.hold(params)


def simulate(
    condition: Condition,
    seed: int,
    dynamics: Optional[DynamicsConfig] = None,
    control: Optional[ControlConfig] = None,
    backend: Optional[BackendConfig] = None,
    n_agents: Optional[int] = None,
    n_days: Optional[int] = None,
    audit_dir: Optional[Path] = None,
    generator: Optional[TextGenerator] = None,
    proposer: Optional[TextGenerator] = None,
) -> Tuple[RunResult, AuditLog]:
    """
    run_condition plus the in-memory audit log.

    `generator` replaces the diagnosis backend client and `proposer` the
    black-box backend (tests pass stubs). Without a proposer the black-box
    arm asks the LLM client when the backend is an LLM and the seeded
    surrogate otherwise.
    """
    dynamics = dynamics or DynamicsConfig()
    control = control or ControlConfig()
    backend = backend or BackendConfig()
    n_agents = settings.N_AGENTS if n_agents is None else n_agents
    n_days = settings.N_DAYS if n_days is None else n_days
    if n_days < 1:
        raise InvalidConfigurationError(f"n_days must be >= 1, got {n_days}")

    wiring = WIRING[condition]
    audit_path = Path(audit_dir) / audit_filename(condition, seed) if audit_dir is not None else None
    log = AuditLog(audit_path)

    world = init_world(seed, n_agents, dynamics)
    params: Optional[PolicyParams] = FIXED_POLICY if wiring.interventions else None

    layer: Optional[DiagnosisLayer] = None
    owned_client: Optional[OllamaClient] = None
    if wiring.diagnosis:
        if backend.is_llm and generator is None:
            generator = owned_client = OllamaClient(backend)
        layer = DiagnosisLayer(backend, generator)
    if wiring.controller == "black_box" and proposer is None:
        proposer = generator if backend.is_llm else SurrogateProposer(seed)

    config_hash = config_digest(control, dynamics)
    proposal_hash = proposal_template_hash() if wiring.controller == "black_box" else None

    recorder = TrajectoryRecorder()
    recorder.record(world, params)
    history: List[Optional[PolicyParams]] = [params]
    llm_calls = 0

    try:
        for _ in range(n_days):
            advance_day(world, params)

            if layer is not None and world.day % DIAGNOSIS_PERIOD == 0:
                cycle = layer.run_cycle(world)
                transcript: List[str] = []
                decision = _controller_step(
                    condition, cycle.stats, params, control, backend, proposer, transcript
                )
                proposal_calls = len(transcript) if backend.is_llm else 0
                llm_calls += cycle.llm_calls + proposal_calls

                raw = None
                if backend.is_llm and backend.store_raw_responses:
                    raw = cycle.raw_responses + transcript
                log.append(
                    AuditRecord(
                        day=world.day,
                        seed=seed,
                        condition=condition,
                        macro_stats=cycle.stats,
                        prior_params=params,
                        decision=decision,
                        backend_kind=backend.kind,
                        llm_calls=cycle.llm_calls + proposal_calls,
                        skipped_agents=cycle.skipped_agents,
                        prompt_hash=cycle.prompt_hash,
                        proposal_prompt_hash=proposal_hash,
                        raw_responses=raw,
                        config_hash=config_hash,
                    )
                )
                params = decision.new_params

            recorder.record(world, params)
            history.append(params)
    except BackendUnavailableError as e:
        logger.error(f"[Runner] {condition.value} seed={seed} aborted on day {world.day}: {e}")
        raise RunAbortedError(
            f"{condition.value} seed {seed} aborted on day {world.day}: {e}",
            condition=condition.value,
            seed=seed,
            audit_path=audit_path,
        ) from e
    finally:
        if isinstance(generator, OllamaClient):
            generator.log_latency_summary()
        if owned_client is not None:
            owned_client.close()

    daily_means = recorder.column("mean_loneliness")
    result = RunResult(
        seed=seed,
        condition=condition,
        split=seed_split(seed),
        final_mean_loneliness=daily_means[-1],
        daily_means=daily_means,
        param_history=history,
        daily_visits=recorder.column("visits_today"),
        daily_high_risk=recorder.column("high_risk_count"),
        visit_count=world.total_visits,
        llm_call_count=llm_calls,
        audit_path=str(audit_path) if audit_path is not None else None,
    )
    logger.info(
        f"[Runner] {condition.value} seed={seed}: final mean loneliness "
        f"{result.final_mean_loneliness:.4f}, {result.visit_count} visits, {llm_calls} LLM calls"
    )
    return result, log


def run_condition(
    condition: Condition,
    seed: int,
    dynamics: Optional[DynamicsConfig] = None,
    control: Optional[ControlConfig] = None,
    backend: Optional[BackendConfig] = None,
    **kwargs,
) -> RunResult:
    result, _ = simulate(condition, seed, dynamics, control, backend, **kwargs)
    return result
