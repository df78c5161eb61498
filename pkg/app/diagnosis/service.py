"""
Diagnosis Layer Service
Selects who gets assessed, runs the configured backend per agent and reduces the
assessments to MacroStats. Individual diagnoses never leave this module.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

from app.core.exceptions import BackendUnavailableError, InvalidConfigurationError, SchemaViolationError
from app.diagnosis.heuristic import heuristic_diagnose
from app.diagnosis.models import (
    HIGH_RISK_THRESHOLD,
    BackendConfig,
    Diagnosis,
    DiagnosisCycle,
    FallbackPolicy,
    MacroStats,
)
from app.diagnosis.ollama_client import OllamaClient, TextGenerator
from app.diagnosis.parser import parse_response
from app.diagnosis.prompts import build_prompt, template_hash
from app.simulation.config import HIGH_RISK_LONELINESS
from app.simulation.models import AgentState, World

logger = logging.getLogger(__name__)


def select_diagnosable(world: World, diagnose_all: bool = False) -> List[int]:
    """Ids with loneliness above the cutoff, ascending (every id when diagnose_all)"""
    if diagnose_all:
        return [agent.id for agent in world.agents]
    return [agent.id for agent in world.agents if agent.loneliness > HIGH_RISK_LONELINESS]


def aggregate(diagnoses: Sequence[Diagnosis], population_size: int, day: int = 0) -> MacroStats:
    """
    r uses the full population as denominator; p_s and p_v are means over the
    diagnosed set and 0 when nothing was diagnosed.
    """
    if population_size < 1:
        raise InvalidConfigurationError(f"population_size must be >= 1, got {population_size}")
    if len(diagnoses) > population_size:
        raise InvalidConfigurationError(
            f"{len(diagnoses)} diagnoses for a population of {population_size}"
        )

    n = len(diagnoses)
    if n == 0:
        return MacroStats(r=0.0, p_s=0.0, p_v=0.0, n_diagnosed=0, day=day)

    high = sum(1 for d in diagnoses if d.risk_loneliness > HIGH_RISK_THRESHOLD)
    # fsum is exactly rounded, so the means do not depend on list order
    return MacroStats(
        r=high / population_size,
        p_s=math.fsum(d.priority_social for d in diagnoses) / n,
        p_v=math.fsum(d.priority_visit for d in diagnoses) / n,
        n_diagnosed=n,
        day=day,
    )


def llm_diagnose(
    agent: AgentState,
    history: Sequence[int],
    degree: int,
    config: BackendConfig,
    generator: TextGenerator,
    transcript: Optional[List[str]] = None,
) -> Optional[Diagnosis]:
    """
    Ask the model about one agent.

    Malformed answers are retried up to config.max_retries times; after that
    SkipAgent returns None and UseHeuristic substitutes heuristic_diagnose.
    An unreachable endpoint falls back to the heuristic only under UseHeuristic.
    Every raw answer is appended to `transcript` when one is passed.
    """
    prompt = build_prompt(agent, history, degree)
    attempts = config.max_retries + 1

    for attempt in range(1, attempts + 1):
        try:
            text = generator.generate(prompt)
        except BackendUnavailableError:
            if config.fallback == FallbackPolicy.USE_HEURISTIC:
                logger.warning(f"[DiagnosisLayer] Backend down, heuristic used for agent {agent.id}")
                return heuristic_diagnose(agent, degree)
            raise

        if transcript is not None:
            transcript.append(text)

        try:
            return parse_response(text, agent_id=agent.id)
        except SchemaViolationError as e:
            logger.warning(
                f"[DiagnosisLayer] Agent {agent.id} attempt {attempt}/{attempts}: {e.reason}"
            )

    if config.fallback == FallbackPolicy.USE_HEURISTIC:
        logger.info(f"[DiagnosisLayer] Using fallback for agent {agent.id}")
        return heuristic_diagnose(agent, degree)

    logger.info(f"[DiagnosisLayer] Agent {agent.id} skipped after {attempts} malformed answer(s)")
    return None


class DiagnosisLayer:
    """Runs one diagnosis cycle per call; only MacroStats go to the controller"""

    def __init__(self, config: Optional[BackendConfig] = None, generator: Optional[TextGenerator] = None):
        self.config = config or BackendConfig()
        self.generator = generator
        if self.config.is_llm and self.generator is None:
            self.generator = OllamaClient(self.config)
        self.prompt_hash = template_hash() if self.config.is_llm else None

    def is_configured(self) -> bool:
        return not self.config.is_llm or self.generator is not None

    def _diagnose_one(self, world: World, agent_id: int) -> tuple:
        agent = world.agents[agent_id]
        degree = world.network.degree(agent_id)
        if not self.config.is_llm:
            return heuristic_diagnose(agent, degree), []

        transcript: List[str] = []
        diagnosis = llm_diagnose(
            agent,
            world.interaction_history(agent_id),
            degree,
            self.config,
            self.generator,
            transcript,
        )
        return diagnosis, transcript

    def run_cycle(self, world: World) -> DiagnosisCycle:
        ids = select_diagnosable(world, self.config.diagnose_all)

        if self.config.is_llm and self.config.max_concurrency > 1 and len(ids) > 1:
            with ThreadPoolExecutor(max_workers=self.config.max_concurrency) as pool:
                outcomes = list(pool.map(lambda i: self._diagnose_one(world, i), ids))
        else:
            outcomes = [self._diagnose_one(world, i) for i in ids]

        diagnoses: List[Diagnosis] = []
        skipped: List[int] = []
        raw: List[str] = []
        for agent_id, (diagnosis, transcript) in zip(ids, outcomes):
            raw.extend(transcript)
            if diagnosis is None:
                skipped.append(agent_id)
            else:
                diagnoses.append(diagnosis)

        stats = aggregate(diagnoses, world.n_agents, day=world.day)
        logger.info(
            f"[DiagnosisLayer] Day {world.day}: r={stats.r:.3f} p_s={stats.p_s:.3f} "
            f"p_v={stats.p_v:.3f} |H|={stats.n_diagnosed}"
        )
        return DiagnosisCycle(
            stats=stats,
            llm_calls=len(raw),
            raw_responses=raw if self.config.store_raw_responses else [],
            prompt_hash=self.prompt_hash,
            skipped_agents=skipped,
        )

    def process(self, world: World) -> MacroStats:
        return self.run_cycle(world).stats
