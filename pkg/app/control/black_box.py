"""
Black-box Controller
The backend proposes the three parameter values directly from the macro
statistics. Bounds are enforced by clipping; no step cap and no rule logic.
"""
import json
import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.control.models import PARAM_NAMES, ControlDecision, RuleFiring
from app.core.exceptions import SchemaViolationError
from app.diagnosis.models import BackendConfig, MacroStats
from app.diagnosis.ollama_client import TextGenerator
from app.diagnosis.parser import extract_json_object
from app.diagnosis.prompts import template_hash
from app.simulation.models import PolicyParams

logger = logging.getLogger(__name__)


BLACK_BOX_RULE = "black-box"

# Offset between the run seed and the surrogate proposer's own generator
SURROGATE_SEED_OFFSET = 7919

PROPOSAL_TEMPLATE = """You set the intervention policy of a care facility for the next week.
Current population statistics and policy, as JSON:
{state}

theta_s is the social event intensity (0.8 to 1.5), theta_t the loneliness level
above which residents are eligible for a home visit (0.4 to 0.6), theta_p the
probability that an eligible resident is visited on a given day (0.15 to 0.5).
r is the share of residents at high loneliness risk, p_s and p_v the mean
priorities of social events and home visits among assessed residents.

Reply with ONLY a JSON object: {{"theta_s": <number>, "theta_t": <number>, "theta_p": <number>}}"""


class ParamProposal(BaseModel):
    model_config = ConfigDict(extra="ignore")

    theta_s: float = Field(allow_inf_nan=False)
    theta_t: float = Field(allow_inf_nan=False)
    theta_p: float = Field(allow_inf_nan=False)


def build_proposal_prompt(stats: MacroStats, params: PolicyParams) -> str:
    state = {
        "r": round(stats.r, 4),
        "p_s": round(stats.p_s, 4),
        "p_v": round(stats.p_v, 4),
        "theta_s": params.theta_s,
        "theta_t": params.theta_t,
        "theta_p": params.theta_p,
    }
    return PROPOSAL_TEMPLATE.format(state=json.dumps(state, sort_keys=True))


def proposal_template_hash() -> str:
    return template_hash(PROPOSAL_TEMPLATE)


def parse_proposal(text: str) -> ParamProposal:
    data = extract_json_object(text)
    try:
        return ParamProposal.model_validate(data)
    except ValidationError as e:
        raise SchemaViolationError(f"invalid proposal: {e.error_count()} error(s)", raw_text=text) from e


def black_box_update(
    stats: MacroStats,
    params: PolicyParams,
    backend: BackendConfig,
    generator: TextGenerator,
    transcript: Optional[List[str]] = None,
) -> ControlDecision:
    """
    Ask `generator` for new parameter values. A valid proposal is clipped into
    bounds; after max_retries malformed answers the parameters are held and the
    violation is recorded in the decision.
    """
    prompt = build_proposal_prompt(stats, params)
    attempts = backend.max_retries + 1
    last_error: Optional[SchemaViolationError] = None

    for attempt in range(1, attempts + 1):
        text = generator.generate(prompt)
        if transcript is not None:
            transcript.append(text)
        try:
            proposal = parse_proposal(text)
        except SchemaViolationError as e:
            last_error = e
            logger.warning(f"[BlackBox] Day {stats.day} attempt {attempt}/{attempts}: {e.reason}")
            continue

        new_params = PolicyParams(**proposal.model_dump())
        firing = RuleFiring(
            rule_id=BLACK_BOX_RULE,
            targets=list(PARAM_NAMES),
            proposal=proposal.model_dump(),
        )
        return ControlDecision.between(params, new_params, [firing])

    logger.warning(f"[BlackBox] Day {stats.day}: holding parameters after {attempts} malformed proposal(s)")
    violation = RuleFiring(
        rule_id=BLACK_BOX_RULE,
        targets=[],
        violation=last_error.reason if last_error else "no proposal",
        proposal={"raw_text": last_error.raw_text} if last_error else None,
    )
    return ControlDecision.hold(params, [violation])


class SurrogateProposer:
    """
    Offline stand-in for the black-box model. Reads the statistics embedded in
    the proposal prompt and answers with jittered values from its own seeded
    generator, so the world's random stream is untouched.
    """

    def __init__(self, seed: int):
        self.rng = np.random.default_rng(seed + SURROGATE_SEED_OFFSET)

    def generate(self, prompt: str) -> str:
        state = extract_json_object(prompt)
        r, p_v = state["r"], state["p_v"]
        noise = self.rng.normal(0.0, (0.1, 0.05, 0.05))
        proposal = {
            "theta_s": round(1.0 + 0.5 * r + noise[0], 4),
            "theta_t": round(0.6 - 0.1 * p_v + noise[1], 4),
            "theta_p": round(0.2 + 0.2 * p_v + noise[2], 4),
        }
        return json.dumps(proposal)
