"""
Diagnosis Prompt Builder
Fixed, versioned template; its hash goes into every LLM audit record so a run is
attributable to the exact prompt text.
"""
import hashlib
from typing import Sequence

from app.simulation.models import AgentState


PROMPT_TEMPLATE_VERSION = "diagnosis-v1"

SYSTEM_INSTRUCTIONS = """You are a care-facility risk assessor. You assess one resident at a time
from structured monitoring data and return a machine-readable assessment.

Reply with ONLY a JSON object, no prose and no markdown, with exactly these keys:
{
    "agent_id": <integer, copy from the data>,
    "risk_loneliness": <number in [0, 1]>,
    "risk_label": "Low" | "Medium" | "High",
    "risk_frailty_label": "Low" | "Medium" | "High",
    "primary_driver": "<short phrase naming the main driver of risk>",
    "priority_social": <number in [0, 1], priority of group social events>,
    "priority_visit": <number in [0, 1], priority of home visits>
}
risk_label must be High when risk_loneliness > 0.6, Medium when it is above 0.4,
Low otherwise."""

RESIDENT_TEMPLATE = """Resident data:
- agent_id: {agent_id}
- age: {age}
- loneliness: {loneliness:.2f}
- frailty: {frailty:.2f}
- stress: {stress:.2f}
- energy: {energy:.2f}
- social interactions over the past {window} day(s): {interactions}
- number of social ties (network degree): {degree}"""


def build_prompt(agent: AgentState, history: Sequence[int], degree: int) -> str:
    """
    Render the diagnosis prompt for one agent.

    Args:
        agent: current state
        history: per-day interaction counts, at most the last 7 days
        degree: number of ties in the social network
    """
    if len(history) > 7:
        raise ValueError(f"history covers {len(history)} days, at most 7 allowed")

    resident = RESIDENT_TEMPLATE.format(
        agent_id=agent.id,
        age=agent.age,
        loneliness=agent.loneliness,
        frailty=agent.frailty,
        stress=agent.stress,
        energy=agent.energy,
        window=len(history),
        interactions=int(sum(history)),
        degree=degree,
    )
    return f"{SYSTEM_INSTRUCTIONS}\n\n{resident}"


def template_hash(*templates: str) -> str:
    """sha256 over the version tag and the given template texts"""
    digest = hashlib.sha256()
    digest.update(PROMPT_TEMPLATE_VERSION.encode("utf-8"))
    for template in templates or (SYSTEM_INSTRUCTIONS, RESIDENT_TEMPLATE):
        digest.update(b"\x00")
        digest.update(template.encode("utf-8"))
    return digest.hexdigest()
