"""
Heuristic Diagnosis Backend
Deterministic stand-in for the LLM: a pure function of agent state and degree,
so whole runs are reproducible offline.
"""
from app.diagnosis.models import Diagnosis, label_for
from app.simulation.models import AgentState, clip_unit


# Degree at which the isolation term of the social priority vanishes
ISOLATION_DEGREE = 6.0

# Ordered: ties go to the first entry
DRIVER_TABLE = (
    ("loneliness", "Social isolation"),
    ("frailty", "Health decline"),
    ("stress", "Elevated stress"),
)


def primary_driver(agent: AgentState) -> str:
    best_label = DRIVER_TABLE[0][1]
    best_value = -1.0
    for attr, label in DRIVER_TABLE:
        value = getattr(agent, attr)
        if value > best_value:
            best_value = value
            best_label = label
    return best_label


def heuristic_diagnose(agent: AgentState, degree: int) -> Diagnosis:
    risk = clip_unit(0.5 * agent.loneliness + 0.3 * agent.frailty + 0.2 * agent.stress)
    isolation = max(0.0, 1.0 - degree / ISOLATION_DEGREE)
    return Diagnosis(
        agent_id=agent.id,
        risk_loneliness=risk,
        risk_label=label_for(risk),
        risk_frailty_label=label_for(agent.frailty),
        primary_driver=primary_driver(agent),
        priority_social=clip_unit(0.6 * agent.loneliness + 0.4 * isolation),
        priority_visit=clip_unit(0.5 * agent.loneliness + 0.5 * agent.frailty),
    )
