# Simulation layer: agent state, social network and daily dynamics
from app.simulation.config import DynamicsConfig
from app.simulation.engine import (
    advance_day,
    apply_home_visits,
    apply_social_event,
    init_world,
    mean_loneliness,
    step_day,
    update_network,
)
from app.simulation.models import AgentState, PolicyParams, SocialNetwork, World

__all__ = [
    "AgentState",
    "DynamicsConfig",
    "PolicyParams",
    "SocialNetwork",
    "World",
    "advance_day",
    "apply_home_visits",
    "apply_social_event",
    "init_world",
    "mean_loneliness",
    "step_day",
    "update_network",
]
