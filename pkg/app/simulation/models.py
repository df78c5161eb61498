"""
Simulation State Models
AgentState, SocialNetwork, PolicyParams and the World that ties them to one RNG.
"""
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Deque, Dict, List, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from app.simulation.config import DynamicsConfig


# Hard bounds of the three policy levers
THETA_S_BOUNDS: Tuple[float, float] = (0.8, 1.5)
THETA_T_BOUNDS: Tuple[float, float] = (0.4, 0.6)
THETA_P_BOUNDS: Tuple[float, float] = (0.15, 0.5)

POLICY_BOUNDS: Dict[str, Tuple[float, float]] = {
    "theta_s": THETA_S_BOUNDS,
    "theta_t": THETA_T_BOUNDS,
    "theta_p": THETA_P_BOUNDS,
}

# Repeated +/- steps must land exactly on the bounds (0.6 - 10 * 0.02 == 0.4)
PARAM_DECIMALS = 10

INTERACTION_WINDOW_DAYS = 7


def clip_unit(value: float) -> float:
    return min(1.0, max(0.0, value))


def clip_param(name: str, value: float) -> float:
    low, high = POLICY_BOUNDS[name]
    return round(min(high, max(low, float(value))), PARAM_DECIMALS)


@dataclass(slots=True)
class AgentState:
    """One resident. baseline_loneliness and age are fixed after init."""

    id: int
    loneliness: float
    frailty: float
    stress: float
    energy: float
    baseline_loneliness: float
    age: int

    def clip(self) -> None:
        self.loneliness = clip_unit(self.loneliness)
        self.frailty = clip_unit(self.frailty)
        self.stress = clip_unit(self.stress)
        self.energy = clip_unit(self.energy)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "loneliness": self.loneliness,
            "frailty": self.frailty,
            "stress": self.stress,
            "energy": self.energy,
            "baseline_loneliness": self.baseline_loneliness,
            "age": self.age,
        }


class SocialNetwork:
    """Undirected, simple graph of ties between agent ids (no self loops)"""

    def __init__(self, n_agents: int):
        self.graph = nx.Graph()
        self.graph.add_nodes_from(range(n_agents))

    def add_tie(self, i: int, j: int) -> None:
        if i == j:
            raise ValueError(f"self loop on agent {i}")
        self.graph.add_edge(i, j)

    def has_tie(self, i: int, j: int) -> bool:
        return self.graph.has_edge(i, j)

    def degree(self, i: int) -> int:
        return self.graph.degree[i]

    def edges(self) -> List[Tuple[int, int]]:
        """Edges as (low, high) pairs in lexicographic order"""
        return sorted((min(i, j), max(i, j)) for i, j in self.graph.edges())

    def non_edges(self) -> List[Tuple[int, int]]:
        n = self.graph.number_of_nodes()
        return [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if not self.graph.has_edge(i, j)
        ]

    def number_of_ties(self) -> int:
        return self.graph.number_of_edges()

    def clear(self) -> None:
        self.graph.remove_edges_from(list(self.graph.edges()))


class PolicyParams(BaseModel):
    """
    The three controlled levers. Every construction clips into the hard
    bounds; instances are immutable, so "mutation" means building a new one.
    """

    model_config = ConfigDict(frozen=True)

    theta_s: float = 1.0
    theta_t: float = 0.6
    theta_p: float = 0.3

    @field_validator("theta_s", "theta_t", "theta_p", mode="after")
    @classmethod
    def _clip(cls, v: float, info) -> float:
        return clip_param(info.field_name, v)

    def adjusted(self, delta_s: float = 0.0, delta_t: float = 0.0, delta_p: float = 0.0) -> "PolicyParams":
        return PolicyParams(
            theta_s=self.theta_s + delta_s,
            theta_t=self.theta_t + delta_t,
            theta_p=self.theta_p + delta_p,
        )

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.theta_s, self.theta_t, self.theta_p)


FIXED_POLICY = PolicyParams(theta_s=1.0, theta_t=0.6, theta_p=0.3)


@dataclass
class World:
    """Full simulation state for one run"""

    agents: List[AgentState]
    network: SocialNetwork
    rng: np.random.Generator
    dynamics: DynamicsConfig
    day: int = 0
    interaction_log: Deque[List[int]] = field(
        default_factory=lambda: deque(maxlen=INTERACTION_WINDOW_DAYS)
    )
    visits_today: int = 0
    total_visits: int = 0
    event_participants_today: int = 0

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def interaction_history(self, agent_id: int) -> List[int]:
        """Per-day interaction counts of one agent, oldest first (at most 7 days)"""
        return [day_counts[agent_id] for day_counts in self.interaction_log]

    def to_dict(self) -> Dict[str, Any]:
        """Complete, comparable snapshot including the generator state"""
        return {
            "day": self.day,
            "agents": [a.to_dict() for a in self.agents],
            "edges": self.network.edges(),
            "rng_state": self.rng.bit_generator.state,
            "interaction_log": [list(day) for day in self.interaction_log],
            "visits_today": self.visits_today,
            "total_visits": self.total_visits,
            "event_participants_today": self.event_participants_today,
        }
