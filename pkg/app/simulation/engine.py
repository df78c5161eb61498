"""
Simulation Engine
Seeded daily-timestep dynamics for the care-facility population.

RNG discipline: every stochastic draw of a run comes from world.rng, in this order
  init_world   agents by ascending id (age, baseline, loneliness jitter, frailty,
               stress, energy), then one draw per pair (i < j) lexicographically
  step_day     one draw per edge (lexicographic), then one draw per visit-eligible
               agent (ascending id)
  update_network  one choice() of candidate pairs, then one draw per candidate
Changing this order changes every trajectory.
"""
import logging
import math
from typing import Optional

import numpy as np

from app.core.exceptions import InvalidConfigurationError
from app.simulation.config import (
    HIGH_RISK_LONELINESS,
    NETWORK_UPDATE_PERIOD,
    DynamicsConfig,
)
from app.simulation.models import (
    AgentState,
    PolicyParams,
    SocialNetwork,
    World,
    clip_unit,
)

logger = logging.getLogger(__name__)


def init_world(seed: int, n_agents: int, dynamics: Optional[DynamicsConfig] = None) -> World:
    """
    Build day 0 of a run. Everything random comes from one generator seeded
    with `seed`, so two calls with the same arguments give identical Worlds.
    """
    if n_agents < 2:
        raise InvalidConfigurationError(f"n_agents must be >= 2, got {n_agents}")

    dynamics = dynamics or DynamicsConfig()
    rng = np.random.default_rng(seed)

    age_low, age_high = dynamics.age_range
    agents = []
    for agent_id in range(n_agents):
        age = int(rng.integers(age_low, age_high + 1))
        baseline = float(rng.uniform(*dynamics.baseline_range))
        jitter = float(rng.uniform(-dynamics.loneliness_jitter, dynamics.loneliness_jitter))
        frailty = float(rng.uniform(*dynamics.frailty_range))
        stress = float(rng.uniform(*dynamics.stress_range))
        energy = float(rng.uniform(*dynamics.energy_range))
        agents.append(
            AgentState(
                id=agent_id,
                loneliness=clip_unit(baseline + jitter),
                frailty=frailty,
                stress=stress,
                energy=energy,
                baseline_loneliness=baseline,
                age=age,
            )
        )

    network = SocialNetwork(n_agents)
    edge_prob = dynamics.edge_probability(n_agents)
    for i in range(n_agents):
        for j in range(i + 1, n_agents):
            if rng.random() < edge_prob:
                network.add_tie(i, j)

    logger.debug(
        f"[Engine] World seed={seed} agents={n_agents} ties={network.number_of_ties()}"
    )
    return World(agents=agents, network=network, rng=rng, dynamics=dynamics)


def step_day(world: World, policy: Optional[PolicyParams]) -> World:
    """
    Advance one day in place and return the world.

    policy=None runs the day without any intervention (untreated population).
    """
    cfg = world.dynamics
    agents = world.agents
    counts = [0] * len(agents)
    world.visits_today = 0
    world.event_participants_today = 0

    # 1. Tie activations
    for i, j in world.network.edges():
        if world.rng.random() < cfg.interaction_prob:
            for k in (i, j):
                agents[k].loneliness -= cfg.beta_l
                agents[k].stress -= cfg.beta_l / 2
                counts[k] += 1

    # 2-5. Per-agent drift terms
    for agent in agents:
        agent.loneliness += cfg.alpha_l * (agent.baseline_loneliness - agent.loneliness)
        agent.stress += cfg.stress_coupling * (agent.loneliness - 0.5)
        agent.frailty += cfg.frailty_drift + cfg.frailty_stress_coeff * agent.stress
        agent.energy += cfg.energy_recovery

    # 6. Scheduled interventions
    if policy is not None:
        if world.day % cfg.event_period == 0:
            apply_social_event(world, policy.theta_s)
        apply_home_visits(world, policy.theta_t, policy.theta_p)

    # 7-9
    for agent in agents:
        agent.clip()
    world.interaction_log.append(counts)
    world.day += 1
    return world


def apply_social_event(world: World, theta_s: float) -> World:
    """
    Everyone with energy above the gate takes part: loneliness drops by
    event_effect * theta_s and the event costs energy.
    """
    cfg = world.dynamics
    participants = 0
    for agent in world.agents:
        if agent.energy > cfg.event_energy_gate:
            agent.loneliness -= cfg.event_effect * theta_s
            agent.energy -= cfg.event_energy_cost
            participants += 1

    world.event_participants_today = participants
    return world


def apply_home_visits(world: World, theta_t: float, theta_p: float) -> World:
    """
    Agents with loneliness above theta_t get one draw each (ascending id);
    a draw below theta_p is a successful visit.
    """
    cfg = world.dynamics
    visits = 0
    for agent in world.agents:
        if agent.loneliness > theta_t:
            if world.rng.random() < theta_p:
                agent.loneliness -= cfg.visit_loneliness_effect
                agent.stress -= cfg.visit_stress_effect
                visits += 1

    world.visits_today += visits
    world.total_visits += visits
    return world


def tie_probability(
    loneliness_i: float,
    loneliness_j: float,
    degree_i: int,
    degree_j: int,
    dynamics: DynamicsConfig,
) -> float:
    """Homophily in loneliness, damped by how connected the pair already is"""
    similarity = 1.0 - abs(loneliness_i - loneliness_j)
    saturation = math.exp(-(degree_i + degree_j) / (2.0 * dynamics.degree_saturation))
    return dynamics.tie_formation_rate * similarity * saturation


def update_network(world: World) -> World:
    """
    Weekly tie formation. Samples candidate pairs among non-adjacent agents
    without replacement; degrees are read live, so a tie formed earlier in the
    same pass counts for later candidates. Ties never dissolve.
    """
    cfg = world.dynamics
    candidates = world.network.non_edges()
    if not candidates or cfg.candidate_pairs_per_week == 0:
        return world

    size = min(cfg.candidate_pairs_per_week, len(candidates))
    picks = world.rng.choice(len(candidates), size=size, replace=False)

    formed = 0
    for index in picks:
        i, j = candidates[int(index)]
        p = tie_probability(
            world.agents[i].loneliness,
            world.agents[j].loneliness,
            world.network.degree(i),
            world.network.degree(j),
            cfg,
        )
        if world.rng.random() < p:
            world.network.add_tie(i, j)
            formed += 1

    logger.debug(f"[Engine] Day {world.day}: {formed}/{size} candidate ties formed")
    return world


def advance_day(world: World, policy: Optional[PolicyParams]) -> World:
    """step_day plus the weekly network update (days 7, 14, ...)"""
    step_day(world, policy)
    if world.day % NETWORK_UPDATE_PERIOD == 0:
        update_network(world)
    return world


def mean_loneliness(world: World) -> float:
    return float(np.mean([agent.loneliness for agent in world.agents]))


def high_risk_count(world: World) -> int:
    return sum(1 for agent in world.agents if agent.loneliness > HIGH_RISK_LONELINESS)
