"""
Rule-based Controllers
closed_loop_update: threshold rules with per-parameter capped steps.
llm_mapping_update: the fixed switching rule on the high-risk proportion.
Both are pure functions of their arguments.
"""
import logging
from typing import List

from app.control.models import ControlConfig, ControlDecision, RuleFiring, at_most, greater, less
from app.diagnosis.models import MacroStats
from app.simulation.models import THETA_P_BOUNDS, THETA_T_BOUNDS, PolicyParams

logger = logging.getLogger(__name__)


SOCIAL_RULE = "social_escalation"
VISIT_THRESHOLD_RULE = "visit_threshold_lowering"
VISIT_PROBABILITY_RULE = "visit_probability_raising"

MAPPING_RULE = "mapping_social_switch"
MAPPING_RISK_THRESHOLD = 0.4
MAPPING_HIGH_INTENSITY = 1.2
MAPPING_BASE_INTENSITY = 1.0
MAPPING_THETA_T = 0.6
MAPPING_THETA_P = 0.3


def closed_loop_update(stats: MacroStats, params: PolicyParams, config: ControlConfig) -> ControlDecision:
    """
    theta_s rises by min(social cap, gain * p_s) when r and p_s both exceed their
    thresholds. When p_v exceeds the priority threshold, theta_t steps down
    (while above its floor) and theta_p steps up (while below its ceiling).
    Comparisons are strict; deltas are the rule outputs, new_params are clipped.
    """
    fired: List[RuleFiring] = []
    delta_s = delta_t = delta_p = 0.0

    risk_check = greater("r", stats.r, config.risk_threshold)
    social_check = greater("p_s", stats.p_s, config.priority_threshold)
    if risk_check.holds and social_check.holds:
        delta_s = min(config.social_step_cap, config.social_gain * stats.p_s)
        fired.append(RuleFiring(rule_id=SOCIAL_RULE, targets=["theta_s"], evaluations=[risk_check, social_check]))

    visit_check = greater("p_v", stats.p_v, config.priority_threshold)
    if visit_check.holds:
        floor_check = greater("theta_t", params.theta_t, THETA_T_BOUNDS[0])
        if floor_check.holds:
            delta_t = -config.theta_t_step
            fired.append(
                RuleFiring(rule_id=VISIT_THRESHOLD_RULE, targets=["theta_t"], evaluations=[visit_check, floor_check])
            )

        ceiling_check = less("theta_p", params.theta_p, THETA_P_BOUNDS[1])
        if ceiling_check.holds:
            delta_p = config.theta_p_step
            fired.append(
                RuleFiring(rule_id=VISIT_PROBABILITY_RULE, targets=["theta_p"], evaluations=[visit_check, ceiling_check])
            )

    decision = ControlDecision(
        delta_theta_s=delta_s,
        delta_theta_t=delta_t,
        delta_theta_p=delta_p,
        fired_rules=fired,
        new_params=params.adjusted(delta_s, delta_t, delta_p),
    )
    if fired:
        logger.debug(f"[ClosedLoop] Day {stats.day}: {decision.rule_ids()} -> {decision.new_params.as_tuple()}")
    return decision


def llm_mapping_update(stats: MacroStats) -> PolicyParams:
    """theta_s = 1.2 when r exceeds 0.4, otherwise 1.0; visits stay at the fixed policy"""
    intensity = MAPPING_HIGH_INTENSITY if stats.r > MAPPING_RISK_THRESHOLD else MAPPING_BASE_INTENSITY
    return PolicyParams(theta_s=intensity, theta_t=MAPPING_THETA_T, theta_p=MAPPING_THETA_P)


def mapping_decision(stats: MacroStats, params: PolicyParams) -> ControlDecision:
    """llm_mapping_update wrapped as an attributable decision for the audit log"""
    new_params = llm_mapping_update(stats)
    changed = [
        name
        for name, before, after in zip(("theta_s", "theta_t", "theta_p"), params.as_tuple(), new_params.as_tuple())
        if before != after
    ]
    fired = []
    if changed:
        check = greater("r", stats.r, MAPPING_RISK_THRESHOLD)
        if not check.holds:
            check = at_most("r", stats.r, MAPPING_RISK_THRESHOLD)
        fired.append(
            RuleFiring(
                rule_id=MAPPING_RULE,
                targets=changed,
                evaluations=[check],
            )
        )
    return ControlDecision.between(params, new_params, fired)
