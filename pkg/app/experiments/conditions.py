"""
Experimental Conditions
The five ablation arms and what each one wires together.
"""
from enum import Enum
from typing import Dict, NamedTuple

from app.core.exceptions import InvalidConfigurationError


class Condition(str, Enum):
    BASELINE = "baseline"
    FIXED_POLICY = "fixed"
    LLM_MAPPING = "mapping"
    CLOSED_LOOP = "closed"
    BLACK_BOX = "blackbox"

    @property
    def label(self) -> str:
        return CONDITION_LABELS[self]


class Wiring(NamedTuple):
    interventions: bool
    diagnosis: bool
    controller: str  # "none", "mapping", "closed_loop", "black_box"
    replayable: bool


WIRING: Dict[Condition, Wiring] = {
    Condition.BASELINE: Wiring(interventions=False, diagnosis=False, controller="none", replayable=True),
    Condition.FIXED_POLICY: Wiring(interventions=True, diagnosis=False, controller="none", replayable=True),
    Condition.LLM_MAPPING: Wiring(interventions=True, diagnosis=True, controller="mapping", replayable=True),
    Condition.CLOSED_LOOP: Wiring(interventions=True, diagnosis=True, controller="closed_loop", replayable=True),
    Condition.BLACK_BOX: Wiring(interventions=True, diagnosis=True, controller="black_box", replayable=False),
}

CONDITION_LABELS: Dict[Condition, str] = {
    Condition.BASELINE: "Baseline",
    Condition.FIXED_POLICY: "Fixed Policy",
    Condition.LLM_MAPPING: "LLM Mapping",
    Condition.CLOSED_LOOP: "Closed-Loop",
    Condition.BLACK_BOX: "Black-box",
}

TRAIN_SEEDS = (42, 100, 200)
HOLDOUT_SEEDS = (300, 400, 500, 600)


def seed_split(seed: int) -> str:
    """'train' for development seeds, 'holdout' otherwise"""
    return "train" if seed in TRAIN_SEEDS else "holdout"


def parse_condition(value: str) -> Condition:
    """Accepts enum values, member names and display labels, case-insensitively"""
    key = value.strip().lower().replace("-", "").replace("_", "").replace(" ", "")
    for condition in Condition:
        candidates = {
            condition.value,
            condition.name.lower().replace("_", ""),
            condition.label.lower().replace("-", "").replace(" ", ""),
        }
        if key in candidates:
            return condition
    raise InvalidConfigurationError(f"unknown condition {value!r}; choose from {[c.value for c in Condition]}")
