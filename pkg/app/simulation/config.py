"""
Simulation Dynamics Configuration
Coefficients for the daily update rules, intervention effects, network evolution
and the initial-population distributions.

Defaults are calibration targets, not measured facts; recalibrating is a data
change (config file), not a code change.
"""
from pathlib import Path
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from app.core.config import read_config_file
from app.utils.validators import require_unit_interval


# Cadences shared by the engine and the experiment runner
NETWORK_UPDATE_PERIOD = 7
DIAGNOSIS_PERIOD = 7

# Agents above this loneliness count as high risk in trajectories and are
# the ones sent to diagnosis
HIGH_RISK_LONELINESS = 0.6


class DynamicsConfig(BaseModel):
    """Immutable coefficient set for one simulated facility"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # Loneliness
    alpha_l: float = 0.05            # reversion rate toward baseline, per day
    beta_l: float = 0.002            # reduction per activated tie
    interaction_prob: float = 0.3    # daily activation probability per edge

    # Social events
    event_period: int = 3
    event_effect: float = 0.005
    event_energy_cost: float = 0.05
    event_energy_gate: float = 0.2

    # Home visits
    visit_loneliness_effect: float = 0.05
    visit_stress_effect: float = 0.03

    # Frailty / stress / energy
    frailty_drift: float = 0.0005
    frailty_stress_coeff: float = 0.001
    stress_coupling: float = 0.02
    energy_recovery: float = 0.02

    # Network evolution
    tie_formation_rate: float = 0.2
    degree_saturation: float = 6.0
    candidate_pairs_per_week: int = 10
    init_edge_prob: Optional[float] = None   # None -> min(1, 4 / (N - 1))

    # Initial population
    age_range: Tuple[int, int] = (65, 95)
    baseline_range: Tuple[float, float] = (0.5, 0.9)
    loneliness_jitter: float = 0.1
    frailty_range: Tuple[float, float] = (0.8, 1.0)
    stress_range: Tuple[float, float] = (0.1, 0.5)
    energy_range: Tuple[float, float] = (0.5, 1.0)

    @field_validator("interaction_prob", "event_energy_gate")
    @classmethod
    def _probability(cls, v: float, info) -> float:
        return require_unit_interval(info.field_name, v)

    @field_validator("init_edge_prob")
    @classmethod
    def _edge_probability(cls, v: Optional[float]) -> Optional[float]:
        if v is not None:
            require_unit_interval("init_edge_prob", v)
        return v

    @field_validator(
        "alpha_l", "beta_l", "event_effect", "event_energy_cost",
        "visit_loneliness_effect", "visit_stress_effect", "frailty_drift",
        "frailty_stress_coeff", "stress_coupling", "energy_recovery",
        "tie_formation_rate", "loneliness_jitter",
    )
    @classmethod
    def _non_negative(cls, v: float, info) -> float:
        if v < 0:
            raise ValueError(f"{info.field_name} must be >= 0, got {v}")
        return v

    @field_validator("alpha_l")
    @classmethod
    def _reversion_rate(cls, v: float) -> float:
        # alpha above 1 overshoots the baseline every day
        if v > 1:
            raise ValueError(f"alpha_l must be <= 1, got {v}")
        return v

    @field_validator("event_period")
    @classmethod
    def _period(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"event_period must be >= 1, got {v}")
        return v

    @field_validator("degree_saturation")
    @classmethod
    def _saturation(cls, v: float) -> float:
        if v <= 0:
            raise ValueError(f"degree_saturation must be > 0, got {v}")
        return v

    @field_validator("candidate_pairs_per_week")
    @classmethod
    def _candidates(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"candidate_pairs_per_week must be >= 0, got {v}")
        return v

    @field_validator("baseline_range", "frailty_range", "stress_range", "energy_range")
    @classmethod
    def _unit_range(cls, v: Tuple[float, float], info) -> Tuple[float, float]:
        low, high = v
        if not 0.0 <= low <= high <= 1.0:
            raise ValueError(f"{info.field_name} must satisfy 0 <= low <= high <= 1, got {v}")
        return v

    @model_validator(mode="after")
    def _age_range(self) -> "DynamicsConfig":
        low, high = self.age_range
        if low > high or low < 0:
            raise ValueError(f"age_range must satisfy 0 <= low <= high, got {self.age_range}")
        return self

    def edge_probability(self, n_agents: int) -> float:
        if self.init_edge_prob is not None:
            return self.init_edge_prob
        return min(1.0, 4.0 / (n_agents - 1))

    @classmethod
    def from_file(cls, path: Path) -> "DynamicsConfig":
        """
        Load from JSON/TOML/YAML. Accepts either a `dynamics` section or a
        bare table of dynamics keys; missing keys keep their defaults.
        """
        data = read_config_file(path)
        if isinstance(data.get("dynamics"), dict):
            data = data["dynamics"]
        return cls(**data)
