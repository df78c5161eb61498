"""
Control Models
ControlConfig (rule constants), RuleFiring/Inequality (attribution) and the
ControlDecision every controller returns.
"""
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.simulation.models import POLICY_BOUNDS, PARAM_DECIMALS, PolicyParams
from app.utils.validators import require_unit_interval


PARAM_NAMES = ("theta_s", "theta_t", "theta_p")


class ControlConfig(BaseModel):
    """Closed-loop rule constants; every field is a config-file key and CLI flag"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    risk_threshold: float = 0.40
    priority_threshold: float = 0.75
    update_cap: float = 0.05
    theta_t_step: float = 0.02
    theta_p_step: float = 0.05
    social_gain: float = 0.1
    # Bound on the social escalation step alone; None means update_cap
    social_cap: Optional[float] = None

    @field_validator("risk_threshold", "priority_threshold")
    @classmethod
    def _threshold(cls, v: float, info) -> float:
        return require_unit_interval(info.field_name, v, open_interval=True)

    @field_validator("update_cap")
    @classmethod
    def _cap(cls, v: float) -> float:
        if v <= 0:
            raise ValueError(f"update_cap must be > 0, got {v}")
        return v

    @field_validator("theta_t_step", "theta_p_step", "social_gain")
    @classmethod
    def _non_negative(cls, v: float, info) -> float:
        if v < 0:
            raise ValueError(f"{info.field_name} must be >= 0, got {v}")
        return v

    @field_validator("social_cap")
    @classmethod
    def _social_cap(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v <= 0:
            raise ValueError(f"social_cap must be > 0, got {v}")
        return v

    @model_validator(mode="after")
    def _steps_within_cap(self) -> "ControlConfig":
        for name in ("theta_t_step", "theta_p_step", "social_cap"):
            value = getattr(self, name)
            if value is not None and value > self.update_cap:
                raise ValueError(f"{name}={value} exceeds update_cap={self.update_cap}")
        return self

    @property
    def social_step_cap(self) -> float:
        return self.update_cap if self.social_cap is None else self.social_cap

    @property
    def bounds(self) -> Dict[str, Tuple[float, float]]:
        return dict(POLICY_BOUNDS)

    def with_cap(self, cap: float) -> "ControlConfig":
        """
        Same rules with the social escalation bounded by `cap`. The fixed visit
        steps are untouched; update_cap only grows when `cap` exceeds it.
        """
        values = self.model_dump()
        values.update(update_cap=max(self.update_cap, cap), social_cap=cap)
        return ControlConfig(**values)


class Inequality(BaseModel):
    """One evaluated comparison, e.g. p_v=0.81 > 0.75"""

    model_config = ConfigDict(frozen=True)

    quantity: str
    value: float
    op: str = Field(pattern=r"^(>|<|<=)$")
    threshold: float

    @property
    def holds(self) -> bool:
        if self.op == ">":
            return self.value > self.threshold
        if self.op == "<":
            return self.value < self.threshold
        return self.value <= self.threshold

    def __str__(self) -> str:
        return f"{self.quantity}={self.value:.4f} {self.op} {self.threshold:.4f}"


def greater(quantity: str, value: float, threshold: float) -> Inequality:
    return Inequality(quantity=quantity, value=value, op=">", threshold=threshold)


def less(quantity: str, value: float, threshold: float) -> Inequality:
    return Inequality(quantity=quantity, value=value, op="<", threshold=threshold)


def at_most(quantity: str, value: float, threshold: float) -> Inequality:
    return Inequality(quantity=quantity, value=value, op="<=", threshold=threshold)


class RuleFiring(BaseModel):
    """
    A rule that produced (or for black-box, proposed) a change.
    `targets` names the parameters it moved.
    """

    model_config = ConfigDict(frozen=True)

    rule_id: str
    targets: List[str]
    evaluations: List[Inequality] = Field(default_factory=list)
    proposal: Optional[Dict[str, Any]] = None
    violation: Optional[str] = None

    @field_validator("targets")
    @classmethod
    def _known_targets(cls, v: List[str]) -> List[str]:
        unknown = [t for t in v if t not in PARAM_NAMES]
        if unknown:
            raise ValueError(f"unknown parameter(s) {unknown}")
        return v


class ControlDecision(BaseModel):
    """Deltas plus the post-clip parameters; nonzero deltas must be attributed"""

    model_config = ConfigDict(frozen=True)

    delta_theta_s: float = 0.0
    delta_theta_t: float = 0.0
    delta_theta_p: float = 0.0
    fired_rules: List[RuleFiring] = Field(default_factory=list)
    new_params: PolicyParams

    @model_validator(mode="after")
    def _attribution_complete(self) -> "ControlDecision":
        attributed = {target for firing in self.fired_rules for target in firing.targets}
        for name, delta in zip(PARAM_NAMES, self.deltas()):
            if delta != 0.0 and name not in attributed:
                raise ValueError(f"nonzero delta for {name} without a fired rule")
        return self

    def deltas(self) -> Tuple[float, float, float]:
        return (self.delta_theta_s, self.delta_theta_t, self.delta_theta_p)

    def is_zero(self) -> bool:
        return all(d == 0.0 for d in self.deltas())

    def rule_ids(self) -> List[str]:
        return [firing.rule_id for firing in self.fired_rules]

    @classmethod
    def hold(cls, params: PolicyParams, fired_rules: Optional[List[RuleFiring]] = None) -> "ControlDecision":
        return cls(new_params=params, fired_rules=fired_rules or [])

    @classmethod
    def between(
        cls,
        prior: PolicyParams,
        new_params: PolicyParams,
        fired_rules: List[RuleFiring],
    ) -> "ControlDecision":
        """Decision whose deltas are the realised (post-clip) differences"""
        ds, dt, dp = (
            round(after - before, PARAM_DECIMALS)
            for before, after in zip(prior.as_tuple(), new_params.as_tuple())
        )
        return cls(
            delta_theta_s=ds,
            delta_theta_t=dt,
            delta_theta_p=dp,
            fired_rules=fired_rules,
            new_params=new_params,
        )
