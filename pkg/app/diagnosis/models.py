"""
Diagnosis Models
Per-agent structured assessment, its population aggregate and the backend settings.
"""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.config import settings
from app.utils.validators import validate_endpoint_url


# Numeric risk above this is High (also the cutoff for counting r)
HIGH_RISK_THRESHOLD = 0.6
MEDIUM_RISK_THRESHOLD = 0.4


class RiskLabel(str, Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


def label_for(risk: float) -> RiskLabel:
    if risk > HIGH_RISK_THRESHOLD:
        return RiskLabel.HIGH
    if risk > MEDIUM_RISK_THRESHOLD:
        return RiskLabel.MEDIUM
    return RiskLabel.LOW


class Diagnosis(BaseModel):
    """
    One agent's assessment. The numeric risk is authoritative: risk_label is
    always recomputed from risk_loneliness, whatever the source claimed.
    """

    model_config = ConfigDict(extra="ignore")

    agent_id: int = Field(ge=0, strict=True)
    risk_loneliness: float = Field(ge=0.0, le=1.0, strict=True)
    risk_label: RiskLabel
    risk_frailty_label: RiskLabel
    primary_driver: str = Field(min_length=1, max_length=200)
    priority_social: float = Field(ge=0.0, le=1.0, strict=True)
    priority_visit: float = Field(ge=0.0, le=1.0, strict=True)

    @field_validator("risk_label", "risk_frailty_label", mode="before")
    @classmethod
    def _normalize_label(cls, v):
        if isinstance(v, str):
            return v.strip().capitalize()
        return v

    @field_validator("primary_driver")
    @classmethod
    def _driver_text(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("primary_driver must not be blank")
        return v

    @model_validator(mode="after")
    def _label_follows_numeric(self) -> "Diagnosis":
        self.risk_label = label_for(self.risk_loneliness)
        return self


class MacroStats(BaseModel):
    """Population-level signals; the only thing control ever sees"""

    model_config = ConfigDict(frozen=True)

    r: float = Field(ge=0.0, le=1.0)
    p_s: float = Field(ge=0.0, le=1.0)
    p_v: float = Field(ge=0.0, le=1.0)
    n_diagnosed: int = Field(ge=0)
    day: int = Field(ge=0)

    @model_validator(mode="after")
    def _empty_means_zero(self) -> "MacroStats":
        if self.n_diagnosed == 0 and (self.p_s != 0.0 or self.p_v != 0.0):
            raise ValueError("p_s and p_v must be 0 when nothing was diagnosed")
        return self


class BackendKind(str, Enum):
    HEURISTIC = "heuristic"
    LLM = "llm"


class FallbackPolicy(str, Enum):
    SKIP_AGENT = "skip_agent"
    USE_HEURISTIC = "use_heuristic"


class BackendConfig(BaseModel):
    """How diagnoses (and black-box proposals) are produced"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: BackendKind = BackendKind.HEURISTIC
    endpoint_url: str = Field(default_factory=lambda: settings.OLLAMA_URL)
    model_name: str = Field(default_factory=lambda: settings.OLLAMA_MODEL)
    temperature: float = Field(default_factory=lambda: settings.OLLAMA_TEMPERATURE)
    timeout_ms: int = Field(default_factory=lambda: settings.OLLAMA_TIMEOUT_MS)
    max_retries: int = 2
    fallback: FallbackPolicy = FallbackPolicy.SKIP_AGENT

    # Diagnose every agent instead of only those above the loneliness cutoff
    diagnose_all: bool = False
    store_raw_responses: bool = True
    max_concurrency: int = 1

    @field_validator("temperature")
    @classmethod
    def _temperature(cls, v: float) -> float:
        if v < 0:
            raise ValueError(f"temperature must be >= 0, got {v}")
        return v

    @field_validator("max_retries")
    @classmethod
    def _retries(cls, v: int) -> int:
        if v < 0:
            raise ValueError(f"max_retries must be >= 0, got {v}")
        return v

    @field_validator("timeout_ms", "max_concurrency")
    @classmethod
    def _positive(cls, v: int, info) -> int:
        if v < 1:
            raise ValueError(f"{info.field_name} must be >= 1, got {v}")
        return v

    @model_validator(mode="after")
    def _endpoint_for_llm(self) -> "BackendConfig":
        if self.kind == BackendKind.LLM:
            validate_endpoint_url(self.endpoint_url)
        return self

    @property
    def is_llm(self) -> bool:
        return self.kind == BackendKind.LLM


class DiagnosisCycle(BaseModel):
    """What one diagnosis cycle hands to the run loop and the audit log"""

    stats: MacroStats
    llm_calls: int = 0
    raw_responses: list[str] = Field(default_factory=list)
    prompt_hash: Optional[str] = None
    skipped_agents: list[int] = Field(default_factory=list)
