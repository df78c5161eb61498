"""
Audit Record Model
One record per diagnosis cycle: the statistics the controller saw, the
parameters it started from and the decision it made.
"""
import hashlib
import json
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.control.models import ControlConfig, ControlDecision
from app.diagnosis.models import BackendKind, MacroStats
from app.experiments.conditions import Condition
from app.simulation.config import DynamicsConfig
from app.simulation.models import PolicyParams


def config_digest(control: ControlConfig, dynamics: DynamicsConfig) -> str:
    """sha256 of the canonical JSON of both configs"""
    payload = {
        "control": control.model_dump(mode="json"),
        "dynamics": dynamics.model_dump(mode="json"),
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class AuditRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    day: int = Field(ge=0)
    seed: int = Field(ge=0)
    condition: Condition
    macro_stats: MacroStats
    prior_params: PolicyParams
    decision: ControlDecision
    backend_kind: BackendKind
    llm_calls: int = Field(default=0, ge=0)
    skipped_agents: List[int] = Field(default_factory=list)
    prompt_hash: Optional[str] = None
    proposal_prompt_hash: Optional[str] = None
    raw_responses: Optional[List[str]] = None
    config_hash: str

    def to_line(self) -> str:
        return self.model_dump_json()
