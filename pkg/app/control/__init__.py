# Control layer: MacroStats in, PolicyParams updates out
from app.control.black_box import SurrogateProposer, black_box_update
from app.control.models import ControlConfig, ControlDecision, Inequality, RuleFiring
from app.control.rules import closed_loop_update, llm_mapping_update, mapping_decision

__all__ = [
    "ControlConfig",
    "ControlDecision",
    "Inequality",
    "RuleFiring",
    "SurrogateProposer",
    "black_box_update",
    "closed_loop_update",
    "llm_mapping_update",
    "mapping_decision",
]
