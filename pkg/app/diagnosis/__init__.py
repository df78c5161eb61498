# Diagnosis layer: per-agent assessments reduced to macro statistics
from app.diagnosis.heuristic import heuristic_diagnose
from app.diagnosis.models import (
    BackendConfig,
    BackendKind,
    Diagnosis,
    DiagnosisCycle,
    FallbackPolicy,
    MacroStats,
    RiskLabel,
)
from app.diagnosis.ollama_client import OllamaClient, TextGenerator
from app.diagnosis.parser import parse_response
from app.diagnosis.prompts import build_prompt
from app.diagnosis.service import DiagnosisLayer, aggregate, llm_diagnose, select_diagnosable

__all__ = [
    "BackendConfig",
    "BackendKind",
    "Diagnosis",
    "DiagnosisCycle",
    "DiagnosisLayer",
    "FallbackPolicy",
    "MacroStats",
    "OllamaClient",
    "RiskLabel",
    "TextGenerator",
    "aggregate",
    "build_prompt",
    "heuristic_diagnose",
    "llm_diagnose",
    "parse_response",
    "select_diagnosable",
]
