"""
Error taxonomy shared by the simulator, the diagnosis/control layers and the CLI.
"""
from pathlib import Path
from typing import Optional


class SimulationError(Exception):
    """Base class for every expected failure in this package"""


class InvalidConfigurationError(SimulationError, ValueError):
    """A config value, CLI flag or call argument is outside its valid range"""


class SchemaViolationError(SimulationError):
    """Model output could not be parsed into the expected structure"""

    def __init__(self, reason: str, raw_text: str = ""):
        super().__init__(reason)
        self.reason = reason
        self.raw_text = raw_text


class BackendUnavailableError(SimulationError):
    """The LLM endpoint could not be reached after all retries"""


class AuditIntegrityError(SimulationError):
    """An audit record breaks day ordering or the parameter chain"""


class InsufficientSampleError(SimulationError, ValueError):
    """A statistic needs at least two observations per group"""


class RunAbortedError(SimulationError):
    """A run stopped early; the partial audit log stays on disk"""

    def __init__(self, message: str, condition: str, seed: int, audit_path: Optional[Path] = None):
        super().__init__(message)
        self.condition = condition
        self.seed = seed
        self.audit_path = audit_path
