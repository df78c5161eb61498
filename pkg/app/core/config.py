"""
Process-level settings and config-file loading.
Domain configs (dynamics, control, backend) live next to the code that uses them;
this module only provides the environment defaults and the file reader they share.
"""
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.exceptions import InvalidConfigurationError


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore",
    )

    APP_NAME: str = "Care Facility Policy Simulator"
    VERSION: str = "1.0.0"
    LOG_LEVEL: str = "INFO"

    OUTPUT_DIR: str = "results"

    # Ollama-compatible generate endpoint
    OLLAMA_URL: str = "http://localhost:11434/api/generate"
    OLLAMA_MODEL: str = "llama3:8b"
    OLLAMA_TEMPERATURE: float = 0.1
    OLLAMA_TIMEOUT_MS: int = 30000

    N_AGENTS: int = 30
    N_DAYS: int = 200


settings = Settings()


CONFIG_SECTIONS = ("dynamics", "control", "backend", "run")


def read_config_file(path: Path) -> Dict[str, Any]:
    """
    Read a JSON, TOML or YAML file into a plain dict, picking the parser
    from the file suffix.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidConfigurationError(f"config file not found: {path}")

    suffix = path.suffix.lower()
    try:
        text = path.read_text(encoding="utf-8")
        if suffix == ".json":
            data = json.loads(text)
        elif suffix == ".toml":
            data = tomllib.loads(text)
        elif suffix in (".yaml", ".yml"):
            data = yaml.safe_load(text) or {}
        else:
            raise InvalidConfigurationError(f"unsupported config format: {suffix}")
    except (json.JSONDecodeError, tomllib.TOMLDecodeError, yaml.YAMLError, UnicodeDecodeError) as e:
        raise InvalidConfigurationError(f"unreadable config file {path}: {e}") from e

    if not isinstance(data, dict):
        raise InvalidConfigurationError(f"config file {path} must contain a table at top level")
    return data


def load_config_file(path: Optional[Path]) -> Dict[str, Any]:
    """
    Read a sectioned config file (dynamics / control / backend / run).

    Returns an empty dict when path is None. Unknown top-level sections are
    rejected so a typo does not silently fall back to defaults.
    """
    if path is None:
        return {}

    data = read_config_file(path)
    unknown = set(data) - set(CONFIG_SECTIONS)
    if unknown:
        raise InvalidConfigurationError(
            f"unknown config sections {sorted(unknown)}; expected {list(CONFIG_SECTIONS)}"
        )
    for section, value in data.items():
        if not isinstance(value, dict):
            raise InvalidConfigurationError(f"config section [{section}] must be a table")
    return data
