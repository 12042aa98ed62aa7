# settings.py
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional
import logging
import os
try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from exceptions import ValidationError

logger = logging.getLogger(__name__)

# --- 1. DEFAULTS ---
# Every subcommand is reproducible by default; --seed overrides.
DEFAULT_SEED = 20240101
SETTINGS_ENV = "NSVH_SETTINGS"
LOCAL_SETTINGS = Path("nsvh.toml")


@dataclass(frozen=True)
class Settings:
    seed: int = DEFAULT_SEED
    threads: int = 1
    mc_triplets: int = 1_000_000
    mc_groups: int = 20
    risk_groups: int = 50
    calibration_tolerance: float = 1e-10
    max_iterations: int = 200
    output_format: str = "json"
    log_level: str = "WARNING"

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError("seed must be a 64-bit unsigned integer", field="seed")
        if self.threads < 1:
            raise ValidationError("threads must be at least 1", field="threads")
        if self.output_format not in ("json", "csv"):
            raise ValidationError("output_format must be json or csv", field="output_format")

    def override(self, **values: Any) -> "Settings":
        """Returns a copy with the non-None values applied (command-line flags)."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})


# --- 2. LOADING ---
# Reads the [nsvh] table of a TOML file; no file means built-in defaults.
def load_settings(path: Optional[str] = None) -> Settings:
    candidate = path or os.environ.get(SETTINGS_ENV)
    if candidate:
        settings_path = Path(candidate)
        if not settings_path.is_file():
            raise ValidationError(f"settings file '{settings_path}' not found", field="config")
    elif LOCAL_SETTINGS.is_file():
        settings_path = LOCAL_SETTINGS
    else:
        return Settings()

    with settings_path.open("rb") as fh:
        try:
            table: Dict[str, Any] = tomllib.load(fh).get("nsvh", {})
        except tomllib.TOMLDecodeError as e:
            raise ValidationError(f"settings file '{settings_path}' is not valid TOML: {e}")

    known = {f.name for f in fields(Settings)}
    unknown = set(table) - known
    if unknown:
        logger.warning("Ignoring unknown settings: %s", ", ".join(sorted(unknown)))

    logger.info("Loaded settings from %s", settings_path)
    return Settings(**{k: v for k, v in table.items() if k in known})
