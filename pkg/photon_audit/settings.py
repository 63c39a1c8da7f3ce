"""
Run settings: numerical tolerances and console verbosity
"""

import sys
from pathlib import Path
from typing import Any, Dict, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from photon_audit.errors import SettingsError

ENV_PREFIX = "PHOTON_AUDIT_"

# dotenv key suffix -> Settings field
_KEYS = {
    "PRUNE_TOLERANCE": "prune_tolerance",
    "WEIGHT_THRESHOLD": "weight_threshold",
    "TOLERANCE": "audit_tolerance",
    "UNIT_NORM_TOLERANCE": "unit_norm_tolerance",
    "VERBOSE": "verbose",
}


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    prune_tolerance: float = Field(default=1e-15, ge=0.0)
    weight_threshold: float = Field(default=1e-14, ge=0.0)
    audit_tolerance: float = Field(default=1e-12, ge=0.0)
    unit_norm_tolerance: float = Field(default=1e-9, ge=0.0)
    verbose: bool = False


def load_settings(env_file: Optional[Union[str, Path]] = ".env", **overrides: Any) -> Settings:
    """
    Build Settings from an optional dotenv file plus explicit overrides.

    Only the file is read; the process environment is left alone. Overrides
    that are None are ignored so CLI flags can be passed straight through.
    """
    values: Dict[str, Any] = {}
    if env_file is not None and Path(env_file).is_file():
        for key, raw in dotenv_values(env_file).items():
            if not key.startswith(ENV_PREFIX):
                continue
            field = _KEYS.get(key[len(ENV_PREFIX):])
            if field is None:
                raise SettingsError(f"unknown setting '{key}' in {env_file}")
            values[field] = raw
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return Settings(**values)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        raise SettingsError(f"invalid settings: {problems}") from exc


def status(settings: Settings, message: str) -> None:
    """Progress line on stderr, printed only in verbose mode"""
    if settings.verbose:
        print(message, file=sys.stderr)
