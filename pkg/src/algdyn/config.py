"""Settings: bundled TOML defaults, optionally overridden by a YAML file."""

import logging
import os
from fractions import Fraction
from pathlib import Path
from typing import Optional

try:
    from importlib.resources import files
except ImportError:
    # Fallback for Python < 3.9
    from importlib_resources import files

import toml
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

log = logging.getLogger(__name__)

USER_CONFIG = Path('~/.config/algdyn/config.yaml')


class Settings(BaseModel):
    """Numerical and runtime knobs shared by all commands."""

    model_config = ConfigDict(extra='forbid')

    eps: str = '1/1000000'
    grid_exponent: int = Field(6, ge=1, le=12)
    oracle_tolerance: float = Field(1e-6, gt=0, lt=1)
    oracle_dps: int = Field(50, ge=15)
    default_symbol: str = '0'
    sigma_max_width: int = Field(16, ge=1, le=16)
    random_lattice_max_diagonal: int = Field(4, ge=1)
    jobs: int = Field(1, ge=1)
    progress: bool = False

    @field_validator('eps', mode='before')
    @classmethod
    def _exact_eps(cls, value):
        value = str(value)
        try:
            parsed = Fraction(value)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"eps must be an exact rational such as 1/1000000, got {value!r}")
        if parsed <= 0:
            raise ValueError(f"eps must be positive, got {value}")
        return value

    @property
    def eps_fraction(self) -> Fraction:
        return Fraction(self.eps)


def get_template_path(filename: str) -> str:
    """Get path to template file from package resources."""
    try:
        return str(files('algdyn.templates') / filename)
    except (ModuleNotFoundError, TypeError):
        # Fallback for development
        return os.path.join(os.path.dirname(__file__), 'templates', filename)


def load_defaults() -> dict:
    with open(get_template_path('defaults.toml'), 'r', encoding='utf-8') as f:
        return toml.load(f).get('defaults', {})


def load_settings(path: Optional[str] = None) -> Settings:
    """Defaults merged with the user YAML file, if any.

    An explicit ``path`` must exist; the per-user file is only read when present.
    """
    values = load_defaults()
    if path is None:
        user_file = USER_CONFIG.expanduser()
        path = str(user_file) if user_file.exists() else None
    if path is not None:
        with open(path, 'r', encoding='utf-8') as f:
            override = yaml.safe_load(f) or {}
        if not isinstance(override, dict):
            raise ValueError(f"{path}: expected a mapping of settings")
        log.info("settings override from %s: %s", path, ', '.join(sorted(override)))
        values.update(override)
    return Settings(**values)
