"""Utility functions for codedpush."""

from __future__ import annotations

import importlib.resources
from functools import lru_cache
from typing import Any

import yaml


@lru_cache(maxsize=1)
def _load_defaults() -> dict:
    with importlib.resources.files("codedpush").joinpath("config/defaults.yaml").open("r") as f:
        return yaml.safe_load(f)


def get_defaults(section: str | None = None) -> dict:
    """Get packaged defaults from defaults.yaml.

    Args:
        section: Section name ("channel", "system", "solver", "limits").
            If None, returns the entire document.

    Returns:
        A copy of the requested section, or of the full document.
    """
    config = _load_defaults()
    if section is None:
        return {k: dict(v) for k, v in config.items()}
    if section not in config:
        raise ValueError(f"Unknown defaults section '{section}'. Available: {list(config)}")
    return dict(config[section])


def get_default(section: str, key: str) -> Any:
    """Single default value, e.g. ``get_default("solver", "fd_tol")``."""
    values = get_defaults(section)
    if key not in values:
        raise ValueError(f"Unknown default '{section}.{key}'")
    return values[key]
