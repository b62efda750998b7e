"""Workbench settings read from the environment."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Optional

from choreo.explore import DEFAULT_MAX_STATES

DEFAULT_FUEL = 200


def _int_env(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise RuntimeError(f"{name} must be an integer, got {raw!r}") from exc
    if value < 0:
        raise RuntimeError(f"{name} must not be negative, got {value}")
    return value


@dataclass
class WorkbenchConfig:
    fuel: int = DEFAULT_FUEL
    seed: int = 0
    fns_path: Optional[str] = None
    updates_dir: Optional[str] = None
    log_level: str = "WARNING"
    max_states: int = DEFAULT_MAX_STATES

    @classmethod
    def from_env(cls) -> "WorkbenchConfig":
        level = os.environ.get("CHOREO_LOG_LEVEL", "WARNING").strip().upper() or "WARNING"
        if not isinstance(logging.getLevelName(level), int):
            raise RuntimeError(f"CHOREO_LOG_LEVEL is not a logging level: {level!r}")
        return cls(
            fuel=_int_env("CHOREO_FUEL", DEFAULT_FUEL),
            seed=_int_env("CHOREO_SEED", 0),
            fns_path=os.environ.get("CHOREO_FNS") or None,
            updates_dir=os.environ.get("CHOREO_UPDATES") or None,
            log_level=level,
            max_states=_int_env("CHOREO_MAX_STATES", DEFAULT_MAX_STATES),
        )


__all__ = ["DEFAULT_FUEL", "WorkbenchConfig"]
