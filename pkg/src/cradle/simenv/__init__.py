"""Deterministic simulated desktop used as the test environment."""

from __future__ import annotations

from pathlib import Path

from .env import SimEnv
from .scenario import Goal, InputSpec, ObstacleKind, Scenario, WidgetSpec, load_scenario_file, parse_scenario


def load_scenario(path: str | Path, tick_seconds: float = 0.05) -> SimEnv:
    return SimEnv(load_scenario_file(path), tick_seconds)


__all__ = [
    "Goal", "InputSpec", "ObstacleKind", "Scenario", "SimEnv", "WidgetSpec", "load_scenario",
    "load_scenario_file", "parse_scenario",
]
