from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from cradle.clock import SimClock
from cradle.io_env import IOEnv, RecordingBackend

FIXTURES = Path(__file__).parent / "fixtures"
E2E = FIXTURES / "e2e"
E2E_NAMES = ("clear_obstacles", "toolbar", "navigate_door", "haggle")


@pytest.fixture
def clock():
    return SimClock(0.05)


@pytest.fixture
def backend():
    return RecordingBackend((1920, 1080))


@pytest.fixture
def io(backend, clock):
    return IOEnv(backend, clock)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
