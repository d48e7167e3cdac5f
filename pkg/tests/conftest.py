"""Shared fixtures."""

from __future__ import annotations

from pathlib import Path

import pytest

from spoofguard.models import Trajectory
from tests.helpers import drive, parked, straight

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def tiny_csv() -> Path:
    return FIXTURES / "tiny.csv"


@pytest.fixture
def straight_drive() -> Trajectory:
    return straight()


@pytest.fixture
def parked_car() -> Trajectory:
    return parked()


@pytest.fixture(scope="module")
def clean_drives() -> list[Trajectory]:
    """Three noisy one-minute drives."""
    return [drive(seed) for seed in (11, 12, 13)]
