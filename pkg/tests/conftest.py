"""Shared fixtures for the SensorGuard test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from config import resolve
from factories import create_scenario
from trust_engine import TrustTable

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"

GRID_3X3 = {"placement": "grid", "cluster_count": 1, "cluster_size": 9, "radio_range": 1.5}


def make_config(data: dict | None = None, *overrides: str):
    """ScenarioConfig from a partial dict plus dotted overrides."""
    return create_scenario(resolve(data or {}, overrides))


def witness_data(witnesses: int = 4, claimants: int = 2, pool: int = 4, **intrusions) -> dict:
    scripted = {"count": 3, "level_weights": [1, 1, 1], "start": 10, "spacing": 20}
    scripted.update(intrusions)
    return {
        "topology": {
            "placement": "witness",
            "cluster_size": 1 + witnesses + claimants + pool,
            "witnesses": witnesses,
            "claimants": claimants,
        },
        "traffic": {"rate": 0, "warm_start": True, "loss_probability": 0.0},
        "intrusions": scripted,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIO_DIR


@pytest.fixture
def grid_config():
    return make_config({"topology": GRID_3X3})


@pytest.fixture
def table():
    """Owner 0 in a 9-node cluster, window of 8 interactions."""
    return TrustTable(owner=0, population=9)
