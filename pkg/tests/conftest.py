"""Pytest fixtures for tacloc tests."""

import numpy as np
import pytest

from tacloc.bench.shapes import build_mesh
from tacloc.core.config import DEFAULT_CONFIG
from tacloc.features.sampling import sample_mesh


@pytest.fixture
def rng():
    """Fresh seeded generator per test."""
    return np.random.default_rng(12345)


@pytest.fixture
def config():
    return DEFAULT_CONFIG


@pytest.fixture(scope="session")
def wedge_box():
    """Feature-rich procedural box; built once per session."""
    return build_mesh("wedge_box")


@pytest.fixture(scope="session")
def round_superellipsoid():
    return build_mesh("superellipsoid_round")


@pytest.fixture(scope="session")
def wedge_box_cloud(wedge_box):
    return sample_mesh(wedge_box, 20_000, seed=1)
