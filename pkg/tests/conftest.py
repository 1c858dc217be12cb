import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config  # noqa: E402
from src.geometry import phase_field  # noqa: E402
from src.models import DesignParams, HistogramSpec, SolverConfig  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long end-to-end checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running check, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# ---------------------------------------------------------------------------
# Analytic fields
# ---------------------------------------------------------------------------

N = 64
H = 100.0 / N
EPS = config.EPSILON_FACTOR * H     # solver default


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def sphere_cfg():
    return SolverConfig.for_grid(N)


@pytest.fixture
def sphere30():
    return phase_field.sphere_field(N, radius=30.0, epsilon=EPS)


@pytest.fixture
def slab():
    """Two flat sheets normal to z, solid between z = 30 and z = 70."""
    return phase_field.slab_field(N, position=50.0, epsilon=EPS, thickness=40.0)


@pytest.fixture
def area_only():
    """f ≡ 1: the energy is the (diffuse) interface area."""
    return DesignParams(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, m0=0.0)


@pytest.fixture
def small_spec():
    return HistogramSpec(bins=10, kappa_min=-0.5, kappa_max=0.5)
