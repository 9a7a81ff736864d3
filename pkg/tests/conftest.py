import numpy as np
import pytest

from bohmlab.config import PhysicalConstants, Tolerances
from bohmlab.numerics import Grid


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep BOHMLAB_* settings from the developer's shell out of the tests."""
    for name in ("BOHMLAB_THREADS", "BOHMLAB_HBAR", "BOHMLAB_MASS", "BOHMLAB_TOL", "BOHMLAB_OUT", "BOHMLAB_FORMAT"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def consts():
    return PhysicalConstants()


@pytest.fixture
def tolerances():
    return Tolerances()


@pytest.fixture
def small_grid():
    return Grid(-0.25, 0.25, 64, 0.5, 0.7, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
