import numpy as np
import pytest

from torusns import spectral as sp
from torusns import torus as ts


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)


@pytest.fixture
def grid():
    """Small test grid: nu=1, d=2, Kphi=2, Kx=4."""
    return sp.GridSpec(nu=1, d=2, Kphi=2, Kx=4, ncomp=2)


@pytest.fixture
def freq():
    return ts.FrequencySpec.certify((np.sqrt(2.0),), 50)


@pytest.fixture
def multi_mode_forcing(grid):
    """Forcing with several interacting pairs so the nonlinearity is active."""
    modes = [
        ((1,), (1, 0), 1, 1.0),
        ((0,), (1, 1), 0, 0.5),
        ((0,), (1, 1), 1, -0.5),
        ((2,), (0, 1), 0, 0.25j),
    ]
    return ts.ForcingSpec.from_modes(grid, modes, epsilon=1e-3, zero_space_mean=True)


def make_forcing(grid, eps, zero_space_mean=True, extra=()):
    modes = [
        ((1,), (1, 0), 1, 1.0),
        ((0,), (1, 1), 0, 0.5),
        ((0,), (1, 1), 1, -0.5),
    ]
    modes += list(extra)
    return ts.ForcingSpec.from_modes(
        grid, modes, epsilon=eps, zero_space_mean=zero_space_mean
    )
