import numpy as np
import pytest

from stozak.grids import Grid, SpectralField
from stozak.variational import solve_ground_state


@pytest.fixture(scope="session")
def grid16():
    return Grid(16)


@pytest.fixture(scope="session")
def grid16_coarse():
    # unit frequency lattice: shells {1, 2, 4, 8}
    return Grid(16, length=2.0 * np.pi)


@pytest.fixture(scope="session")
def grid32():
    return Grid(32)


@pytest.fixture(scope="session")
def grid32_sim():
    return Grid(32, length=8.0 * np.pi)


@pytest.fixture(scope="session")
def ground_profile():
    return solve_ground_state()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_field(grid, rng, decay=0.0, mean_zero=False):
    c = (rng.standard_normal((grid.n,) * 3)
         + 1j * rng.standard_normal((grid.n,) * 3))
    c *= (1.0 + grid.k2) ** (-0.5 * decay) * grid.dealias_mask
    if mean_zero:
        c[0, 0, 0] = 0.0
    return SpectralField.from_freq(grid, c)
