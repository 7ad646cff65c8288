import numpy as np
import pytest

from diraclab.angular import ChannelState, SphereBasis
from diraclab.grids import AngularQuadrature, RadialGrid


@pytest.fixture(scope="session")
def small_grid():
    return RadialGrid(n=96, r_max=8.0)


@pytest.fixture(scope="session")
def small_quad():
    return AngularQuadrature.gauss_legendre(6)


@pytest.fixture(scope="session")
def small_basis(small_quad):
    return SphereBasis(small_quad, two_j_max=3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_state(grid, basis, rng, smooth=True):
    """Band-limited random channel state with smooth compact radial bumps."""
    r = grid.r
    psi = np.zeros((basis.n_channels, 2, grid.n), dtype=complex)
    for i in range(basis.n_channels):
        for k in range(2):
            amp = rng.standard_normal() + 1j * rng.standard_normal()
            r0 = rng.uniform(0.3 * grid.r_max, 0.6 * grid.r_max)
            w = rng.uniform(0.05 * grid.r_max, 0.1 * grid.r_max)
            psi[i, k] = amp * np.exp(-((r - r0) ** 2) / (2 * w * w))
    return ChannelState(psi, grid, basis)
