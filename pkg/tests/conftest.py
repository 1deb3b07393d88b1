import functools

import numpy as np
import pytest

from cdftlab import sampling
from cdftlab.density import DensityPair, validate_pair
from cdftlab.fields import ScalarField, VectorField, grid_1d, grid_3d
from cdftlab.solver import densities_from_state, discretize, ground_state


@functools.lru_cache(maxsize=None)
def cached_pair(cells, n, seed, scale=0.4):
    grid = sampling.default_grid(cells)
    return sampling.curl_free_pair(grid, n, seed, current_scale=scale)


@functools.lru_cache(maxsize=None)
def cached_gaussian_pair(cells, extent=6.0):
    """Unit-mass standard Gaussian with zero current, normalized to exact
    quadrature mass so validation passes at coarse resolutions too."""
    grid = grid_3d(cells, -extent, extent)
    rho = sampling.standard_gaussian(grid)
    rho.values /= rho.values.sum() * grid.cell_volume
    pair = DensityPair(rho, VectorField(grid, np.zeros((3,) + grid.shape)))
    report = validate_pair(pair, 1)
    assert report.verdict, report.reasons
    return pair


@functools.lru_cache(maxsize=None)
def ground_fixture(cells=384, k=1.0, bump=0.4, a_amp=0.5):
    """Ground pair of a harmonic-plus-bump scalar potential and a
    Gaussian vector potential on [-8, 8]."""
    grid = grid_1d(cells, -8.0, 8.0)
    x = grid.axis_coords(0)
    v = ScalarField(grid, 0.5 * k * x**2 + bump * np.exp(-((x - 1.0) ** 2)))
    a = VectorField(grid, (a_amp * np.exp(-0.25 * x**2))[None, :])
    state = ground_state(discretize(v, a))
    pair = densities_from_state(state)
    validate_pair(pair, 1)
    from cdftlab.density import Potentials

    return pair, Potentials(v, a), state


@pytest.fixture(scope="session")
def grid16():
    return sampling.default_grid(16)


@pytest.fixture(scope="session")
def grid32():
    return sampling.default_grid(32)
