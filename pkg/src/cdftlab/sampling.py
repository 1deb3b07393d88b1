"""Seeded fixture generators used by the audits and the test suite.

Densities are Gaussian mixtures scaled to the target mass using the same
midpoint quadrature as every other integral, so the mass constraint
holds to round-off. Curl-free currents are built as rho times the
discrete gradient of a sampled smooth phase chi; central differences
along different axes commute exactly, so the discrete vorticity of such
pairs is round-off small, not merely O(h^2).

Generator parameters keep the fixtures compactly supported on the
default [-8, 8]^3 box (boundary shell below 1e-10 of the mass) while
staying resolved at the 16^3..64^3 resolutions the refinement studies
run at.
"""

from __future__ import annotations

import numpy as np

from .density import DensityPair, validate_pair
from .fields import ScalarField, VectorField, _gradient_values, grid_3d
from .functionals import floor_velocity

DEFAULT_EXTENT = 8.0
# widths/centers keep the boundary shell under 1e-10 of the mass down to
# 12^3 cells while staying resolved enough for the bound audits
WIDTH_RANGE = (1.0, 1.4)
CENTER_BOX = 0.5


def default_grid(cells=32, extent=DEFAULT_EXTENT):
    return grid_3d(int(cells), -float(extent), float(extent))


def _mixture_params(rng, components):
    return [
        (
            rng.uniform(-CENTER_BOX, CENTER_BOX, size=3),
            rng.uniform(*WIDTH_RANGE),
            rng.uniform(0.5, 1.0),
        )
        for _ in range(components)
    ]


def _eval_mixture(grid, params):
    mesh = grid.meshgrid()
    rho = np.zeros(grid.shape)
    for center, width, weight in params:
        r2 = sum((m - c) ** 2 for m, c in zip(mesh, center))
        rho += weight * np.exp(-r2 / width**2)
    return rho


def gaussian_mixture(grid, n, seed, components=3) -> ScalarField:
    """Strictly positive mixture with exact midpoint mass n."""
    rng = np.random.default_rng(seed)
    rho = _eval_mixture(grid, _mixture_params(rng, components))
    rho *= float(n) / (rho.sum() * grid.cell_volume)
    return ScalarField(grid, rho)


def _phase_params(rng, scale):
    # gentle wavenumbers keep the phase resolved down to 16^3 grids,
    # where the refinement studies start
    return {
        "amp1": scale * rng.uniform(0.5, 1.0),
        "k1": rng.uniform(0.2, 0.32),
        "w1": rng.uniform(0.03, 0.06),
        "amp2": scale * rng.uniform(0.3, 0.6),
        "k2": rng.uniform(0.15, 0.25),
        "w2": rng.uniform(0.02, 0.05),
    }


def _eval_phase(grid, p):
    x, y, z = grid.meshgrid()
    chi = p["amp1"] * np.tanh(p["k1"] * x) * np.exp(-p["w1"] * y**2)
    chi += p["amp2"] * np.sin(p["k2"] * z) * np.exp(-p["w2"] * (x**2 + y**2))
    return chi


def smooth_phase(grid, seed, scale=0.4) -> ScalarField:
    rng = np.random.default_rng(int(seed) + 10_000)
    return ScalarField(grid, _eval_phase(grid, _phase_params(rng, scale)))


def curl_free_pair(grid, n, seed, current_scale=0.4, components=3) -> DensityPair:
    """Validated pair with jp = rho * grad(chi); discretely curl-free."""
    rho = gaussian_mixture(grid, n, seed, components)
    chi = smooth_phase(grid, seed, current_scale)
    u = _gradient_values(chi.values, grid)
    pair = DensityPair(rho, VectorField(grid, rho.values * u))
    report = validate_pair(pair, n)
    if not report.verdict:
        raise RuntimeError(f"fixture failed validation: {report.reasons}")
    return pair


def rotational_pair(grid, n, seed) -> DensityPair:
    """Validated pair whose velocity (-x2, x1, 0) has curl (0, 0, 2);
    the fixture every curl-gated operation must reject."""
    rho = gaussian_mixture(grid, n, seed)
    x, y, _ = grid.meshgrid()
    u = np.stack([-y, x, np.zeros_like(x)])
    pair = DensityPair(rho, VectorField(grid, rho.values * u))
    validate_pair(pair, n)
    return pair


def refinement_pair(cells, n=2, seed=0, extent=DEFAULT_EXTENT) -> DensityPair:
    """The same analytic fixture realized at different resolutions, for
    grid-halving studies: parameters depend only on the seed. Smoother
    than the general sampler (one dominant blob, gentler phase) so the
    16^3 level already sits in the h^2 regime."""
    grid = grid_3d(int(cells), -float(extent), float(extent))
    rng = np.random.default_rng(seed)
    x, y, z = grid.meshgrid()
    w0 = rng.uniform(1.3, 1.5)
    c0 = rng.uniform(-0.3, 0.3, 3)
    w1 = rng.uniform(1.0, 1.2)
    c1 = rng.uniform(-0.5, 0.5, 3)
    rho = np.exp(-((x - c0[0]) ** 2 + (y - c0[1]) ** 2 + (z - c0[2]) ** 2) / w0**2)
    rho += 0.4 * np.exp(
        -((x - c1[0]) ** 2 + (y - c1[1]) ** 2 + (z - c1[2]) ** 2) / w1**2
    )
    rho *= float(n) / (rho.sum() * grid.cell_volume)
    prng = np.random.default_rng(int(seed) + 10_000)
    a1 = 0.35 * prng.uniform(0.5, 1.0)
    k1 = 0.7 * prng.uniform(0.2, 0.3)
    a2 = 0.2 * prng.uniform(0.5, 1.0)
    k2 = 0.7 * prng.uniform(0.15, 0.25)
    chi = a1 * np.tanh(k1 * x) * np.exp(-0.04 * y**2)
    chi += a2 * np.sin(k2 * z) * np.exp(-0.03 * (x**2 + y**2))
    u = _gradient_values(chi, grid)
    pair = DensityPair(ScalarField(grid, rho), VectorField(grid, rho * u))
    report = validate_pair(pair, n)
    if not report.verdict:
        raise RuntimeError(f"fixture failed validation: {report.reasons}")
    return pair


def perturb_pair(pair: DensityPair, seed, rel_amplitude=0.05) -> DensityPair:
    """Mass-preserving density bump with the velocity field kept, so a
    curl-free pair stays curl-free."""
    grid = pair.grid
    rng = np.random.default_rng(seed)
    mesh = grid.meshgrid()
    center = rng.uniform(-1.0, 1.0, size=grid.dim)
    width = rng.uniform(0.8, 1.5)
    r2 = sum((m - c) ** 2 for m, c in zip(mesh, center))
    bump = 1.0 + rel_amplitude * np.exp(-r2 / width**2)
    rho = pair.rho.values * bump
    n = pair.mass()
    rho *= n / (rho.sum() * grid.cell_volume)
    u = floor_velocity(pair.rho, pair.jp)
    out = DensityPair(ScalarField(grid, rho), VectorField(grid, rho * u.components))
    validate_pair(out, int(round(n)))
    return out


def standard_gaussian(grid) -> ScalarField:
    """Unit-mass reference density pi^{-3/2} exp(-|x|^2) (analytic, not
    renormalized); mass deviates from 1 only by quadrature residue."""
    mesh = grid.meshgrid()
    r2 = sum(m**2 for m in mesh)
    return ScalarField(grid, np.pi ** (-1.5) * np.exp(-r2))
