import math

import numpy as np
import pytest

from cdftlab import sampling
from cdftlab.density import (
    DensityPair,
    Potentials,
    Provenance,
    convex_combine,
    pairing_energy,
    schwarz_audit,
    validate_pair,
    vorticity,
)
from cdftlab.errors import UnsupportedCurrent
from cdftlab.fields import ScalarField, VectorField, grid_3d, _gradient_values
from cdftlab import functionals

from conftest import cached_gaussian_pair, cached_pair


def zero_current(grid):
    return VectorField(grid, np.zeros((grid.dim,) + grid.shape))


class TestValidate:
    def test_gaussian_passes(self):
        pair = cached_gaussian_pair(32)
        report = validate_pair(pair, 1)
        assert report.verdict
        assert report.reasons == []
        assert report.mass == pytest.approx(1.0, abs=1e-6)
        assert pair.provenance is Provenance.VALIDATED_YN

    def test_negative_lobe_rejected(self):
        grid = grid_3d(16, -6.0, 6.0)
        x, y, z = grid.meshgrid()
        rho = np.pi ** (-1.5) * np.exp(-(x**2 + y**2 + z**2))
        rho -= 0.05 * np.exp(-((x - 2.0) ** 2 + y**2 + z**2) / 0.25)
        rho *= 1.0 / (rho.sum() * grid.cell_volume)
        pair = DensityPair(ScalarField(grid, rho), zero_current(grid))
        report = validate_pair(pair, 1)
        assert not report.verdict
        assert "negativity" in report.reasons
        assert report.negativity_fraction > 0
        assert pair.provenance is Provenance.RAW

    def test_constant_current_off_support(self):
        grid = grid_3d(16, -6.0, 6.0)
        x, y, z = grid.meshgrid()
        rho = np.where(np.abs(x) < 2, np.exp(-(x**2 + y**2 + z**2)), 0.0)
        rho /= rho.sum() * grid.cell_volume
        jp = np.zeros((3,) + grid.shape)
        jp[0] = 1.0
        pair = DensityPair(ScalarField(grid, rho), VectorField(grid, jp))
        report = validate_pair(pair, 1)
        assert not report.verdict
        assert "J0 infinite" in report.reasons
        assert math.isinf(report.j0_value)

    def test_mass_mismatch(self):
        pair = cached_gaussian_pair(16)
        report = validate_pair(
            DensityPair(pair.rho, zero_current(pair.grid)), 2
        )
        assert "mass" in report.reasons

    def test_idempotent_to_the_bit(self):
        pair = cached_pair(16, 1, seed=9)
        r1 = validate_pair(pair, 1)
        r2 = validate_pair(pair, 1)
        assert r1.verdict == r2.verdict
        assert r1.mass == r2.mass
        assert r1.j0_value == r2.j0_value
        assert r1.j1_value == r2.j1_value
        assert r1.jp_l1_norm == r2.jp_l1_norm

    def test_j0_same_code_path_as_functionals(self):
        pair = cached_pair(16, 2, seed=5)
        report = validate_pair(pair, 2)
        assert report.j0_value == functionals.j0(pair)


class TestVorticity:
    def test_gradient_current_is_irrotational(self):
        pair = cached_pair(16, 1, seed=3)
        w = vorticity(pair)
        umax = np.abs(
            functionals.floor_velocity(pair.rho, pair.jp).components
        ).max()
        assert np.abs(w.components).max() <= 1e-10 * umax

    def test_rotational_current(self):
        grid = sampling.default_grid(16)
        pair = sampling.rotational_pair(grid, 1, seed=0)
        w = vorticity(pair)
        mid = tuple(s // 2 for s in grid.shape)
        assert w.components[2][mid] == pytest.approx(2.0, abs=1e-10)

    def test_zero_current(self):
        pair = cached_gaussian_pair(16)
        assert np.all(vorticity(pair).components == 0.0)

    def test_unsupported_current_raises(self):
        grid = grid_3d(12, -6.0, 6.0)
        x, y, z = grid.meshgrid()
        rho = np.where(np.abs(x) < 2, 1.0, 0.0)
        jp = np.ones((3,) + grid.shape)
        pair = DensityPair(ScalarField(grid, rho), VectorField(grid, jp))
        with pytest.raises(UnsupportedCurrent):
            vorticity(pair)


class TestConvexCombine:
    def test_identity(self):
        pair = cached_pair(12, 1, seed=1)
        out = convex_combine([pair], [1.0])
        assert np.array_equal(out.rho.values, pair.rho.values)
        assert np.array_equal(out.jp.components, pair.jp.components)

    def test_midpoint_of_validated_is_validated(self):
        a = cached_pair(16, 2, seed=11)
        b = cached_pair(16, 2, seed=12)
        mid = convex_combine([a, b], [0.5, 0.5])
        assert mid.provenance is Provenance.VALIDATED_YN

    def test_bad_weights(self):
        pair = cached_pair(12, 1, seed=1)
        with pytest.raises(ValueError):
            convex_combine([pair, pair], [0.7, 0.4])
        with pytest.raises(ValueError):
            convex_combine([pair, pair], [-0.5, 1.5])

    def test_self_combination_preserves_vorticity_exactly(self):
        pair = cached_pair(12, 1, seed=6)
        mix = convex_combine([pair, pair], [0.5, 0.5])
        assert np.array_equal(
            vorticity(mix).components, vorticity(pair).components
        )


class TestPairingEnergy:
    def test_scalar_only(self):
        pair = cached_gaussian_pair(16)
        grid = pair.grid
        x, _, _ = grid.meshgrid()
        pot = Potentials(ScalarField(grid, x**2), zero_current(grid))
        expect = float((pair.rho.values * x**2).sum()) * grid.cell_volume
        assert pairing_energy(pair, pot) == pytest.approx(expect, rel=1e-14)

    def test_constant_vector_zero_current(self):
        pair = cached_gaussian_pair(16)
        grid = pair.grid
        a0 = np.array([0.4, -0.2, 0.1])
        a = VectorField(grid, np.stack([np.full(grid.shape, c) for c in a0]))
        pot = Potentials(ScalarField(grid, np.zeros(grid.shape)), a)
        expect = float(np.dot(a0, a0)) * pair.mass()
        assert pairing_energy(pair, pot) == pytest.approx(expect, rel=1e-12)

    def test_matches_direct_sum(self):
        rng = np.random.default_rng(8)
        pair = cached_pair(12, 1, seed=2)
        grid = pair.grid
        v = rng.normal(size=grid.shape)
        a = rng.normal(size=(3,) + grid.shape)
        pot = Potentials(ScalarField(grid, v), VectorField(grid, a))
        cell = grid.cell_volume
        direct = 0.0
        for idx in np.ndindex(*grid.shape):
            jdot = sum(
                pair.jp.components[k][idx] * a[k][idx] for k in range(3)
            )
            a2 = sum(a[k][idx] ** 2 for k in range(3))
            direct += (2 * jdot + pair.rho.values[idx] * (v[idx] + a2)) * cell
        assert pairing_energy(pair, pot) == pytest.approx(direct, rel=1e-10)

    def test_bilinear_in_scalar_potential(self):
        pair = cached_pair(12, 1, seed=2)
        grid = pair.grid
        x, y, _ = grid.meshgrid()
        a = zero_current(grid)
        p1 = Potentials(ScalarField(grid, x**2), a)
        p2 = Potentials(ScalarField(grid, np.exp(-(y**2))), a)
        p12 = Potentials(ScalarField(grid, x**2 + np.exp(-(y**2))), a)
        lhs = pairing_energy(pair, p12)
        rhs = pairing_energy(pair, p1) + pairing_energy(pair, p2)
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestSchwarz:
    def test_proportional_current_is_sharp(self):
        # jp = c rho A with A along one axis: equality componentwise
        grid = sampling.default_grid(16)
        rho = sampling.gaussian_mixture(grid, 1, seed=7)
        x, y, _ = grid.meshgrid()
        a1 = np.exp(-0.1 * (x**2 + y**2))
        a = np.zeros((3,) + grid.shape)
        a[0] = a1
        c = 0.3
        pair = DensityPair(
            ScalarField(grid, rho.values), VectorField(grid, c * rho.values * a)
        )
        validate_pair(pair, 1)
        pot = Potentials(ScalarField(grid, np.zeros(grid.shape)), VectorField(grid, a))
        audits = schwarz_audit(pair, pot)
        assert audits[0].lhs == pytest.approx(audits[0].rhs, rel=1e-10)
        assert all(a.passed for a in audits)

    def test_zero_current(self):
        pair = cached_gaussian_pair(16)
        grid = pair.grid
        a = VectorField(grid, np.ones((3,) + grid.shape))
        pot = Potentials(ScalarField(grid, np.zeros(grid.shape)), a)
        audits = schwarz_audit(pair, pot)
        assert all(a.lhs == 0.0 and a.passed for a in audits)

    def test_random_pairs_hold(self):
        for seed in range(5):
            pair = cached_pair(12, 1, seed=20 + seed)
            grid = pair.grid
            rng = np.random.default_rng(seed)
            x, y, z = grid.meshgrid()
            a = np.stack(
                [
                    rng.normal() * np.exp(-0.05 * (x**2 + y**2)),
                    rng.normal() * np.exp(-0.05 * (y**2 + z**2)),
                    rng.normal() * np.cos(0.2 * z),
                ]
            )
            pot = Potentials(
                ScalarField(grid, np.zeros(grid.shape)), VectorField(grid, a)
            )
            assert all(a.passed for a in schwarz_audit(pair, pot))
