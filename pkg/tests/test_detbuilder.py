import math

import numpy as np
import pytest
from scipy.special import erf

from cdftlab import sampling
from cdftlab.density import DensityPair, validate_pair
from cdftlab.detbuilder import (
    build_orbitals,
    cumulative_phase_f,
    densities_from_orbitals,
    det_report,
    default_orth_tol,
    exc_fejer,
    fejer,
    g_bound_audit,
    kinetic_bound_audit,
    kinetic_direct,
    kinetic_formula,
    kinetic_tolerance,
    phase_S,
    phase_gradient_energy,
    q_exact_n1,
)
from cdftlab.errors import CurlTooLarge
from cdftlab.fields import ScalarField, VectorField, grid_3d, _gradient_values
from cdftlab.functionals import (
    hartree,
    j0,
    j0_integral,
    j1,
    softening_length,
)

from conftest import cached_gaussian_pair, cached_pair


class TestCumulativePhase:
    def test_endpoints(self):
        pair = cached_gaussian_pair(48)
        f = cumulative_phase_f(pair.rho, 1)
        assert f.values[0] == pytest.approx(0.0, abs=1e-8)
        assert f.values[-1] == pytest.approx(2.0 * math.pi, abs=1e-8)

    def test_gaussian_cdf_profile(self):
        # marginal of the standard Gaussian integrates to the erf CDF:
        # f(x1) = pi (1 + erf(x1)); cumulative-trapezoid error is
        # 2 pi (h^2/12) max|d marginal/dx| ~ 0.25 h^2, checked at 50% slack
        pair = cached_gaussian_pair(48)
        f = cumulative_phase_f(pair.rho, 1)
        x = f.grid.axis_coords(0)
        h = f.grid.spacing[0]
        expected = math.pi * (1.0 + erf(x))
        assert np.abs(f.values - expected).max() < 0.4 * h * h

    def test_zero_left_half(self):
        grid = grid_3d(24, -6.0, 6.0)
        x, y, z = grid.meshgrid()
        rho = np.where(x > 1.0, np.exp(-((x - 3) ** 2 + y**2 + z**2)), 0.0)
        rho /= rho.sum() * grid.cell_volume
        f = cumulative_phase_f(ScalarField(grid, rho), 1)
        left = f.grid.axis_coords(0) < 0.5
        assert np.all(f.values[left] == 0.0)

    def test_monotone(self):
        pair = cached_pair(16, 3, seed=2)
        f = cumulative_phase_f(pair.rho, 3)
        assert np.all(np.diff(f.values) >= 0.0)


class TestPhaseS:
    def test_zero_current(self):
        pair = cached_gaussian_pair(16)
        s = phase_S(pair)
        assert np.all(s.values == 0.0)

    def test_linear_phase(self):
        # jp = rho * grad(x1): S recovers x1 - x1(ref) on the support
        pair = cached_gaussian_pair(16)
        grid = pair.grid
        x, _, _ = grid.meshgrid()
        u = _gradient_values(x, grid)
        moving = DensityPair(pair.rho, VectorField(grid, pair.rho.values * u))
        validate_pair(moving, 1)
        s = phase_S(moving)
        sup = pair.rho.values > 1e-10 * pair.rho.values.max()
        ref = np.argwhere(pair.rho.values > 1e-12 * pair.rho.values.max())[0]
        expected = x - x[tuple(ref)]
        assert np.abs((s.values - expected)[sup]).max() < 1e-10

    def test_rotational_rejected(self):
        grid = sampling.default_grid(16)
        pair = sampling.rotational_pair(grid, 1, seed=3)
        with pytest.raises(CurlTooLarge):
            phase_S(pair)


class TestOrbitals:
    def test_density_reproduced_exactly(self):
        pair = cached_pair(16, 3, seed=21)
        orbs = build_orbitals(pair, 3)
        rho_out, _ = densities_from_orbitals(orbs)
        scale = pair.rho.values.max()
        assert np.abs(rho_out.values - pair.rho.values).max() <= 1e-12 * scale

    def test_gram_matrix_near_identity(self):
        pair = cached_pair(32, 3, seed=22)
        orbs = build_orbitals(pair, 3)
        g = orbs.gram_matrix()
        assert np.abs(g - np.eye(3)).max() <= default_orth_tol(pair.grid)

    def test_gram_error_shrinks_under_refinement(self):
        errs = []
        for cells in (16, 32, 64):
            pair = sampling.refinement_pair(cells, n=2, seed=0)
            orbs = build_orbitals(pair, 2)
            errs.append(np.abs(orbs.gram_matrix() - np.eye(2)).max())
        assert errs[0] > errs[1] > errs[2]

    def test_norms_are_one(self):
        pair = cached_pair(16, 2, seed=23)
        orbs = build_orbitals(pair, 2)
        g = orbs.gram_matrix()
        assert np.abs(np.diag(g) - 1.0).max() < 1e-8

    def test_current_reproduction_refines(self):
        errs = []
        for cells in (16, 32, 64):
            pair = sampling.refinement_pair(cells, n=2, seed=4)
            orbs = build_orbitals(pair, 2)
            _, jp_out = densities_from_orbitals(orbs)
            cell = pair.grid.cell_volume
            errs.append(
                float(np.abs(jp_out.components - pair.jp.components).sum()) * cell
            )
        assert 2.8 <= errs[0] / errs[1] <= 5.2
        assert 2.8 <= errs[1] / errs[2] <= 5.2

    def test_mass_mismatch_rejected(self):
        pair = cached_pair(16, 2, seed=23)
        with pytest.raises(ValueError):
            build_orbitals(pair, 3)


class TestKinetic:
    def test_n1_real_orbital_equals_j1(self):
        pair = cached_gaussian_pair(16)
        orbs = build_orbitals(pair, 1)
        assert kinetic_direct(orbs) == pytest.approx(j1(pair.rho), rel=1e-12)

    def test_n1_with_phase(self):
        pair = cached_gaussian_pair(24)
        grid = pair.grid
        x, _, _ = grid.meshgrid()
        u = _gradient_values(x, grid)
        moving = DensityPair(pair.rho, VectorField(grid, 0.5 * pair.rho.values * u))
        validate_pair(moving, 1)
        orbs = build_orbitals(moving, 1)
        expected = j1(moving.rho) + j0(moving)
        tol = kinetic_tolerance(grid, expected)
        assert abs(kinetic_direct(orbs) - expected) <= tol

    def test_n1_formula_is_j1_plus_j0(self):
        pair = cached_pair(16, 1, seed=24)
        expect = j1(pair.rho) + j0_integral(pair.rho, pair.jp)
        assert kinetic_formula(pair, 1) == pytest.approx(expect, rel=1e-14)

    @pytest.mark.parametrize("n", [2, 3])
    def test_two_paths_agree(self, n):
        pair = cached_pair(32, n, seed=30 + n)
        orbs = build_orbitals(pair, n)
        direct = kinetic_direct(orbs)
        formula = kinetic_formula(pair, n)
        assert abs(direct - formula) <= kinetic_tolerance(
            pair.grid, max(abs(direct), abs(formula))
        )

    def test_middle_term_cross_check(self):
        # same mixture profile carrying mass 2 vs 3: the middle term is
        # ((N^2-1)/12)(2 pi/N)^2 sum g^6 h with g^2 scaling like N, so the
        # ratio is ((9-1)/(4-1)) * (2/3)^2 * (3/2)^3 = 4 exactly
        grid = sampling.default_grid(24)
        rho2 = sampling.gaussian_mixture(grid, 2, seed=7)
        rho3 = ScalarField(grid, rho2.values * 1.5)
        m2 = (2**2 - 1) / 12.0 * phase_gradient_energy(rho2, 2)
        m3 = (3**2 - 1) / 12.0 * phase_gradient_energy(rho3, 3)
        assert m3 / m2 == pytest.approx(4.0, rel=1e-12)

    def test_bound_equality_at_n1(self):
        pair = cached_pair(16, 1, seed=25)
        a = kinetic_bound_audit(pair, 1)
        assert a.passed
        assert a.margin == pytest.approx(0.0, abs=1e-12 * max(1.0, a.rhs))

    def test_bound_on_anisotropic_slab(self):
        grid = grid_3d(48, -8.0, 8.0)
        x, y, z = grid.meshgrid()
        rho = np.exp(-(x**2) / 0.4**2 - (y**2 + z**2) / 1.5**2)
        rho *= 2.0 / (rho.sum() * grid.cell_volume)
        pair = DensityPair(
            ScalarField(grid, rho), VectorField(grid, np.zeros((3,) + grid.shape))
        )
        report = validate_pair(pair, 2)
        assert report.verdict, report.reasons
        assert kinetic_bound_audit(pair, 2).passed


class TestGBound:
    def test_gaussian(self):
        pair = cached_gaussian_pair(32)
        assert g_bound_audit(pair.rho, 1).passed

    def test_two_bumps(self):
        grid = grid_3d(32, -8.0, 8.0)
        x, y, z = grid.meshgrid()
        rho = np.exp(-((x - 1.5) ** 2 + y**2 + z**2)) + np.exp(
            -((x + 1.5) ** 2 + y**2 + z**2)
        )
        rho *= 2.0 / (rho.sum() * grid.cell_volume)
        assert g_bound_audit(ScalarField(grid, rho), 2).passed

    def test_scaling_consistency(self):
        base = grid_3d(24, -6.0, 6.0)
        rho = sampling.gaussian_mixture(base, 1, seed=9)
        a0 = g_bound_audit(rho, 1)
        for s in (0.5, 2.0):
            g = grid_3d(24, -6.0 / s, 6.0 / s)
            scaled = ScalarField(g, s**3 * rho.values)
            a = g_bound_audit(scaled, 1)
            assert a.passed
            assert a.lhs == pytest.approx(s**2 * a0.lhs, rel=1e-12)
            assert a.rhs == pytest.approx(s**2 * a0.rhs, rel=1e-12)


class TestFejer:
    def test_value_at_zero_is_n(self):
        for n in range(1, 7):
            assert fejer(n, 0.0) == float(n)

    def test_n1_is_constant_one(self):
        t = np.linspace(-7.0, 7.0, 101)
        assert np.allclose(fejer(1, t), 1.0, atol=1e-12)

    def test_n2_at_pi(self):
        assert fejer(2, math.pi) == pytest.approx(0.0, abs=1e-15)

    def test_periodic_and_bounded(self):
        t = np.linspace(0.0, 2.0 * math.pi, 64)
        for n in (2, 4, 6):
            vals = fejer(n, t)
            assert np.all(vals >= -1e-14)
            assert np.all(vals <= n * (1.0 + 1e-12))
            assert np.allclose(fejer(n, t + 2 * math.pi), vals, atol=1e-9)


def exc_direct_sum(rho, n):
    """Brute-force double-sum oracle for the Fejer exchange term."""
    grid = rho.grid
    eta = softening_length(grid)
    f = cumulative_phase_f(rho, n)
    f3 = (f.values[:, None, None] * np.ones(grid.shape)).ravel()
    mesh = grid.meshgrid()
    coords = np.stack([m.ravel() for m in mesh], axis=1)
    flat = rho.values.ravel()
    total = 0.0
    for i in range(flat.size):
        d2 = ((coords - coords[i]) ** 2).sum(axis=1)
        fn = fejer(n, f3[i] - f3)
        total += flat[i] * float((flat * fn / np.sqrt(d2 + eta * eta)).sum())
    return -total * grid.cell_volume**2 / (2.0 * n)


class TestExcFejer:
    def test_n1_cancels_hartree(self):
        pair = cached_gaussian_pair(32)
        assert exc_fejer(pair.rho, 1) == pytest.approx(-hartree(pair.rho), rel=1e-12)

    def test_matches_direct_sum(self):
        grid = sampling.default_grid(10)
        rho = sampling.gaussian_mixture(grid, 2, seed=11)
        assert exc_fejer(rho, 2) == pytest.approx(exc_direct_sum(rho, 2), rel=1e-10)

    def test_nonpositive(self):
        grid = sampling.default_grid(16)
        for n in (1, 2, 4, 6):
            rho = sampling.gaussian_mixture(grid, n, seed=n)
            assert exc_fejer(rho, n) <= 0.0


class TestQExactN1:
    def test_zero_current_is_j1(self):
        pair = cached_gaussian_pair(16)
        assert q_exact_n1(pair) == pytest.approx(j1(pair.rho), rel=1e-14)

    def test_uniform_velocity(self):
        pair = cached_gaussian_pair(16)
        c = 0.4
        jp = np.zeros((3,) + pair.grid.shape)
        jp[0] = c * pair.rho.values
        moving = DensityPair(pair.rho, VectorField(pair.grid, jp))
        validate_pair(moving, 1)
        expect = j1(pair.rho) + c * c * pair.mass()
        assert q_exact_n1(moving) == pytest.approx(expect, rel=1e-10)

    def test_dominates_j0(self):
        for seed in range(5):
            pair = cached_pair(16, 1, seed=50 + seed)
            assert q_exact_n1(pair) >= j0(pair)

    def test_wrong_mass_rejected(self):
        pair = cached_pair(16, 2, seed=51)
        with pytest.raises(ValueError):
            q_exact_n1(pair)


class TestDetReport:
    def test_coherent_summary(self):
        pair = cached_pair(16, 2, seed=40)
        rep = det_report(pair, 2)
        assert rep.rho_error_max <= 1e-12
        assert rep.t_formula <= rep.t_bound_rhs
        assert rep.exc <= 0.0
        assert rep.g_bound.passed
        d = rep.as_dict()
        assert set(d) == {
            "t_direct",
            "t_formula",
            "t_bound_rhs",
            "jp_error_l1",
            "rho_error_max",
            "exc",
            "g_bound",
            "gram_offdiag",
        }
