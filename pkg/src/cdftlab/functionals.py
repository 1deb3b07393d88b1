"""Density-pair functionals and bound audits.

Implements the computable functionals

    J1(rho)      = int (grad sqrt(rho))^2          (link quadrature)
    J0(rho, jp)  = int |jp|^2 / rho                (floor rule)
    J_lambda     = lam * J1 + (1 - lam) * J0       (+inf off Y_N)
    Hartree      = (1/2) int int rho(x) rho(y) K_eta(x - y)

with K_eta(r) = 1/sqrt(|r|^2 + eta^2), eta = h/2. The softened kernel is
a monotone underestimate of 1/|r|, so the Hardy-Littlewood-Sobolev audit
stays sound. The double sum is evaluated by exact FFT convolution; it
equals the direct O(cells^2) sum to round-off, and the test suite keeps
an independent direct-sum oracle.

Audited inequality chain for curl-free pairs (constants in closed form):

    hartree <= C1 ||rho||_{6/5}^2 <= C1 N^{3/2} ||rho||_{L3}^{1/2}
            <= C1 C2 N^{3/2} J1^{1/2} <= a (N + N^2 J1)

    Q_upper = (1 + (4 pi)^2 (N^2 - 1)/12) J1 + J0 + hartree
    J_lam  <= a N + (b + c N^2) J1 + J0

with C1 = 2 (4/sqrt(pi))^{2/3} / 3, C2 = 2 / (sqrt(3) 2^{1/3} pi^{2/3}),
a = 4/(3 sqrt(3) pi), b = 1 - (4 pi)^2 / 12, c = (4 pi)^2 / 12 + a.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve

from .errors import CurlTooLarge, UnsupportedCurrent
from .fields import (
    DEFAULT_CURL_RTOL,
    ScalarField,
    VectorField,
    curl,
    dirichlet_energy,
    eroded_mask,
    require_same_grid,
)
from .reports import FunctionalValue, audit, finite_value, infinite_value

HLS_C1 = 2.0 * (4.0 / math.sqrt(math.pi)) ** (2.0 / 3.0) / 3.0
SOBOLEV_C2 = 2.0 / (math.sqrt(3.0) * 2.0 ** (1.0 / 3.0) * math.pi ** (2.0 / 3.0))
COR15_A = 4.0 / (3.0 * math.sqrt(3.0) * math.pi)
COR15_B = 1.0 - (4.0 * math.pi) ** 2 / 12.0
COR15_C = (4.0 * math.pi) ** 2 / 12.0 + COR15_A

# rho-floor rule: below eps_rho the current must vanish (within eps_j)
# for the pair to have finite J0. The j-floor sits three orders above the
# rho-floor: cells exactly at the rho-floor boundary carry
# |jp| ~ eps_rho * |velocity|, which a 1e-12 j-floor misclassifies on
# fine grids, while genuinely unsupported currents run ~1e9 larger.
FLOOR_RTOL_RHO = 1e-12
FLOOR_RTOL_J = 1e-9


def density_floor(rho_values) -> float:
    m = float(np.max(rho_values)) if rho_values.size else 0.0
    return FLOOR_RTOL_RHO * max(m, 0.0)


def floor_velocity(rho: ScalarField, jp: VectorField, strict=True) -> VectorField:
    """jp / rho with the floor rule: cells where rho is below floor get
    velocity 0; if the current there is non-negligible, raise
    UnsupportedCurrent (strict) or still zero it (non-strict)."""
    require_same_grid(rho, jp)
    eps_r = density_floor(rho.values)
    jmag = jp.magnitude()
    eps_j = FLOOR_RTOL_J * float(jmag.max()) if jmag.size else 0.0
    low = rho.values <= eps_r
    if strict and bool(np.any(low & (jmag > eps_j))):
        raise UnsupportedCurrent(
            "current exceeds floor on cells where the density is below floor"
        )
    u = np.zeros_like(jp.components)
    ok = ~low
    u[:, ok] = jp.components[:, ok] / rho.values[ok]
    return VectorField(jp.grid, u)


def j0_integral(rho: ScalarField, jp: VectorField) -> float:
    """int |jp|^2 / rho under the floor rule; +inf when the current lives
    where the density does not."""
    require_same_grid(rho, jp)
    eps_r = density_floor(rho.values)
    j2 = (jp.components**2).sum(axis=0)
    eps_j = FLOOR_RTOL_J * float(np.sqrt(j2.max())) if j2.size else 0.0
    low = rho.values <= eps_r
    if bool(np.any(low & (np.sqrt(j2) > eps_j))):
        return math.inf
    ok = ~low
    total = float((j2[ok] / rho.values[ok]).sum()) * rho.grid.cell_volume
    return total


def j1(rho: ScalarField) -> float:
    """von Weizsaecker term int (grad sqrt(rho))^2, link quadrature;
    negative density values are floored at 0 before the square root."""
    u = np.sqrt(np.maximum(rho.values, 0.0))
    return dirichlet_energy(u, rho.grid)


def j0(pair) -> float:
    """Current kinetic term; +inf sentinel for unvalidated pairs."""
    if not pair.is_validated:
        return math.inf
    return j0_integral(pair.rho, pair.jp)


def j_lambda(pair, lam: float) -> FunctionalValue:
    """lam * J1 + (1 - lam) * J0 on validated pairs, +inf otherwise."""
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    if not pair.is_validated:
        return infinite_value("Jlambda", lam=lam)
    v0 = j0_integral(pair.rho, pair.jp)
    if math.isinf(v0):
        return infinite_value("Jlambda", lam=lam)
    return finite_value("Jlambda", lam * j1(pair.rho) + (1.0 - lam) * v0, lam=lam)


def softening_length(grid) -> float:
    """eta = h/2 with h the geometric-mean spacing."""
    return 0.5 * float(np.prod(grid.spacing)) ** (1.0 / grid.dim)


def _coulomb_kernel(grid):
    eta = softening_length(grid)
    disp = [np.arange(-(n - 1), n) * h for n, h in zip(grid.shape, grid.spacing)]
    mesh = np.meshgrid(*disp, indexing="ij")
    r2 = sum(m**2 for m in mesh)
    return 1.0 / np.sqrt(r2 + eta * eta)


def coulomb_bilinear(a_values, b_values, grid) -> complex:
    """sum_{x,y} conj(a)(x) K_eta(x - y) b(y) * cellvol^2, by exact FFT
    convolution (identical to the direct double sum up to round-off)."""
    K = _coulomb_kernel(grid)
    if np.iscomplexobj(a_values) or np.iscomplexobj(b_values):
        phi = fftconvolve(np.real(b_values), K, mode="same") + 1j * fftconvolve(
            np.imag(b_values), K, mode="same"
        )
        out = np.sum(np.conj(a_values) * phi)
    else:
        phi = fftconvolve(b_values, K, mode="same")
        out = np.sum(a_values * phi)
    return out * grid.cell_volume**2


def hartree(rho: ScalarField) -> float:
    """Softened Coulomb self-repulsion (1/2) int int rho rho K_eta."""
    if rho.grid.dim != 3:
        raise ValueError("hartree is defined on 3-dimensional grids")
    return 0.5 * float(np.real(coulomb_bilinear(rho.values, rho.values, rho.grid)))


def lp_norm(rho: ScalarField, p: float) -> float:
    """||rho||_{L^p} by the same midpoint quadrature as every integral."""
    v = np.maximum(rho.values, 0.0)
    return float((v**p).sum() * rho.grid.cell_volume) ** (1.0 / p)


def _audit_scale(*vals):
    return max(1.0, *(abs(v) for v in vals))


def hls_audit(rho: ScalarField, tolerance=None):
    """hartree(rho) <= C1 * (int rho^{6/5})^{5/3}; softening only lowers
    the left side, so a pass is expected for any nonnegative rho."""
    lhs = hartree(rho)
    rhs = HLS_C1 * lp_norm(rho, 1.2) ** 2
    tol = tolerance if tolerance is not None else 1e-10 * _audit_scale(lhs, rhs)
    return audit("hls", lhs, rhs, tol)


def sobolev_chain_audit(rho: ScalarField, n: int, tolerance=None):
    """Audit each link of the Hartree bound chain for mass-n densities."""
    n = int(n)
    hart = hartree(rho)
    t1 = HLS_C1 * lp_norm(rho, 1.2) ** 2
    t2 = HLS_C1 * n**1.5 * lp_norm(rho, 3.0) ** 0.5
    t3 = HLS_C1 * SOBOLEV_C2 * n**1.5 * math.sqrt(j1(rho))
    t4 = COR15_A * (n + n**2 * j1(rho))
    links = [
        ("chain1_hls", hart, t1),
        ("chain2_interpolation", t1, t2),
        ("chain3_sobolev", t2, t3),
        ("chain4_amgm", t3, t4),
    ]
    out = []
    for name, lhs, rhs in links:
        tol = tolerance if tolerance is not None else 1e-10 * _audit_scale(lhs, rhs)
        out.append(audit(name, lhs, rhs, tol))
    return out


def prop14_coefficient(n: int) -> float:
    return 1.0 + (4.0 * math.pi) ** 2 * (n * n - 1) / 12.0


def support_mask(rho: ScalarField) -> np.ndarray:
    """Cells where the density sits above its floor; the velocity field
    jp / rho is only meaningful there."""
    return rho.values > density_floor(rho.values)


def require_curl_free(pair, curl_rtol=DEFAULT_CURL_RTOL):
    """Raise CurlTooLarge unless the pair's velocity field jp/rho is
    discretely curl-free on the density support (cells whose stencil
    stays above the floor). 1D pairs are curl-free by construction."""
    if pair.rho.grid.dim == 1:
        return
    u = floor_velocity(pair.rho, pair.jp)
    umax = float(np.abs(u.components).max())
    if umax == 0.0:
        return
    valid = eroded_mask(support_mask(pair.rho))
    if not valid.any():
        return
    cmax = float(np.abs(curl(u).components).max(axis=0)[valid].max())
    tol = curl_rtol * umax
    if cmax > tol:
        raise CurlTooLarge(cmax, tol)


def _require_validated(pair):
    if not pair.is_validated:
        raise ValueError("operation requires a validated density pair")


def q_upper_bound_curlfree(pair, n: int) -> float:
    """Constrained-search upper bound for curl-free validated pairs:
    (1 + (4 pi)^2 (N^2 - 1)/12) J1 + J0 + hartree."""
    _require_validated(pair)
    require_curl_free(pair)
    return (
        prop14_coefficient(n) * j1(pair.rho)
        + j0_integral(pair.rho, pair.jp)
        + hartree(pair.rho)
    )


def corollary15_audit(pair, n: int, lam: float, tolerance=None):
    """Audit J_lam <= aN + (b + c N^2) J1 + J0 for curl-free validated
    pairs; at N = 1 additionally audit J_lam <= Q_exact <= RHS with the
    single-particle oracle."""
    _require_validated(pair)
    require_curl_free(pair)
    n = int(n)
    v1 = j1(pair.rho)
    v0 = j0_integral(pair.rho, pair.jp)
    jl = j_lambda(pair, lam).as_float()
    rhs = COR15_A * n + (COR15_B + COR15_C * n * n) * v1 + v0

    def tol(*vals):
        return tolerance if tolerance is not None else 1e-10 * _audit_scale(*vals)

    out = [audit("cor15_jlambda_le_rhs", jl, rhs, tol(jl, rhs))]
    if n == 1:
        from .detbuilder import q_exact_n1

        q = q_exact_n1(pair)
        out.append(audit("cor15_jlambda_le_q", jl, q, tol(jl, q)))
        out.append(audit("cor15_q_le_rhs", q, rhs, tol(q, rhs)))
    return out
