"""Desk-scale 1D magnetic Schrodinger ground states.

The lattice Hamiltonian uses the Peierls form: unit-modulus link phases
on the hopping terms,

    H[j, j]   = 2 / h^2 + v_j
    H[j, j+1] = -exp(+i A_{j+1/2} h) / h^2,

whose continuum limit is (i d/dx - A)^2 + v. The |A|^2 term is absorbed
by the link phases, and lattice gauge covariance is exact: shifting A by
a gradient fixed at the ends conjugates H by a diagonal unitary, so e0
is invariant to round-off rather than O(h). The sign of the link phase
is fixed by the ground-state current law j^p = -rho A (for the
paramagnetic current Im(conj(psi) dpsi)).

Ground states come from a deterministic Hermitian-banded eigensolve
(dense banded LAPACK path for Dirichlet at any size, dense full solve for
periodic). Only solver-produced pairs carry the v-representable
provenance mark; nothing else may assign it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .density import DensityPair, Potentials, Provenance, pairing_energy
from .detbuilder import q_exact_n1
from .errors import NonConvergence
from .fields import ComplexField, GridSpec, ScalarField, VectorField, grid_1d
from .reports import InequalityAudit, audit

EIG_RTOL = 1e-10          # residual tolerance x spectral scale
GAP_RTOL = 1e-6           # degenerate when gap < GAP_RTOL x max(1, |e0|)
NODE_FLOOR_RTOL = 1e-8    # |psi| below this x max counts as a node cell
PERIODIC_DENSE_LIMIT = 2048


@dataclass
class LatticeHamiltonian:
    grid: GridSpec
    v: ScalarField
    a: VectorField
    boundary: str
    diag: np.ndarray          # real
    off: np.ndarray           # upper off-diagonal H[j, j+1], complex
    corner: complex | None    # H[n-1, 0] for periodic, else None

    @property
    def size(self):
        return self.grid.shape[0]

    def matrix(self) -> np.ndarray:
        n = self.size
        m = np.zeros((n, n), dtype=complex)
        m[np.arange(n), np.arange(n)] = self.diag
        m[np.arange(n - 1), np.arange(1, n)] = self.off
        m[np.arange(1, n), np.arange(n - 1)] = np.conj(self.off)
        if self.corner is not None:
            m[n - 1, 0] = self.corner
            m[0, n - 1] = np.conj(self.corner)
        return m

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = self.diag * psi
        out[:-1] += self.off * psi[1:]
        out[1:] += np.conj(self.off) * psi[:-1]
        if self.corner is not None:
            out[-1] += self.corner * psi[0]
            out[0] += np.conj(self.corner) * psi[-1]
        return out

    def spectral_scale(self) -> float:
        return float(np.abs(self.diag).max() + 2.0 * np.abs(self.off).max())


@dataclass
class SpectrumResult:
    e0: float
    gap: float
    psi: ComplexField
    degenerate_flag: bool
    residual: float
    node_cells: int       # cells with |psi| below floor (psi != 0 a.e. proxy)


def discretize(v: ScalarField, a: VectorField, boundary="dirichlet") -> LatticeHamiltonian:
    """Peierls discretization of (i d/dx - A)^2 + v on the shared grid."""
    if v.grid.dim != 1:
        raise ValueError("the lattice solver is one-dimensional")
    if not v.grid.same_as(a.grid):
        raise ValueError("fields live on different grids")
    if boundary not in ("dirichlet", "periodic"):
        raise ValueError(f"unknown boundary {boundary!r}")
    h = v.grid.spacing[0]
    av = a.components[0]
    amid = 0.5 * (av[:-1] + av[1:])
    diag = 2.0 / h**2 + v.values
    off = -np.exp(1j * amid * h) / h**2
    corner = None
    if boundary == "periodic":
        alink = 0.5 * (av[-1] + av[0])
        corner = complex(-np.exp(1j * alink * h) / h**2)
    return LatticeHamiltonian(v.grid, v, a, boundary, diag, off, corner)


def ground_state(ham: LatticeHamiltonian, gap_rtol=GAP_RTOL) -> SpectrumResult:
    """Lowest eigenpair by a deterministic solve; the state is grid-L2
    normalized with a deterministic global phase. Near-degeneracy is
    flagged, not raised."""
    n = ham.size
    if ham.boundary == "dirichlet":
        band = np.zeros((2, n), dtype=complex)
        band[0] = ham.diag
        band[1, : n - 1] = np.conj(ham.off)   # subdiagonal
        w, vec = scipy.linalg.eig_banded(
            band, lower=True, select="i", select_range=(0, 1)
        )
    else:
        if n > PERIODIC_DENSE_LIMIT:
            raise ValueError(
                f"periodic solves are capped at {PERIODIC_DENSE_LIMIT} cells"
            )
        w, vec = np.linalg.eigh(ham.matrix())
    e0, e1 = float(w[0]), float(w[1])
    h = ham.grid.spacing[0]
    psi = vec[:, 0].astype(complex) / math.sqrt(h)
    k = int(np.argmax(np.abs(psi)))
    psi = psi * np.exp(-1j * np.angle(psi[k]))

    scale = ham.spectral_scale()
    resid = float(np.linalg.norm(ham.apply(psi) - e0 * psi) * math.sqrt(h))
    if resid > EIG_RTOL * scale:
        raise NonConvergence(
            f"eigenresidual {resid:.3e} exceeds {EIG_RTOL * scale:.3e}"
        )
    gap = e1 - e0
    amax = float(np.abs(psi).max())
    nodes = int(np.count_nonzero(np.abs(psi) < NODE_FLOOR_RTOL * amax))
    return SpectrumResult(
        e0=e0,
        gap=gap,
        psi=ComplexField(ham.grid, psi),
        degenerate_flag=bool(gap < gap_rtol * max(1.0, abs(e0))),
        residual=resid,
        node_cells=nodes,
    )


def densities_from_state(state: SpectrumResult) -> DensityPair:
    """(rho, jp) of a converged state, with the central-difference
    current matched to the field calculus; the only source of
    v-representable provenance."""
    grid = state.psi.grid
    psi = state.psi.values
    h = grid.spacing[0]
    rho = np.abs(psi) ** 2
    dpsi = np.gradient(psi, h, edge_order=2)
    jp = (np.conj(psi) * dpsi).imag
    return DensityPair(
        ScalarField(grid, rho),
        VectorField(grid, jp[None, :]),
        provenance=Provenance.SOLVER_AN,
    )


def e0_of(v: ScalarField, a: VectorField, boundary="dirichlet") -> float:
    return ground_state(discretize(v, a, boundary)).e0


def variational_audit(
    pair: DensityPair, pot: Potentials, boundary="dirichlet", tolerance=None
) -> InequalityAudit:
    """e0(v, A) <= Q_oracle(pair) + pairing(pair; v, A) for unit-mass 1D
    pairs; near-equality is expected when the pair is the ground pair of
    (v, A). The inequality is exact on the lattice up to the pair's mass
    tolerance, so the default band is 1e-8 x scale."""
    lhs = e0_of(pot.v, pot.a, boundary)
    rhs = q_exact_n1(pair) + pairing_energy(pair, pot)
    tol = (
        tolerance
        if tolerance is not None
        else 1e-8 * max(1.0, abs(lhs), abs(rhs))
    )
    return audit("variational_principle", lhs, rhs, tol)


def box_grid(n, length=1.0, xmin=0.0) -> GridSpec:
    """Grid whose Dirichlet ghost nodes sit exactly on the box ends, so
    the particle-in-a-box spectrum converges at O(h^2) without a
    first-order box-length shift: spacing L/(n+1), first center at
    xmin + spacing."""
    n = int(n)
    h = float(length) / (n + 1)
    return GridSpec(1, (n,), (h,), (float(xmin) + 0.5 * h,))


def richardson(values) -> tuple:
    """Extrapolate three values computed at h, h/2, h/4 assuming
    e(h) = e* + c h^p; returns (e*, fitted p)."""
    e1, e2, e3 = (float(v) for v in values)
    d1, d2 = e1 - e2, e2 - e3
    if d2 == 0.0 or d1 / d2 <= 0:
        return e3, float("nan")
    p = math.log2(d1 / d2)
    return e3 + (e3 - e2) / (2.0**p - 1.0), p


# -- scenario files -------------------------------------------------------

_POTENTIAL_KINDS = ("zero", "constant", "harmonic", "gaussian", "double_well")


def _shape_values(spec, x):
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return np.zeros_like(x)
    if kind == "constant":
        return np.full_like(x, float(spec["value"]))
    if kind == "harmonic":
        c = float(spec.get("center", 0.0))
        return float(spec.get("strength", 1.0)) * (x - c) ** 2
    if kind == "gaussian":
        c = float(spec.get("center", 0.0))
        w = float(spec.get("width", 1.0))
        return float(spec["amplitude"]) * np.exp(-((x - c) ** 2) / w**2)
    if kind == "double_well":
        s = float(spec.get("half_separation", 1.0))
        return float(spec["height"]) * ((x / s) ** 2 - 1.0) ** 2
    raise ValueError(f"unknown potential kind {kind!r}; known: {_POTENTIAL_KINDS}")


def scenario_grid(spec) -> GridSpec:
    n = int(spec["cells"])
    xmin = float(spec.get("xmin", 0.0))
    xmax = float(spec.get("xmax", 1.0))
    if spec.get("box_aligned", False):
        return box_grid(n, xmax - xmin, xmin)
    return grid_1d(n, xmin, xmax)


def load_scenario(payload) -> tuple:
    """Build (grid, Potentials, boundary) from a scenario mapping
    {grid, boundary, v, a, tolerances}."""
    grid = scenario_grid(payload["grid"])
    x = grid.axis_coords(0)
    v = ScalarField(grid, _shape_values(payload.get("v", {"kind": "zero"}), x))
    a = VectorField(
        grid, _shape_values(payload.get("a", {"kind": "zero"}), x)[None, :]
    )
    boundary = payload.get("boundary", "dirichlet")
    return grid, Potentials(v, a), boundary
