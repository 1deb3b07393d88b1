"""Density-pair model: membership validation, vorticity, convex
combinations, pairing energies, and the componentwise Schwarz audit.

A pair (rho, jp) is admissible ("validated") when rho is nonnegative up
to tolerance, carries the target mass, has finite gradient energy, the
current is integrable, and int |jp|^2 / rho is finite under the floor
rule. Validation never raises: failures come back as verdicts with
reason codes. Membership in the smaller v-representable class is only
ever assigned by the lattice solver, never inferred here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import functionals
from .fields import (
    BOUNDARY_MASS_LIMIT,
    ScalarField,
    VectorField,
    boundary_mass_fraction,
    curl,
    eroded_mask,
    integrate,
    require_same_grid,
)
from .reports import audit

TOL_MASS_RTOL = 1e-8    # x N
TOL_NEG_RTOL = 1e-12    # x max(rho)


class Provenance(str, Enum):
    RAW = "raw"
    VALIDATED_YN = "validated_YN"
    SOLVER_AN = "solver_AN"


@dataclass
class DensityPair:
    rho: ScalarField
    jp: VectorField
    provenance: Provenance = Provenance.RAW

    def __post_init__(self):
        require_same_grid(self.rho, self.jp)
        if isinstance(self.provenance, str):
            self.provenance = Provenance(self.provenance)

    @property
    def grid(self):
        return self.rho.grid

    @property
    def is_validated(self) -> bool:
        return self.provenance is not Provenance.RAW

    def mass(self) -> float:
        return integrate(self.rho)


@dataclass
class Potentials:
    """External potential pair (v, A); A is kept bounded (finite max-norm)."""

    v: ScalarField
    a: VectorField

    def __post_init__(self):
        require_same_grid(self.v, self.a)
        if not np.all(np.isfinite(self.v.values)):
            raise ValueError("scalar potential contains non-finite values")
        if not np.all(np.isfinite(self.a.components)):
            raise ValueError("vector potential contains non-finite values")

    @property
    def grid(self):
        return self.v.grid


@dataclass
class ValidationReport:
    n_target: int
    mass: float
    j1_value: float
    j0_value: float            # math.inf when the floor rule rejects
    jp_l1_norm: float
    negativity_fraction: float
    boundary_fraction: float
    verdict: bool
    reasons: list = field(default_factory=list)

    def as_dict(self):
        return {
            "n_target": self.n_target,
            "mass": self.mass,
            "j1_value": self.j1_value,
            "j0_value": "inf" if math.isinf(self.j0_value) else self.j0_value,
            "jp_l1_norm": self.jp_l1_norm,
            "negativity_fraction": self.negativity_fraction,
            "boundary_fraction": self.boundary_fraction,
            "verdict": self.verdict,
            "reasons": list(self.reasons),
        }


def validate_pair(pair: DensityPair, n: int) -> ValidationReport:
    """Check admissibility of (rho, jp) for particle number n.

    On success the pair's provenance is upgraded to validated_YN (solver
    provenance is kept). Failures are verdicts, not exceptions.
    """
    n = int(n)
    rho = pair.rho
    jp = pair.jp
    reasons = []

    rmax = float(np.max(rho.values)) if rho.values.size else 0.0
    tol_neg = TOL_NEG_RTOL * max(rmax, 0.0)
    neg = np.minimum(rho.values, 0.0)
    total_abs = float(np.abs(rho.values).sum())
    negativity = float(-neg.sum()) / total_abs if total_abs > 0 else 0.0
    if bool(np.any(rho.values < -tol_neg)):
        reasons.append("negativity")

    mass = integrate(rho)
    if abs(mass - n) > TOL_MASS_RTOL * n:
        reasons.append("mass")

    bfrac = boundary_mass_fraction(rho)
    if bfrac > BOUNDARY_MASS_LIMIT:
        reasons.append("boundary_mass")

    j1v = functionals.j1(rho)
    if not math.isfinite(j1v):
        reasons.append("J1 infinite")

    l1 = float(np.abs(jp.components).sum(axis=0).sum()) * rho.grid.cell_volume
    if not math.isfinite(l1):
        reasons.append("jp L1 infinite")

    j0v = functionals.j0_integral(rho, jp)
    if math.isinf(j0v):
        reasons.append("J0 infinite")

    verdict = not reasons
    if verdict and pair.provenance is Provenance.RAW:
        pair.provenance = Provenance.VALIDATED_YN
    return ValidationReport(
        n_target=n,
        mass=mass,
        j1_value=j1v,
        j0_value=j0v,
        jp_l1_norm=l1,
        negativity_fraction=negativity,
        boundary_fraction=bfrac,
        verdict=verdict,
        reasons=reasons,
    )


def vorticity(pair: DensityPair) -> VectorField:
    """curl(jp / rho) with the floor rule: velocity is zero below the
    density floor, and cells whose stencil touches the floored region
    report zero vorticity (they are the flagged cells; see
    low_density_cell_count). Raises UnsupportedCurrent when the current
    is non-negligible on floored cells, dimension error via curl in 1D."""
    u = functionals.floor_velocity(pair.rho, pair.jp)
    w = curl(u)
    valid = eroded_mask(functionals.support_mask(pair.rho))
    w.components[:, ~valid] = 0.0
    return w


def low_density_cell_count(pair: DensityPair) -> int:
    """Number of cells under the density floor (surfaced in reports)."""
    eps = functionals.density_floor(pair.rho.values)
    return int(np.count_nonzero(pair.rho.values <= eps))


def convex_combine(pairs, weights) -> DensityPair:
    """Componentwise convex combination; all-validated inputs yield a
    re-checked validated output."""
    if len(pairs) == 0:
        raise ValueError("need at least one pair")
    w = np.asarray([float(x) for x in weights], dtype=float)
    if len(w) != len(pairs):
        raise ValueError("weights and pairs must have matching length")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    grid = pairs[0].grid
    for p in pairs[1:]:
        require_same_grid(pairs[0].rho, p.rho)
    rho = np.zeros(grid.shape)
    jp = np.zeros((grid.dim,) + grid.shape)
    for wi, p in zip(w, pairs):
        rho += wi * p.rho.values
        jp += wi * p.jp.components
    out = DensityPair(ScalarField(grid, rho), VectorField(grid, jp))
    if all(p.is_validated for p in pairs):
        n = int(round(integrate(out.rho)))
        validate_pair(out, n)
    return out


def pairing_energy(pair: DensityPair, pot: Potentials) -> float:
    """Potential-dependent energy 2 int jp . A + int rho (v + |A|^2)."""
    require_same_grid(pair.rho, pot.v)
    cell = pair.grid.cell_volume
    ja = float((pair.jp.components * pot.a.components).sum()) * cell
    a2 = (pot.a.components**2).sum(axis=0)
    rv = float((pair.rho.values * (pot.v.values + a2)).sum()) * cell
    return 2.0 * ja + rv


def schwarz_audit(pair: DensityPair, pot: Potentials, tolerance=None):
    """Componentwise Cauchy-Schwarz check:
    int |(jp)_k A^k| <= sqrt(J0) sqrt(int rho |A|^2), one audit per k."""
    if not pair.is_validated:
        raise ValueError("schwarz_audit requires a validated pair")
    require_same_grid(pair.rho, pot.v)
    cell = pair.grid.cell_volume
    j0v = functionals.j0_integral(pair.rho, pair.jp)
    a2 = (pot.a.components**2).sum(axis=0)
    rho_a2 = float((pair.rho.values * a2).sum()) * cell
    rhs = math.sqrt(max(j0v, 0.0)) * math.sqrt(max(rho_a2, 0.0))
    out = []
    for k in range(pair.grid.dim):
        lhs = float(
            np.abs(pair.jp.components[k] * pot.a.components[k]).sum()
        ) * cell
        tol = (
            tolerance
            if tolerance is not None
            else 1e-10 * max(1.0, abs(lhs), abs(rhs))
        )
        out.append(audit(f"schwarz_component_{k + 1}", lhs, rhs, tol))
    return out
