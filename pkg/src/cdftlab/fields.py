"""Uniform-grid discrete calculus in 1 and 3 dimensions.

Fields are sampled at cell centers: cell (i, ...) sits at
origin + (i + 1/2) * spacing per axis, and the domain box is
[origin, origin + shape * spacing]. All integrals are midpoint Riemann
sums (value times cell volume), which pairs exactly with the sampled
field model. Pointwise derivatives (gradient, laplacian, curl) use
second-order central stencils in the interior and second-order one-sided
stencils on the boundary; fields are assumed compactly supported, with
boundary support checked by boundary_mass_fraction rather than silently
truncated.

Energy quadratures (dirichlet_energy) use the link form
sum over axis links of (f_next - f)^2 / h^2 times cell volume. On a 1D
lattice this is exactly the Dirichlet quadratic form of the tridiagonal
kinetic operator, which keeps the variational inequalities audited
elsewhere exact at the discrete level instead of O(h^2)-fuzzy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CurlTooLarge, PathMismatch

DEFAULT_CURL_RTOL = 1e-6    # x max|u|, separates stencil noise from rotation
# Reverse-path disagreement for a discretely curl-free field is pure
# trapezoid-vs-stencil O(h^2) noise (percent-level on 16^3 grids), while
# a rotational field disagrees at order max|u| x extent; 10% separates
# the two, and the sharp rotational gate is the curl check above.
DEFAULT_PATH_RTOL = 0.1     # x (max|u| * extent), reverse-path cross-check
BOUNDARY_MASS_LIMIT = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered grid in 1 or 3 dimensions."""

    dim: int
    shape: tuple
    spacing: tuple
    origin: tuple

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ValueError(f"dim must be 1 or 3, got {self.dim}")
        shape = tuple(int(s) for s in self.shape)
        spacing = tuple(float(s) for s in self.spacing)
        origin = tuple(float(o) for o in self.origin)
        if not (len(shape) == len(spacing) == len(origin) == self.dim):
            raise ValueError("shape, spacing, origin must all have length dim")
        if any(s < 2 for s in shape):
            raise ValueError("need at least 2 cells per axis")
        if any(h <= 0 for h in spacing):
            raise ValueError("spacing must be positive on every axis")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def num_cells(self):
        return int(np.prod(self.shape))

    def axis_coords(self, axis):
        """Cell-center coordinates along one axis."""
        n, h, o = self.shape[axis], self.spacing[axis], self.origin[axis]
        return o + (np.arange(n) + 0.5) * h

    def meshgrid(self):
        axes = [self.axis_coords(a) for a in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")

    def extents(self):
        """Domain box length per axis."""
        return tuple(n * h for n, h in zip(self.shape, self.spacing))

    def same_as(self, other):
        return (
            self.dim == other.dim
            and self.shape == other.shape
            and np.allclose(self.spacing, other.spacing, rtol=0, atol=1e-14)
            and np.allclose(self.origin, other.origin, rtol=0, atol=1e-14)
        )


def grid_1d(n, xmin, xmax):
    h = (float(xmax) - float(xmin)) / int(n)
    return GridSpec(1, (int(n),), (h,), (float(xmin),))


def grid_3d(n, xmin, xmax):
    """Cubic grid with n cells per axis on [xmin, xmax]^3."""
    h = (float(xmax) - float(xmin)) / int(n)
    return GridSpec(3, (n, n, n), (h, h, h), (xmin, xmin, xmin))


def _check_values(grid, values, expected_comps=None):
    values = np.asarray(values)
    want = grid.shape if expected_comps is None else (expected_comps,) + grid.shape
    if values.shape != want:
        raise ValueError(f"values shape {values.shape} != expected {want}")
    return values


@dataclass
class ScalarField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(_check_values(self.grid, self.values), dtype=float)

    def copy(self):
        return ScalarField(self.grid, self.values.copy())


@dataclass
class VectorField:
    grid: GridSpec
    components: np.ndarray  # shape (dim, *grid.shape)

    def __post_init__(self):
        self.components = np.asarray(
            _check_values(self.grid, self.components, self.grid.dim), dtype=float
        )

    def magnitude(self):
        return np.sqrt((self.components**2).sum(axis=0))

    def copy(self):
        return VectorField(self.grid, self.components.copy())


@dataclass
class ComplexField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(_check_values(self.grid, self.values), dtype=complex)
        if not np.all(np.isfinite(self.values.real) & np.isfinite(self.values.imag)):
            raise ValueError("complex field contains non-finite values")


def require_same_grid(a, b):
    if not a.grid.same_as(b.grid):
        raise ValueError("fields live on different grids")


def integrate(f: ScalarField) -> float:
    """Midpoint Riemann sum of a scalar field over its domain box."""
    return float(f.values.sum() * f.grid.cell_volume)


def inner_product(a: ComplexField, b: ComplexField) -> complex:
    """L2 pairing (a, b) = sum conj(a) * b * cell volume."""
    require_same_grid(a, b)
    return complex(np.sum(np.conj(a.values) * b.values) * a.grid.cell_volume)


def _gradient_values(values, grid):
    if any(s < 3 for s in grid.shape):
        raise ValueError("gradient needs at least 3 cells per axis")
    parts = np.gradient(values, *grid.spacing, edge_order=2)
    if grid.dim == 1:
        parts = [parts]
    return np.stack(parts)


def gradient(f: ScalarField) -> VectorField:
    """Central-difference gradient, one-sided second order on the boundary."""
    return VectorField(f.grid, _gradient_values(f.values, f.grid))


def gradient_complex(f: ComplexField):
    """Per-axis derivatives of a complex field (same stencils as gradient)."""
    re = _gradient_values(f.values.real, f.grid)
    im = _gradient_values(f.values.imag, f.grid)
    return re + 1j * im


def laplacian(f: ScalarField) -> ScalarField:
    """Sum of per-axis second differences; matches the lattice operator
    diagonal used by the 1D solver in the interior."""
    out = np.zeros_like(f.values)
    for a in range(f.grid.dim):
        v = np.moveaxis(f.values, a, 0)
        d = np.empty_like(v)
        h2 = f.grid.spacing[a] ** 2
        d[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h2
        d[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
        d[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h2
        out += np.moveaxis(d, 0, a)
    return ScalarField(f.grid, out)


def curl(u: VectorField) -> VectorField:
    """Central-difference curl of a 3D vector field."""
    if u.grid.dim != 3:
        raise ValueError("curl requires a 3-dimensional field")
    d = [_gradient_values(u.components[k], u.grid) for k in range(3)]
    # d[k][a] = d u_k / d x_a
    c0 = d[2][1] - d[1][2]
    c1 = d[0][2] - d[2][0]
    c2 = d[1][0] - d[0][1]
    return VectorField(u.grid, np.stack([c0, c1, c2]))


def marginal_x1(f: ScalarField) -> ScalarField:
    """Integrate out x2, x3: one value per x1 slab."""
    if f.grid.dim != 3:
        raise ValueError("marginal_x1 requires a 3-dimensional field")
    h2, h3 = f.grid.spacing[1], f.grid.spacing[2]
    vals = f.values.sum(axis=(1, 2)) * h2 * h3
    g1 = GridSpec(1, (f.grid.shape[0],), (f.grid.spacing[0],), (f.grid.origin[0],))
    return ScalarField(g1, vals)


def _cumtrapz(values, axis, h):
    """Trapezoid cumulative along one axis, zero at the first cell."""
    v = np.moveaxis(values, axis, 0)
    out = np.zeros_like(v)
    np.cumsum(0.5 * (v[1:] + v[:-1]) * h, axis=0, out=out[1:])
    return np.moveaxis(out, 0, axis)


def eroded_mask(mask) -> np.ndarray:
    """Shrink a boolean mask by one cell along each axis, so surviving
    cells have full same-axis stencil support inside the original mask.
    Out-of-bounds neighbors count as inside."""
    mask = np.asarray(mask, dtype=bool)
    out = mask.copy()
    for a in range(mask.ndim):
        m = np.moveaxis(mask, a, 0)
        o = np.moveaxis(out, a, 0)
        o[1:] &= m[:-1]
        o[:-1] &= m[1:]
    return out


def line_integrate(
    u: VectorField,
    ref_point=(0, 0, 0),
    curl_rtol=DEFAULT_CURL_RTOL,
    path_rtol=DEFAULT_PATH_RTOL,
    valid_mask=None,
) -> ScalarField:
    """Potential S of a curl-free field: S(ref_point) = 0, gradient(S) ~ u.

    Integrates along the axis-ordered path x1 -> x2 -> x3 by trapezoid
    rule and cross-checks against the reverse order x3 -> x2 -> x1.
    Raises CurlTooLarge when the discrete curl exceeds curl_rtol * max|u|
    and PathMismatch when the two path orders disagree beyond
    path_rtol * max|u| * max extent. When `valid_mask` is given (cells
    where u is meaningful, e.g. a density support), both checks are
    restricted to it.
    """
    if u.grid.dim != 3:
        raise ValueError("line_integrate requires a 3-dimensional field")
    umax = float(np.abs(u.components).max())
    if umax == 0.0:
        return ScalarField(u.grid, np.zeros(u.grid.shape))
    check = np.ones(u.grid.shape, bool) if valid_mask is None else eroded_mask(valid_mask)
    tol_curl = curl_rtol * umax
    cvals = np.abs(curl(u).components).max(axis=0)
    cmax = float(cvals[check].max()) if check.any() else 0.0
    if cmax > tol_curl:
        raise CurlTooLarge(cmax, tol_curl)

    i0, j0, k0 = (int(r) for r in ref_point)
    h1, h2, h3 = u.grid.spacing
    u1, u2, u3 = u.components

    # each leg's cumulative is re-based at the reference index of its
    # own axis so every leg starts where the previous one ended
    s1 = _cumtrapz(u1, 0, h1)[:, j0 : j0 + 1, k0 : k0 + 1]
    s1 = s1 - s1[i0 : i0 + 1]
    s2 = _cumtrapz(u2, 1, h2)[:, :, k0 : k0 + 1]
    s2 = s2 - s2[:, j0 : j0 + 1]
    s3 = _cumtrapz(u3, 2, h3)
    s3 = s3 - s3[:, :, k0 : k0 + 1]
    fwd = s1 + s2 + s3

    t3 = _cumtrapz(u3, 2, h3)[i0 : i0 + 1, j0 : j0 + 1, :]
    t3 = t3 - t3[:, :, k0 : k0 + 1]
    t2 = _cumtrapz(u2, 1, h2)[i0 : i0 + 1, :, :]
    t2 = t2 - t2[:, j0 : j0 + 1]
    t1 = _cumtrapz(u1, 0, h1)
    t1 = t1 - t1[i0 : i0 + 1]
    rev = t3 + t2 + t1

    diff = np.abs(fwd - rev)
    mismatch = float(diff[check].max()) if check.any() else 0.0
    tol_path = path_rtol * umax * max(u.grid.extents())
    if mismatch > tol_path:
        raise PathMismatch(mismatch, tol_path)
    return ScalarField(u.grid, 0.5 * (fwd + rev))


def dirichlet_energy(values, grid: GridSpec) -> float:
    """Link-form gradient energy: sum over axis links of
    (f_next - f)^2 / h^2 times cell volume. Accepts real arrays."""
    values = np.asarray(values, dtype=float)
    cell = grid.cell_volume
    total = 0.0
    for a in range(grid.dim):
        d = np.diff(values, axis=a) / grid.spacing[a]
        total += float((d * d).sum()) * cell
    return total


def boundary_mass_fraction(f: ScalarField) -> float:
    """Fraction of sum |f| carried by the outermost cell shell."""
    v = np.abs(f.values)
    total = float(v.sum())
    if total == 0.0:
        return 0.0
    mask = np.zeros(f.grid.shape, dtype=bool)
    for a in range(f.grid.dim):
        m = np.moveaxis(mask, a, 0)
        m[0] = True
        m[-1] = True
    return float(v[mask].sum()) / total
