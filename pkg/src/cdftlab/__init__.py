"""cdftlab: desk-scale numerics for paramagnetic current-density
functionals — admissibility validation, the explicit determinantal
construction, functional and bound audits, 1D magnetic lattice ground
states, and sampled Legendre transforms."""

__version__ = "0.1.0"

from .density import DensityPair, Potentials, Provenance, validate_pair
from .fields import (
    ComplexField,
    GridSpec,
    ScalarField,
    VectorField,
    grid_1d,
    grid_3d,
    integrate,
)

__all__ = [
    "__version__",
    "ComplexField",
    "DensityPair",
    "GridSpec",
    "Potentials",
    "Provenance",
    "ScalarField",
    "VectorField",
    "grid_1d",
    "grid_3d",
    "integrate",
    "validate_pair",
]
