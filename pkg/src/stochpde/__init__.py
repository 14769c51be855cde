"""Random walks, the PDEs they limit to, and symmetry/similarity verification."""

__version__ = "0.1.0"

from .grid import (  # noqa: F401
    SpaceTimeGrid,
    FieldHistory,
    BoundaryCondition,
    Periodic,
    Dirichlet,
    Reflecting,
    second_space_derivative,
    grid_norm,
    interpolate,
    fit_convergence_order,
)
