"""Stochastic elliptic inverse problem: P1 forward/adjoint solver on the
unit square, bi-Laplacian-type priors, pointwise observation, and the
score-plus-regularization objective with its adjoint gradient."""

from .mesh import Mesh
from .fem import (
    EllipticSystem,
    assemble,
    load_field,
    neumann_load,
    save_field,
    solve_adjoint,
    solve_forward,
    volume_load,
)
from .observe import ObservationOperator, lattice_points, make_observations
from .prior import Prior, PriorSpec, build_prior
from .objective import make_objective, objective_and_gradient

__all__ = [
    "Mesh", "EllipticSystem", "assemble", "solve_forward", "solve_adjoint",
    "volume_load", "neumann_load", "save_field", "load_field",
    "ObservationOperator", "lattice_points", "make_observations",
    "Prior", "PriorSpec", "build_prior",
    "make_objective", "objective_and_gradient",
]
