"""Structure-preserving finite-element solvers for phase-field flow models."""

from .assembly import FormContext, QuadratureRule, SchemeKind, quadrature, skew_form
from .mesh import Mesh, build_periodic_unit_square, triangle_geometry
from .physics import MaterialLaws, dg_potential, dg_potential_db, double_well
from .schemes import NewtonReport, SchemeConfig, SchemeState, StepFailure, initial_state, run, step
from .spaces import DofMap, FieldVector, SpaceKind, build_space, eval_basis, interpolate

__all__ = [
    "FormContext",
    "QuadratureRule",
    "SchemeKind",
    "quadrature",
    "skew_form",
    "Mesh",
    "build_periodic_unit_square",
    "triangle_geometry",
    "MaterialLaws",
    "dg_potential",
    "dg_potential_db",
    "double_well",
    "NewtonReport",
    "SchemeConfig",
    "SchemeState",
    "StepFailure",
    "initial_state",
    "run",
    "step",
    "DofMap",
    "FieldVector",
    "SpaceKind",
    "build_space",
    "eval_basis",
    "interpolate",
]
