"""Optimal linear fusion when only overlapping bounds on the error correlation are known."""

from .errors import (
    DimensionError,
    InfeasibleError,
    NoProjectionBoundError,
    NotPSDError,
    NumericalTroubleError,
    OCIError,
)
from .feasibility import FeasibilityReport, analyze, oci_feasible
from .linalg import DEFAULT_TOL, Tolerances
from .problem import FusionProblem, Objective, ProjectionBoundRequest
from .solver import FusionSolution, reconstruct_from_gain, solve_kahan_oci, solve_with_projection_bound
from .structure import ComponentBound, InfoStructure, kahan_combine

__all__ = [
    "ComponentBound",
    "DEFAULT_TOL",
    "DimensionError",
    "FeasibilityReport",
    "FusionProblem",
    "FusionSolution",
    "InfeasibleError",
    "InfoStructure",
    "NoProjectionBoundError",
    "NotPSDError",
    "NumericalTroubleError",
    "OCIError",
    "Objective",
    "ProjectionBoundRequest",
    "Tolerances",
    "analyze",
    "kahan_combine",
    "oci_feasible",
    "reconstruct_from_gain",
    "solve_kahan_oci",
    "solve_with_projection_bound",
]
