"""In-tree optimization engines: simplex, branch and bound, projected gradient."""

from .simplex import LpSolution, SimplexData, prepare_standard_form, simplex_solve
from .bnb import BnbResult, branch_and_bound
from .projgrad import (
    GapReport,
    PerspectiveBound,
    NaturalBound,
    capped_simplex_project,
    weighted_l1_project,
    perspective_relaxation_bound,
    natural_relaxation_bound,
    gap_report,
)

__all__ = [
    "LpSolution",
    "SimplexData",
    "prepare_standard_form",
    "simplex_solve",
    "BnbResult",
    "branch_and_bound",
    "GapReport",
    "PerspectiveBound",
    "NaturalBound",
    "capped_simplex_project",
    "weighted_l1_project",
    "perspective_relaxation_bound",
    "natural_relaxation_bound",
    "gap_report",
]
