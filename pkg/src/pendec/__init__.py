"""Penalty decomposition solvers for problems with geometric constraints.

Solves  min f(x)  s.t.  G(x) in C,  x in D  where C is convex and D is a
closed, possibly nonconvex set handled only through projections.  The
package provides the inexact penalty decomposition method, its
safeguarded-multiplier variant, an augmented-Lagrangian/spectral-gradient
baseline, the projection operators they need, stationarity certificates,
seeded benchmark generators, and a command-line benchmark harness.
"""

from . import convex_sets, geometric_sets, zoo
from .alm import AlmParams, SpectralParams, solve_alm
from .altmin import AltMinParams, alternating_minimize
from .bench import BenchConfig, RunSpec, performance_profile, relative_gap_distribution, run_grid
from .errors import (
    DimensionMismatch,
    EvaluationError,
    InfeasiblePolyhedron,
    LineSearchFailure,
    NumericalFailure,
)
from .inner import LineSearchParams, armijo_search, make_direction_strategy
from .pd import PdParams, feasibility_stationarity_check, solve_pd
from .penalty import PenaltyObjective
from .problem import CountingProblem, Problem, evaluate_constraints, evaluate_objective
from .records import Certificate, History, RunRecord

__all__ = [
    "AlmParams",
    "AltMinParams",
    "BenchConfig",
    "Certificate",
    "CountingProblem",
    "DimensionMismatch",
    "EvaluationError",
    "History",
    "InfeasiblePolyhedron",
    "LineSearchFailure",
    "LineSearchParams",
    "NumericalFailure",
    "PdParams",
    "PenaltyObjective",
    "Problem",
    "RunRecord",
    "RunSpec",
    "SpectralParams",
    "alternating_minimize",
    "armijo_search",
    "convex_sets",
    "evaluate_constraints",
    "evaluate_objective",
    "feasibility_stationarity_check",
    "geometric_sets",
    "make_direction_strategy",
    "performance_profile",
    "relative_gap_distribution",
    "run_grid",
    "solve_alm",
    "solve_pd",
    "zoo",
]

__version__ = "0.1.0"
