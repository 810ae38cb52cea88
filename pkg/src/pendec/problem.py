"""Abstract problem model: objective/constraint oracles over a geometric set.

A problem is  min f(x)  s.t.  G(x) in C,  x in D  on a Euclidean space.
Matrix-valued spaces are flattened to vectors with the shape kept as
metadata, so the Frobenius inner product coincides with the dot product
and there is a single solver code path.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .convex_sets import ConvexTarget
from .errors import DimensionMismatch, EvaluationError
from .geometric_sets import GeometricSet

# objective oracle: x -> (value, gradient); value and gradient come from one
# call so line searches can reuse shared work
ObjectiveOracle = Callable[[np.ndarray], tuple[float, np.ndarray]]

# constraint oracle: x -> (G(x), adjoint apply lam -> G'(x)* lam); Jacobians
# are never materialized, matrix-space problems make them prohibitively large
ConstraintOracle = Callable[[np.ndarray], tuple[np.ndarray, Callable[[np.ndarray], np.ndarray]]]


@dataclass
class Problem:
    objective: ObjectiveOracle
    geometric_set: GeometricSet
    dim_x: int
    constraint_map: Optional[ConstraintOracle] = None
    convex_target: Optional[ConvexTarget] = None
    dim_y: int = 0
    x0: Optional[np.ndarray] = None
    name: str = "custom"
    x_shape: Optional[tuple] = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.constraint_map is None) != (self.convex_target is None):
            raise ValueError("constraint_map and convex_target must be given together")
        if self.convex_target is not None and self.convex_target.dim != self.dim_y:
            raise DimensionMismatch("convex target dimension differs from dim_y")
        if self.geometric_set.dim != self.dim_x:
            raise DimensionMismatch("geometric set dimension differs from dim_x")
        if self.x0 is not None:
            self.x0 = np.asarray(self.x0, dtype=float)

    @property
    def has_constraints(self):
        return self.constraint_map is not None

    def default_start(self):
        if self.x0 is None:
            return np.zeros(self.dim_x)
        return self.x0.copy()

    def project_geometric(self, x):
        return self.geometric_set.project(x)


def check_point(x, dim, name="x"):
    """Validate dimension and finiteness of an iterate."""
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise DimensionMismatch(f"{name} has shape {x.shape}, expected ({dim},)")
    if not np.all(np.isfinite(x)):
        raise EvaluationError(f"{name} contains non-finite entries")
    return x


def evaluate_objective(problem, x):
    """Objective oracle dispatch with dimension and finiteness checks."""
    x = check_point(x, problem.dim_x)
    value, grad = problem.objective(x)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != (problem.dim_x,):
        raise DimensionMismatch(f"gradient has shape {grad.shape}, expected ({problem.dim_x},)")
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise EvaluationError("objective oracle returned non-finite values")
    return float(value), grad


def evaluate_constraints(problem, x):
    """Return (G(x), dist_C(G(x))); an absent constraint map gives (empty, 0)."""
    x = check_point(x, problem.dim_x)
    if not problem.has_constraints:
        return np.zeros(0), 0.0
    g, _ = problem.constraint_map(x)
    g = np.asarray(g, dtype=float)
    if g.shape != (problem.dim_y,):
        raise DimensionMismatch(f"constraint value has shape {g.shape}, expected ({problem.dim_y},)")
    if not np.all(np.isfinite(g)):
        raise EvaluationError("constraint oracle returned non-finite values")
    return g, problem.convex_target.distance(g)


class CountingProblem:
    """Per-run view of a problem that counts oracle calls and D-projections.

    A single run owns its wrapper, so counting needs no locks and the
    underlying problem stays safe for concurrent use by other runs.
    """

    def __init__(self, problem):
        self.base = problem
        self.objective_evals = 0
        self.constraint_evals = 0
        self.projections = 0

    @property
    def dim_x(self):
        return self.base.dim_x

    @property
    def dim_y(self):
        return self.base.dim_y

    @property
    def convex_target(self):
        return self.base.convex_target

    @property
    def geometric_set(self):
        return self.base.geometric_set

    @property
    def has_constraints(self):
        return self.base.has_constraints

    @property
    def extras(self):
        return self.base.extras

    def objective(self, x):
        self.objective_evals += 1
        return self.base.objective(x)

    def constraint_map(self, x):
        self.constraint_evals += 1
        return self.base.constraint_map(x)

    def project_geometric(self, x):
        self.projections += 1
        return self.base.geometric_set.project(x)

    def counters(self):
        return {
            "objective_evals": self.objective_evals,
            "constraint_evals": self.constraint_evals,
            "projections": self.projections,
        }
