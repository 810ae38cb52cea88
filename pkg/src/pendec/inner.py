"""Descent directions and the Armijo backtracking line search.

Directions are d = -H(grad) for a positive definite scaling H.  Every
strategy is safeguarded by the bounded-eigenvalue test: a candidate with
<grad, d> > -c1*||grad||^2 or ||d|| > c2*||grad|| is replaced by the plain
negative gradient for that step, which keeps the convergence analysis of
the alternating scheme valid for arbitrary scalings.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import LineSearchFailure

CURVATURE_TOL = 1e-10


@dataclass
class LineSearchParams:
    gamma: float = 1e-4  # sufficient decrease
    beta: float = 0.5  # backtracking factor
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0 < self.gamma < 1 or not 0 < self.beta < 1:
            raise ValueError("gamma and beta must lie in (0, 1)")


def armijo_search(evaluate, q0, slope, params):
    """Backtrack from step 1: smallest j >= 0 with q(b^j) <= q0 + gamma*b^j*slope.

    evaluate maps a step size to the objective value along the ray.  Raises
    LineSearchFailure after max_backtracks reductions, which signals a
    gradient/oracle inconsistency.
    """
    if not slope < 0:
        raise ValueError(f"line search needs a descent direction, got slope {slope}")
    alpha = 1.0
    gs = params.gamma * slope
    for _ in range(params.max_backtracks + 1):
        q = evaluate(alpha)
        if q <= q0 + alpha * gs:
            return alpha, q
        alpha *= params.beta
    raise LineSearchFailure(
        f"no acceptable step after {params.max_backtracks} backtracks (slope {slope:.3e})"
    )


class DirectionStrategy:
    """Steepest descent (H = I); base class carrying the safeguard bounds.

    Instances hold mutable history and belong to a single solver run.
    """

    def __init__(self, c1=1e-6, c2=1e6):
        if not 0 < c1 <= c2:
            raise ValueError("safeguard bounds need 0 < c1 <= c2")
        self.c1 = c1
        self.c2 = c2

    def reset(self):
        pass

    def _raw_direction(self, grad):
        return -grad

    def _note_direction(self, d):
        pass

    def direction(self, grad):
        """Safeguarded descent direction for the current gradient."""
        gg = float(grad @ grad)
        if gg == 0.0:
            raise ValueError("zero gradient: the caller should have stopped")
        d = self._raw_direction(grad)
        if float(grad @ d) > -self.c1 * gg or float(d @ d) > self.c2**2 * gg:
            d = -grad
        self._note_direction(d)
        return d

    def update(self, step, grad_diff, grad_new):
        """Record an accepted step (step = x+ - x, grad_diff = g+ - g)."""


class LbfgsDirection(DirectionStrategy):
    """Limited-memory BFGS two-loop recursion with curvature-pair scaling.

    The initial scaling is <s,y>/<y,y> of the newest pair; pairs with
    nonpositive or numerically vanishing curvature are discarded.
    """

    def __init__(self, memory=10, c1=1e-6, c2=1e6):
        super().__init__(c1, c2)
        if memory < 1:
            raise ValueError("memory must be >= 1")
        self.memory = memory
        self.pairs = deque(maxlen=memory)

    def reset(self):
        self.pairs.clear()

    def _raw_direction(self, grad):
        if not self.pairs:
            return -grad
        q = grad.copy()
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        s, y, _ = self.pairs[-1]
        q *= float(s @ y) / float(y @ y)
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        return -q

    def update(self, step, grad_diff, grad_new):
        sy = float(step @ grad_diff)
        if sy <= CURVATURE_TOL * np.linalg.norm(step) * np.linalg.norm(grad_diff):
            return  # memory unchanged
        self.pairs.append((step.copy(), grad_diff.copy(), 1.0 / sy))


class NonlinearCgDirection(DirectionStrategy):
    """Polak-Ribiere+ conjugate gradient, restarted every dim steps or on nondescent."""

    def __init__(self, c1=1e-6, c2=1e6):
        super().__init__(c1, c2)
        self.prev_grad = None
        self.prev_dir = None
        self.since_restart = 0

    def reset(self):
        self.prev_grad = None
        self.prev_dir = None
        self.since_restart = 0

    def _raw_direction(self, grad):
        if self.prev_grad is None or self.prev_dir is None or self.since_restart >= grad.size:
            self.since_restart = 0
            return -grad
        denom = float(self.prev_grad @ self.prev_grad)
        beta = max(0.0, float(grad @ (grad - self.prev_grad)) / denom)
        d = -grad + beta * self.prev_dir
        if float(grad @ d) >= 0.0:
            self.since_restart = 0
            return -grad
        return d

    def _note_direction(self, d):
        self.prev_dir = d
        self.since_restart += 1

    def update(self, step, grad_diff, grad_new):
        self.prev_grad = grad_new.copy()


def make_direction_strategy(name, lbfgs_memory=10, c1=1e-6, c2=1e6):
    if name == "gradient":
        return DirectionStrategy(c1, c2)
    if name == "lbfgs":
        return LbfgsDirection(lbfgs_memory, c1, c2)
    if name == "cg":
        return NonlinearCgDirection(c1, c2)
    raise ValueError(f"unknown direction strategy {name!r}")
