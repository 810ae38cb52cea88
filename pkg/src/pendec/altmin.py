"""Inexact alternating minimization for one penalty subproblem.

Each iteration takes one or more Armijo descent steps in x, then solves
the y-block exactly with a single D-projection.  The loop stops when the
x-gradient norm drops below delta (the theoretical criterion), when the
decrease between consecutive (x, y) pairs falls below eps_in (the
practical criterion), or at the iteration cap; the reason is recorded.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError, NumericalFailure
from .inner import DirectionStrategy, LineSearchParams, armijo_search, make_direction_strategy


def _default_direction_factory():
    return make_direction_strategy("lbfgs")


@dataclass
class AltMinParams:
    delta: float = 0.0  # gradient-norm tolerance for the theoretical stop
    eps_in: float = 1e-5  # sufficient-decrease stop between (x, y) pairs
    max_inner_iters: int = 20000
    j_max: int = 1  # descent steps per iteration before the projection
    step_grad_tol: float = 0.0  # early exit for the descent phase when j_max > 1
    line_search: LineSearchParams = field(default_factory=LineSearchParams)
    direction_factory: Callable[[], DirectionStrategy] = _default_direction_factory
    q_floor: float = -1e12  # divergence guard; unbounded penalties abort the run
    exact_x_update: Optional[Callable] = None  # closed-form x-minimizer plug-in

    def __post_init__(self):
        if self.delta < 0 or not self.eps_in > 0:
            raise ValueError("need delta >= 0 and eps_in > 0")
        if self.max_inner_iters < 1 or self.j_max < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass
class InnerStats:
    iterations: int
    descent_steps: int
    stop: str  # gradient | decrease | iteration_cap
    q_values: list
    final_grad_norm: float
    final_grad: np.ndarray


def alternating_minimize(po, x0, y0, params):
    """Run the two-block loop on penalty objective po from (x0, y0), y0 in D.

    Returns (x, y, InnerStats).  The returned y is the exact minimizer of
    q(x, .) over D whenever at least one iteration ran; q is nonincreasing
    along the whole inner sequence.
    """
    x = np.asarray(x0, dtype=float)
    y = np.asarray(y0, dtype=float)
    strategy = params.direction_factory()
    ev = po.evaluate(x, y)
    q_values = [ev.q]
    steps = 0
    iterations = 0
    stop = "iteration_cap"

    while True:
        grad = ev.grad_x()
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm <= params.delta:
            stop = "gradient"
            break
        if iterations >= params.max_inner_iters:
            stop = "iteration_cap"
            break

        if params.exact_x_update is not None:
            x = params.exact_x_update(po, x, y)
            ev_x = po.evaluate(x, y)
            steps += 1
        else:
            ev_x = ev
            for _ in range(params.j_max):
                d = strategy.direction(grad)
                slope = float(grad @ d)
                cache = {}

                def trial(alpha, _x=x, _d=d, _y=y):
                    e = po.evaluate(_x + alpha * _d, _y)
                    cache[alpha] = e
                    return e.q

                alpha, _ = armijo_search(trial, ev_x.q, slope, params.line_search)
                ev_x = cache[alpha]
                x = ev_x.x
                steps += 1
                grad_new = ev_x.grad_x()
                strategy.update(alpha * d, grad_new - grad, grad_new)
                grad = grad_new
                if params.j_max > 1 and float(np.linalg.norm(grad)) <= params.step_grad_tol:
                    break

        y = po.y_subproblem(x)
        ev = po.evaluate(x, y)
        if ev.q < params.q_floor:
            raise NumericalFailure(f"penalty value {ev.q:.3e} fell below the divergence floor")
        iterations += 1
        decrease = q_values[-1] - ev.q
        q_values.append(ev.q)
        if decrease <= params.eps_in:
            stop = "decrease"
            break

    grad = ev.grad_x()
    return x, y, InnerStats(
        iterations=iterations,
        descent_steps=steps,
        stop=stop,
        q_values=q_values,
        final_grad_norm=float(np.linalg.norm(grad)),
        final_grad=grad,
    )
