"""Safeguarded augmented Lagrangian baseline with a projected spectral
gradient inner solver.

All inner iterates stay in D: every trial step projects onto D, so a
single spectral iteration may consume several projections.  The penalty
parameter grows only when the complementarity-feasibility measure fails
to improve by the factor eta; multipliers follow safeguarded
Hestenes-Powell-Rockafellar updates.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EvaluationError
from .problem import CountingProblem, check_point
from .records import (
    STATUS_CONVERGED,
    STATUS_ITER_CAP,
    STATUS_NUMERICAL,
    STATUS_TAU_CAP,
    STATUS_TIME_LIMIT,
    Certificate,
    History,
    RunRecord,
    params_to_dict,
)


@dataclass
class SpectralParams:
    sigma: float = 1e-5  # sufficient-decrease constant
    gamma0: float = 1.0  # minimal/initial spectral coefficient
    gamma_max: float = 1e12
    memory: int = 10  # nonmonotone window length
    step_growth: float = 2.0  # trial coefficient growth factor
    window_eps: float = 1e-5  # window-based stop for one spectral pass
    max_iters: int = 5000

    def __post_init__(self):
        if not 0 < self.gamma0 <= self.gamma_max:
            raise ValueError("need 0 < gamma0 <= gamma_max")
        if self.memory < 1 or not self.step_growth > 1 or not self.sigma > 0:
            raise ValueError("invalid spectral parameters")


@dataclass
class AlmParams:
    tau0: float = 1.0
    alpha_tau: float = 1.1
    tau_cap: float = 1e8
    eps_out: float = 1e-5
    eps_in: float = 1e-5  # decrease threshold between spectral passes
    eta: float = 0.8  # required feasibility progress factor
    safeguard: float = 1e8
    max_outer_iters: int = 2000
    spectral: SpectralParams = field(default_factory=SpectralParams)
    keep_iterates: bool = False
    time_limit_s: float = 0.0

    def __post_init__(self):
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")


class AugmentedLagrangian:
    """L(x) = f(x) + (tau/2) dist_C(G(x) + lam/tau)^2 over x in D."""

    def __init__(self, problem, tau, lam=None):
        self.problem = problem
        self.tau = tau
        self.lam = lam

    def value_and_grad(self, x):
        f, grad = self.problem.objective(x)
        if self.problem.has_constraints:
            g, adjoint = self.problem.constraint_map(x)
            w = g + self.lam / self.tau if self.lam is not None else g
            s, resid = self.problem.convex_target.squared_distance_and_gradient(w)
            f = f + self.tau * s
            grad = grad + self.tau * adjoint(resid)
        if not np.isfinite(f):
            raise EvaluationError(f"augmented Lagrangian is non-finite (tau={self.tau:.3e})")
        return f, grad

    def value(self, x):
        f, _ = self.problem.objective(x)
        if self.problem.has_constraints:
            g, _ = self.problem.constraint_map(x)
            w = g + self.lam / self.tau if self.lam is not None else g
            s, _ = self.problem.convex_target.squared_distance_and_gradient(w)
            f = f + self.tau * s
        if not np.isfinite(f):
            raise EvaluationError(f"augmented Lagrangian is non-finite (tau={self.tau:.3e})")
        return f


@dataclass
class SpectralState:
    gamma_bb: float
    past: list  # last values of L, newest last, length <= memory
    grad: Optional[np.ndarray] = None
    value: Optional[float] = None
    stalled: bool = False


def fresh_spectral_state(params):
    return SpectralState(gamma_bb=params.gamma0, past=[])


def spectral_step(L, x, state, params):
    """One nonmonotone projected Barzilai-Borwein step; x must lie in D.

    Trials x+ = Pi_D(x - grad/gamma) with gamma growing from the BB
    coefficient until L(x+) <= max(recent values) - sigma ||x+ - x||^2.
    Exhausting gamma_max (or moving nowhere for every trial) stalls the
    pass, which signals projected stationarity.
    """
    if state.value is None or state.grad is None:
        state.value, state.grad = L.value_and_grad(x)
    if not state.past:
        state.past.append(state.value)
    gamma = min(max(state.gamma_bb, params.gamma0), params.gamma_max)
    ref = max(state.past)
    while True:
        x_trial = L.problem.project_geometric(x - state.grad / gamma)
        step = x_trial - x
        step_sq = float(step @ step)
        if step_sq > 0.0:
            value_trial = L.value(x_trial)
            if value_trial <= ref - params.sigma * step_sq:
                break
        gamma *= params.step_growth
        if gamma > params.gamma_max:
            state.stalled = True
            return x, state
    value_new, grad_new = L.value_and_grad(x_trial)
    y_pair = grad_new - state.grad
    sy = float(step @ y_pair)
    state.gamma_bb = (
        min(max(sy / step_sq, params.gamma0), params.gamma_max) if sy > 0 else params.gamma0
    )
    state.grad = grad_new
    state.value = value_new
    state.past.append(value_trial)
    if len(state.past) > params.memory:
        state.past.pop(0)
    return x_trial, state


def spectral_descent(L, x, params):
    """Run spectral steps until the nonmonotone window criterion, a stall,
    or the iteration cap; returns (x, iterations, stalled)."""
    state = fresh_spectral_state(params)
    for it in range(params.max_iters):
        window = list(state.past)
        x, state = spectral_step(L, x, state, params)
        if state.stalled:
            return x, it, True
        if window and max(window) - min(window + [state.value]) <= params.window_eps:
            return x, it + 1, False
    return x, params.max_iters, False


def solve_alm(problem, params=None, x0=None):
    """Safeguarded ALM run over x in D; returns a RunRecord."""
    params = params or AlmParams()
    start_time = time.perf_counter()
    counting = CountingProblem(problem)

    x = check_point(x0 if x0 is not None else problem.default_start(), problem.dim_x)
    x = counting.project_geometric(x)
    lam = np.zeros(problem.dim_y) if problem.has_constraints else None

    history = History()
    certificate = Certificate()
    if params.keep_iterates:
        history.x_iterates, history.y_iterates = [], []

    tau = params.tau0
    status = STATUS_ITER_CAP
    error = None
    v_prev = np.inf

    try:
        for _ in range(params.max_outer_iters):
            L = AugmentedLagrangian(counting, tau, lam)
            prev = L.value(x)
            inner_iters = 0
            stalled = False
            while True:
                x, iters, stalled = spectral_descent(L, x, params.spectral)
                inner_iters += iters
                cur = L.value(x)
                if stalled or prev - cur <= params.eps_in:
                    break
                prev = cur

            f_x, _ = problem.objective(x)
            if problem.has_constraints:
                g, adjoint = problem.constraint_map(x)
                cons_res = problem.convex_target.distance(g)
            else:
                g, adjoint = None, None
                cons_res = 0.0

            history.tau.append(tau)
            history.delta.append(0.0)
            history.inner_iterations.append(inner_iters)
            history.descent_steps.append(inner_iters)
            history.projections.append(counting.projections)
            history.objective_x.append(float(f_x))
            history.objective_y.append(float(f_x))
            history.coupling_residual.append(0.0)
            history.constraint_residual.append(cons_res)
            history.inner_stop.append("stalled" if stalled else "window")
            history.inner_q.append([])
            if params.keep_iterates:
                history.x_iterates.append(x.copy())
                history.y_iterates.append(x.copy())

            # certificate analog: eps = grad L, lam_hat the HPR estimate
            _, grad_L = L.value_and_grad(x)
            certificate.eps_norm.append(float(np.linalg.norm(grad_L)))
            if problem.has_constraints:
                w = g + lam / tau
                p = problem.convex_target.project(w)
                lam_hat = tau * (w - p)
                certificate.z_norm.append(float(np.linalg.norm(g - p)))
                certificate.lambda_norm.append(float(np.linalg.norm(lam_hat)))
            else:
                certificate.z_norm.append(0.0)
                certificate.lambda_norm.append(0.0)
            certificate.mu_norm.append(0.0)
            certificate.identity_residual.append(0.0)

            if cons_res <= params.eps_out:
                status = STATUS_CONVERGED
                break

            # HPR update, then feasibility progress test on the
            # complementarity measure V = ||G(x) - P_C(G(x) + lam/tau)||
            lam = np.clip(lam_hat, -params.safeguard, params.safeguard)
            w = g + lam / tau
            v = float(np.linalg.norm(g - problem.convex_target.project(w)))
            if v >= params.eta * v_prev:
                new_tau = params.alpha_tau * tau
                if new_tau > params.tau_cap:
                    status = STATUS_TAU_CAP
                    break
                tau = new_tau
            v_prev = v
            if params.time_limit_s and time.perf_counter() - start_time > params.time_limit_s:
                status = STATUS_TIME_LIMIT
                break
    except EvaluationError as exc:
        status = STATUS_NUMERICAL
        error = str(exc)

    f_final, _ = problem.objective(x)
    if problem.has_constraints:
        g, _ = problem.constraint_map(x)
        cons_res = problem.convex_target.distance(g)
    else:
        cons_res = 0.0

    return RunRecord(
        solver="alm",
        problem=problem.extras.get("spec") or {"name": problem.name},
        params=params_to_dict(params),
        status=status,
        f=float(f_final),
        x=x,
        y=x.copy(),
        coupling_residual=0.0,
        constraint_residual=cons_res,
        history=history,
        certificate=certificate,
        counters=counting.counters(),
        wall_time_s=time.perf_counter() - start_time,
        error=error,
    )
