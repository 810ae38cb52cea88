"""Outer penalty decomposition loop with certificates.

The driver solves a sequence of penalty subproblems by alternating
minimization, grows tau geometrically, shrinks the inner gradient
tolerance, and stops when the combined feasibility residual
||x - y|| + dist_C(G(x)) drops below eps_out.  Runs that hit the tau cap
while still infeasible are labeled as candidates for stationarity of the
feasibility problem and carry the corresponding first-order residuals.

With multiplier_mode other than "none" the safeguarded multiplier variant
(PDLM) is obtained: the penalty carries Hestenes-Powell-Rockafellar
estimates that are refreshed after every outer iteration.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .altmin import AltMinParams, alternating_minimize
from .errors import NumericalFailure
from .inner import LineSearchParams, make_direction_strategy
from .penalty import PenaltyObjective
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

MULTIPLIER_MODES = ("none", "constraints_only", "equality_only", "both")

# closed-form x-update plug-ins, registered by the problem generators
EXACT_X_UPDATE_FACTORIES = {}


@dataclass
class PdParams:
    tau0: float = 1.0
    alpha_tau: float = 1.1
    tau_cap: float = 1e8
    eps_out: float = 1e-5
    eps_in: float = 1e-5
    delta0: float = 1.0
    delta_decay: float = 0.5
    delta_floor: float = 1e-8
    max_outer_iters: int = 2000
    max_inner_iters: int = 20000
    multiplier_mode: str = "none"
    safeguard: float = 1e8
    direction: str = "lbfgs"  # gradient | lbfgs | cg
    lbfgs_memory: int = 10
    j_max: int = 1
    step_grad_tol: float = 0.0
    line_search: LineSearchParams = field(default_factory=LineSearchParams)
    q_floor: float = -1e12
    exact_x_update: str = ""  # name in EXACT_X_UPDATE_FACTORIES, empty for descent steps
    keep_iterates: bool = False
    time_limit_s: float = 0.0  # 0 disables the limit

    def __post_init__(self):
        if not self.tau0 > 0 or not self.alpha_tau > 1:
            raise ValueError("need tau0 > 0 and alpha_tau > 1")
        if self.multiplier_mode not in MULTIPLIER_MODES:
            raise ValueError(f"multiplier_mode must be one of {MULTIPLIER_MODES}")

    def delta_schedule(self, k):
        return max(self.delta0 * self.delta_decay**k, self.delta_floor)


def _initial_multipliers(problem, params):
    lam = mu = None
    if params.multiplier_mode in ("constraints_only", "both") and problem.has_constraints:
        lam = np.zeros(problem.dim_y)
    if params.multiplier_mode in ("equality_only", "both"):
        mu = np.zeros(problem.dim_x)
    return lam, mu


def feasibility_stationarity_check(problem, x, y):
    """First-order residuals of the feasibility problem at (x, y), y in D.

    r1 = ||G'(x)*(G(x) - P_C(G(x))) + x - y|| is the smooth-block
    stationarity residual, r2 = ||y - Pi_D(x)|| verifies the y-block
    through the projection; both near zero certify the stationarity system
    of the penalty feasibility problem within projection-based checking.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = x - y
    if problem.has_constraints:
        g, adjoint = problem.constraint_map(x)
        p = problem.convex_target.project(g)
        r = r + adjoint(g - p)
    r1 = float(np.linalg.norm(r))
    r2 = float(np.linalg.norm(y - problem.geometric_set.project(x)))
    return r1, r2


def solve_pd(problem, params=None, x0=None, y0=None):
    """Penalty decomposition run; returns a RunRecord with full history."""
    params = params or PdParams()
    start_time = time.perf_counter()
    counting = CountingProblem(problem)

    x = check_point(x0 if x0 is not None else problem.default_start(), problem.dim_x)
    if y0 is not None:
        y = check_point(y0, problem.dim_x, "y0")
        if not problem.geometric_set.contains(y):
            y = counting.project_geometric(x)
    else:
        y = counting.project_geometric(x)

    lam, mu = _initial_multipliers(problem, params)
    exact_update = None
    if params.exact_x_update:
        factory = EXACT_X_UPDATE_FACTORIES.get(params.exact_x_update)
        if factory is None:
            raise ValueError(f"unknown exact x-update {params.exact_x_update!r}")
        exact_update = factory(problem)

    def direction_factory():
        return make_direction_strategy(params.direction, params.lbfgs_memory)

    history = History()
    certificate = Certificate()
    if params.keep_iterates:
        history.x_iterates, history.y_iterates = [], []
        certificate.eps_vectors, certificate.z_vectors = [], []
        certificate.lambda_vectors, certificate.mu_vectors = [], []

    tau = params.tau0
    status = STATUS_ITER_CAP
    error = None
    cert_entry = None
    po = None

    try:
        for k in range(params.max_outer_iters):
            delta_k = params.delta_schedule(k)
            po = PenaltyObjective(counting, tau, lam=lam, mu=mu, safeguard=params.safeguard)
            inner = AltMinParams(
                delta=delta_k,
                eps_in=params.eps_in,
                max_inner_iters=params.max_inner_iters,
                j_max=params.j_max,
                step_grad_tol=params.step_grad_tol,
                line_search=params.line_search,
                direction_factory=direction_factory,
                q_floor=params.q_floor,
                exact_x_update=exact_update,
            )
            x, y, stats = alternating_minimize(po, x, y, inner)

            cert_entry = po.certificate_entry(x, y)
            f_x = cert_entry["f_x"]
            f_y, _ = problem.objective(y)
            coupling = float(np.linalg.norm(x - y))
            if problem.has_constraints:
                cons_res = problem.convex_target.distance(cert_entry["g"])
            else:
                cons_res = 0.0

            history.tau.append(tau)
            history.delta.append(delta_k)
            history.inner_iterations.append(stats.iterations)
            history.descent_steps.append(stats.descent_steps)
            history.projections.append(counting.projections)
            history.objective_x.append(float(f_x))
            history.objective_y.append(float(f_y))
            history.coupling_residual.append(coupling)
            history.constraint_residual.append(cons_res)
            history.inner_stop.append(stats.stop)
            history.inner_q.append(list(stats.q_values))
            certificate.eps_norm.append(float(np.linalg.norm(cert_entry["eps"])))
            certificate.z_norm.append(float(np.linalg.norm(cert_entry["z"])))
            certificate.lambda_norm.append(float(np.linalg.norm(cert_entry["lam"])))
            certificate.mu_norm.append(float(np.linalg.norm(cert_entry["mu"])))
            certificate.identity_residual.append(cert_entry["identity_residual"])
            if params.keep_iterates:
                history.x_iterates.append(x.copy())
                history.y_iterates.append(y.copy())
                certificate.eps_vectors.append(cert_entry["eps"].copy())
                certificate.z_vectors.append(cert_entry["z"].copy())
                certificate.lambda_vectors.append(cert_entry["lam"].copy())
                certificate.mu_vectors.append(cert_entry["mu"].copy())

            if coupling + cons_res <= params.eps_out:
                status = STATUS_CONVERGED
                break
            if lam is not None or mu is not None:
                po = po.updated_multipliers(x, y)
                lam, mu = po.lam, po.mu
            new_tau = params.alpha_tau * tau
            if new_tau > params.tau_cap:
                status = STATUS_TAU_CAP
                break
            tau = new_tau
            if params.time_limit_s and time.perf_counter() - start_time > params.time_limit_s:
                status = STATUS_TIME_LIMIT
                break
    except NumericalFailure as exc:
        status = STATUS_NUMERICAL
        error = str(exc)

    if cert_entry is not None:
        certificate.final_eps = cert_entry["eps"].tolist()
        certificate.final_z = cert_entry["z"].tolist()
        certificate.final_lambda = cert_entry["lam"].tolist()
        certificate.final_mu = cert_entry["mu"].tolist()

    f_final, _ = problem.objective(y)
    coupling = float(np.linalg.norm(x - y))
    if problem.has_constraints:
        g, _ = problem.constraint_map(x)
        cons_res = problem.convex_target.distance(g)
    else:
        cons_res = 0.0

    diagnosis = None
    if status == STATUS_TAU_CAP and coupling + cons_res > params.eps_out:
        r1, r2 = feasibility_stationarity_check(problem, x, y)
        diagnosis = {
            "label": "stationary-of-feasibility-candidate",
            "r1": r1,
            "r2": r2,
            "feasibility_residual": coupling + cons_res,
        }

    return RunRecord(
        solver="pdlm" if params.multiplier_mode != "none" else "pd",
        problem=problem.extras.get("spec") or {"name": problem.name},
        params=params_to_dict(params),
        status=status,
        f=float(f_final),
        x=x,
        y=y,
        coupling_residual=coupling,
        constraint_residual=cons_res,
        history=history,
        certificate=certificate,
        counters=counting.counters(),
        wall_time_s=time.perf_counter() - start_time,
        feasibility_diagnosis=diagnosis,
        error=error,
    )
