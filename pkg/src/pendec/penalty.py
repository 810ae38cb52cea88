"""Quadratic penalty objective with optional safeguarded multipliers.

Without multipliers:

    q(x, y) = f(x) + (tau/2) * (||x - y||^2 + dist_C(G(x))^2)

With multiplier estimates (lam for G(x) in C, mu for x = y) the penalty
becomes the augmented-Lagrangian form

    q(x, y) = f(x) + <mu, x - y> + (tau/2)||x - y||^2
              + (tau/2) dist_C(G(x) + lam/tau)^2 - ||lam||^2 / (2 tau),

which reduces to the plain penalty at lam = mu = 0 (the constant term only
normalizes the value, it moves no gradients or argmins).  Multipliers set
to None skip their terms entirely, so runs with multipliers disabled are
bit-identical to the plain penalty code path.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import EvaluationError


class PenaltyEval:
    """One evaluation of q at (x, y); the x-gradient is assembled on demand.

    Line-search trials only need the value, so the adjoint application (one
    constraint matvec) is deferred until the gradient is requested.
    """

    __slots__ = ("q", "x", "f", "grad_f", "g", "adjoint", "resid", "coupling", "tau", "mu", "_grad")

    def __init__(self, q, x, f, grad_f, g, adjoint, resid, coupling, tau, mu):
        self.q = q
        self.x = x
        self.f = f
        self.grad_f = grad_f
        self.g = g
        self.adjoint = adjoint
        self.resid = resid
        self.coupling = coupling
        self.tau = tau
        self.mu = mu
        self._grad = None

    def grad_x(self):
        if self._grad is None:
            grad = self.grad_f + self.tau * self.coupling
            if self.mu is not None:
                grad = grad + self.mu
            if self.resid is not None:
                grad = grad + self.tau * self.adjoint(self.resid)
            self._grad = grad
        return self._grad


@dataclass
class PenaltyObjective:
    """Penalty subproblem for a fixed tau and fixed multiplier estimates."""

    problem: object  # Problem or CountingProblem
    tau: float
    lam: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    safeguard: float = 1e8

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("penalty parameter must be positive")
        for m in (self.lam, self.mu):
            if m is not None and np.max(np.abs(m), initial=0.0) > self.safeguard:
                raise ValueError("multiplier exceeds the safeguard box")

    def evaluate(self, x, y):
        f, grad_f = self.problem.objective(x)
        coupling = x - y
        q = f + 0.5 * self.tau * float(coupling @ coupling)
        if self.mu is not None:
            q += float(self.mu @ coupling)
        g = adjoint = resid = None
        if self.problem.has_constraints:
            g, adjoint = self.problem.constraint_map(x)
            w = g + self.lam / self.tau if self.lam is not None else g
            s, resid = self.problem.convex_target.squared_distance_and_gradient(w)
            q += self.tau * s
            if self.lam is not None:
                q -= float(self.lam @ self.lam) / (2.0 * self.tau)
        if not np.isfinite(q):
            raise EvaluationError(f"penalty value is non-finite (tau={self.tau:.3e})")
        return PenaltyEval(q, x, f, grad_f, g, adjoint, resid, coupling, self.tau, self.mu)

    def value(self, x, y):
        return self.evaluate(x, y).q

    def value_and_xgrad(self, x, y):
        ev = self.evaluate(x, y)
        return ev.q, ev.grad_x()

    def y_shift(self, x):
        """Point whose D-projection solves the y-subproblem exactly."""
        if self.mu is not None:
            return x + self.mu / self.tau
        return x

    def y_subproblem(self, x):
        """Exact minimizer of q(x, .) over D: a single projection of the shift."""
        return self.problem.project_geometric(self.y_shift(x))

    def updated_multipliers(self, x, y):
        """Hestenes-Powell-Rockafellar updates clamped to the safeguard box."""
        new = {}
        if self.lam is not None:
            g, _ = self.problem.constraint_map(x)
            w = g + self.lam / self.tau
            p = self.problem.convex_target.project(w)
            new["lam"] = np.clip(self.tau * (w - p), -self.safeguard, self.safeguard)
        if self.mu is not None:
            new["mu"] = np.clip(self.mu + self.tau * (x - y), -self.safeguard, self.safeguard)
        return replace(self, **new) if new else self

    def certificate_entry(self, x, y):
        """Multiplier estimates and stationarity residual at the accepted pair.

        eps is the exact x-gradient of q; lam_hat = tau*(w - P_C(w)) and
        mu_hat = mu + tau*(x - y) are the induced multiplier estimates and
        satisfy eps = grad f + G'(x)* lam_hat + mu_hat up to rounding; z is
        the constraint slack G(x) - P_C(w).  At lam = mu = 0 these are the
        plain penalty certificate sequences.
        """
        ev = self.evaluate(x, y)
        eps = ev.grad_x()
        mu_hat = self.tau * ev.coupling
        if self.mu is not None:
            mu_hat = self.mu + mu_hat
        if ev.resid is not None:
            lam_hat = self.tau * ev.resid
            w = ev.g + self.lam / self.tau if self.lam is not None else ev.g
            z = ev.g - (w - ev.resid)  # w - resid = P_C(w)
            rhs = ev.grad_f + ev.adjoint(lam_hat) + mu_hat
        else:
            lam_hat = np.zeros(0)
            z = np.zeros(0)
            rhs = ev.grad_f + mu_hat
        scale = max(1.0, float(np.linalg.norm(rhs)), float(np.linalg.norm(eps)))
        residual = float(np.linalg.norm(eps - rhs))
        return {
            "eps": eps,
            "z": z,
            "lam": lam_hat,
            "mu": mu_hat,
            "identity_residual": residual,
            "identity_scale": scale,
            "f_x": ev.f,
            "g": ev.g,
        }
