"""Seeded benchmark problem generators and exact small-scale oracles.

Randomness comes from numpy's PCG64 generators; each generator derives one
child stream per random object through SeedSequence(seed).spawn(...) in a
fixed documented order, so identical seeds give bit-identical problems on
every platform.
"""

import itertools

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from . import pd as _pd
from .convex_sets import Box, NonpositiveShifted, SingletonZero, UnitSimplex
from .errors import InfeasiblePolyhedron
from .geometric_sets import (
    DisjunctiveUnion,
    LowRankSet,
    ProductSet,
    PsdLowRankSet,
    SparsitySet,
    Unrestricted,
    pack_symmetric,
    project_polyhedron,
)
from .problem import Problem

FAMILIES = (
    "sparse_qp",
    "beck_eldar",
    "portfolio",
    "correlation",
    "multitask_logistic",
    "disjunctive_logistic",
)


def _streams(seed, count):
    """Child PCG64 generators, one per random object, in a fixed order."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _quadratic_objective(Q, c, nu):
    def objective(x):
        Qx = Q @ x
        return 0.5 * float(x @ Qx) + nu * float(c @ x), Qx + nu * c

    return objective


def _conditioned_quadratic(n, n_cond, seed):
    """Q = Y diag(d) Y with a random Householder reflector Y and geometric
    spectrum d_i = exp((i-1)/(n-1) * n_cond); the spectrum ratio is
    exp(n_cond) by construction."""
    rng_y, rng_c = _streams(seed, 2)
    yv = rng_y.uniform(-1.0, 1.0, n)
    Y = np.eye(n) - (2.0 / float(yv @ yv)) * np.outer(yv, yv)
    d = np.exp(np.arange(n) / (n - 1) * n_cond)
    Q = Y @ (d[:, None] * Y)
    Q = (Q + Q.T) / 2.0
    c = rng_c.uniform(-1.0, 1.0, n)
    return Q, c, d


def gen_sparse_qp(n, n_cond, s, nu=5.0, seed=0):
    """Cardinality-constrained convex quadratic: min .5 x'Qx + nu c'x, ||x||_0 <= s."""
    if n < 2 or not 0 < s < n:
        raise ValueError("need n >= 2 and 0 < s < n")
    Q, c, d = _conditioned_quadratic(n, n_cond, seed)
    spec = {"family": "sparse_qp", "n": n, "n_cond": n_cond, "s": s, "nu": nu, "seed": seed}
    return Problem(
        objective=_quadratic_objective(Q, c, nu),
        geometric_set=SparsitySet(n, s),
        dim_x=n,
        x0=np.zeros(n),
        name=f"sparse_qp(n={n},s={s},cond={n_cond},seed={seed})",
        extras={"Q": Q, "c": c, "nu": nu, "s": s, "d": d, "spec": spec},
    )


def gen_beck_eldar():
    """The fixed 5-dimensional sparse quadratic with Q = E + I, s = 2.

    Its stationary values are -41.33, -39 and -36.33 (two decimals); the
    first is the global minimum.
    """
    n = 5
    Q = np.ones((n, n)) + np.eye(n)
    c = -np.array([3.0, 2.0, 3.0, 12.0, 5.0])
    spec = {"family": "beck_eldar"}
    return Problem(
        objective=_quadratic_objective(Q, c, 1.0),
        geometric_set=SparsitySet(n, 2),
        dim_x=n,
        x0=np.zeros(n),
        name="beck_eldar",
        extras={"Q": Q, "c": c, "nu": 1.0, "s": 2, "spec": spec},
    )


def gen_portfolio(n, n_cond, s, nu=1.0, seed=0):
    """Sparse portfolio selection: quadratic objective over the unit simplex
    with a cardinality bound; G is the identity and C the simplex."""
    if not 0 < s < n:
        raise ValueError("need 0 < s < n")
    Q, c, d = _conditioned_quadratic(n, n_cond, seed)

    def cmap(x):
        return x.copy(), lambda lam: lam.copy()

    spec = {"family": "portfolio", "n": n, "n_cond": n_cond, "s": s, "nu": nu, "seed": seed}
    return Problem(
        objective=_quadratic_objective(Q, c, nu),
        geometric_set=SparsitySet(n, s),
        dim_x=n,
        constraint_map=cmap,
        convex_target=UnitSimplex(n),
        dim_y=n,
        x0=np.full(n, 1.0 / n),
        name=f"portfolio(n={n},s={s},cond={n_cond},seed={seed})",
        extras={"Q": Q, "c": c, "nu": nu, "s": s, "d": d, "spec": spec},
    )


CORRELATION_VARIANTS = ("P1", "P2", "P3")


def correlation_matrix(variant, n):
    gap = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
    if variant == "P1":
        return 0.5 + 0.5 * np.exp(-0.05 * gap)
    if variant == "P2":
        return np.exp(-gap)
    if variant == "P3":
        return 0.6 + 0.4 * np.exp(-0.1 * gap)
    raise ValueError(f"variant must be one of {CORRELATION_VARIANTS}")


def gen_correlation(variant, n, kappa):
    """Nearest low-rank correlation matrix: min .5||X - A||_F^2 with
    diag(X) = e, X PSD of rank <= kappa.

    X is parameterized in the symmetric subspace (isometric packed upper
    triangle), so symmetry is structural and the Frobenius geometry is the
    packed Euclidean one.  Deterministic: no seed.
    """
    if n < 2 or not 1 <= kappa < n:
        raise ValueError("need n >= 2 and 1 <= kappa < n")
    A = correlation_matrix(variant, n)
    a = pack_symmetric(A)
    dim = a.size
    iu, ju = np.triu_indices(n)
    diag_pos = np.flatnonzero(iu == ju)

    def objective(x):
        r = x - a
        return 0.5 * float(r @ r), r

    def cmap(x):
        def adjoint(lam):
            out = np.zeros(dim)
            out[diag_pos] = lam
            return out

        return x[diag_pos], adjoint

    e = np.ones(n)
    spec = {"family": "correlation", "variant": variant, "n": n, "kappa": kappa}
    return Problem(
        objective=objective,
        geometric_set=PsdLowRankSet(kappa, n, packed=True),
        dim_x=dim,
        constraint_map=cmap,
        convex_target=Box(e, e),
        dim_y=n,
        x0=a.copy(),
        name=f"correlation({variant},n={n},kappa={kappa})",
        x_shape=(n, n),
        extras={"A": A, "a": a, "diag_pos": diag_pos, "n": n, "kappa": kappa, "spec": spec},
    )


def _correlation_exact_update(problem, lower_level):
    a = problem.extras["a"]
    diag = problem.extras["diag_pos"]

    def update(po, x, y):
        tau = po.tau
        target = a + tau * y
        if po.mu is not None:
            target = target - po.mu
        out = target / (1.0 + tau)
        if lower_level:
            out[diag] = 1.0
        else:
            num = target[diag] + tau
            if po.lam is not None:
                num = num - po.lam
            out[diag] = num / (1.0 + 2.0 * tau)
        return out

    return update


_pd.EXACT_X_UPDATE_FACTORIES["correlation"] = lambda p: _correlation_exact_update(p, False)
_pd.EXACT_X_UPDATE_FACTORIES["correlation_lower_level"] = lambda p: _correlation_exact_update(p, True)


def gen_multitask_logistic(tasks=8, dim=6, samples_per_task=40, kappa=2, eta=0.1, seed=0):
    """Low-rank multitask logistic training on synthetic two-cluster tasks.

    Variables are (W, U, V) stacked and flattened; the loss couples them
    through W = U + V (handled as G(x) = W - U - V in C = {0}) and V is
    rank-bounded.  Task weights are drawn around two latent cluster
    centers, so a rank-2 shared component recovers the structure.
    """
    if tasks < 2 or dim < 2 or not 1 <= kappa < min(tasks, dim):
        raise ValueError("need tasks, dim >= 2 and 1 <= kappa < min(tasks, dim)")
    rng_centers, rng_tasks, rng_data, rng_labels = _streams(seed, 4)
    centers = rng_centers.normal(size=(2, dim))
    W_true = centers[np.arange(tasks) % 2] + 0.3 * rng_tasks.normal(size=(tasks, dim))
    X = rng_data.normal(size=(tasks, samples_per_task, dim))
    probs = expit(np.einsum("tij,tj->ti", X, W_true))
    Y = (rng_labels.random((tasks, samples_per_task)) < probs).astype(float)

    mn = tasks * dim
    dim_x = 3 * mn

    def objective(x):
        W = x[:mn].reshape(tasks, dim)
        U = x[mn : 2 * mn].reshape(tasks, dim)
        scores = np.einsum("tij,tj->ti", X, W)
        loss = float(np.sum(np.logaddexp(0.0, scores) - Y * scores)) + eta * float(np.sum(U * U))
        gW = np.einsum("ti,tij->tj", expit(scores) - Y, X)
        grad = np.concatenate([gW.ravel(), (2.0 * eta) * U.ravel(), np.zeros(mn)])
        return loss, grad

    def cmap(x):
        g = x[:mn] - x[mn : 2 * mn] - x[2 * mn :]

        def adjoint(lam):
            return np.concatenate([lam, -lam, -lam])

        return g, adjoint

    spec = {
        "family": "multitask_logistic",
        "tasks": tasks,
        "dim": dim,
        "samples_per_task": samples_per_task,
        "kappa": kappa,
        "eta": eta,
        "seed": seed,
    }
    return Problem(
        objective=objective,
        geometric_set=ProductSet(
            [Unrestricted(mn), Unrestricted(mn), LowRankSet(kappa, (tasks, dim))]
        ),
        dim_x=dim_x,
        constraint_map=cmap,
        convex_target=SingletonZero(mn),
        dim_y=mn,
        x0=np.zeros(dim_x),
        name=f"multitask_logistic(m={tasks},n={dim},kappa={kappa},seed={seed})",
        extras={"X": X, "Y": Y, "eta": eta, "tasks": tasks, "dim": dim, "spec": spec},
    )


def gen_disjunctive_logistic(
    n=10, n_components=2, rows_per_component=12, n_constraints=1, seed=0, n_samples=200
):
    """Logistic loss over a union of random polyhedra with shared quartic
    constraints sum_i c_ij (x_i - p_ij)^4 <= t_j.

    Empty polyhedra are resampled (bounded retries) so every member is
    nonempty.
    """
    if n_components < 1:
        raise ValueError("need at least one polyhedron")
    rng_data, rng_labels, rng_sets, rng_cons = _streams(seed, 4)
    Z = rng_data.normal(size=(n_samples, n))
    w_true = rng_data.uniform(-1.0, 1.0, n)
    labels = (rng_labels.random(n_samples) < expit(Z @ w_true)).astype(float)

    polyhedra = []
    for _ in range(n_components):
        for attempt in range(50):
            A = rng_sets.uniform(-1.0, 1.0, (rows_per_component, n))
            b = rng_sets.uniform(-1.0, 1.0, rows_per_component)
            try:
                project_polyhedron(np.zeros(n), A, b)
            except InfeasiblePolyhedron:
                continue
            polyhedra.append((A, b))
            break
        else:
            raise RuntimeError("could not sample a nonempty polyhedron in 50 attempts")

    c = rng_cons.uniform(0.0, 1.0, (n, n_constraints))
    p = rng_cons.uniform(-0.5, 0.5, (n, n_constraints))
    t = np.full(n_constraints, 0.1)

    def objective(x):
        z = Z @ x
        loss = float(np.sum(np.logaddexp(0.0, z) - labels * z))
        return loss, Z.T @ (expit(z) - labels)

    def cmap(x):
        diff = x[:, None] - p

        def adjoint(lam):
            return (4.0 * c * diff**3) @ lam

        return np.sum(c * diff**4, axis=0), adjoint

    spec = {
        "family": "disjunctive_logistic",
        "n": n,
        "n_components": n_components,
        "rows_per_component": rows_per_component,
        "n_constraints": n_constraints,
        "seed": seed,
        "n_samples": n_samples,
    }
    return Problem(
        objective=objective,
        geometric_set=DisjunctiveUnion(polyhedra, n),
        dim_x=n,
        constraint_map=cmap,
        convex_target=NonpositiveShifted(t),
        dim_y=n_constraints,
        x0=np.zeros(n),
        name=f"disjunctive(n={n},N={n_components},seed={seed})",
        extras={"polyhedra": polyhedra, "c": c, "p": p, "t": t, "Z": Z, "labels": labels, "spec": spec},
    )


def solve_refined(A, b, refinements=2):
    """Dense solve with iterative refinement using extended-precision residuals."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.linalg.solve(A, b)
    Al = A.astype(np.longdouble)
    bl = b.astype(np.longdouble)
    for _ in range(refinements):
        r = bl - Al @ x.astype(np.longdouble)
        x = x + np.linalg.solve(A, r.astype(float))
    return x


def quadratic_value_refined(Q, c, nu, x):
    """Extended-precision evaluation of .5 x'Qx + nu c'x (stiff spectra make
    the float64 quadratic form cancel catastrophically)."""
    xl = np.asarray(x, dtype=np.longdouble)
    Ql = np.asarray(Q, dtype=np.longdouble)
    cl = np.asarray(c, dtype=np.longdouble)
    return float(0.5 * (xl @ (Ql @ xl)) + np.longdouble(nu) * (cl @ xl))


def oracle_sparse_qp_global(problem, max_supports=250000):
    """Exact global minimum of a sparse quadratic by support enumeration.

    Every support of size s is solved through the restricted positive
    definite system; the minimum value equals .5*nu*c_S'x_S at the exact
    restricted solution, which avoids the quadratic-form cancellation.
    """
    Q, c, nu, s = (problem.extras[k] for k in ("Q", "c", "nu", "s"))
    n = Q.shape[0]
    if n > 25:
        raise ValueError("combinatorial budget guard: n <= 25")
    count = 1
    for i in range(s):
        count = count * (n - i) // (i + 1)
    if count > max_supports:
        raise ValueError("combinatorial budget guard: too many supports")
    best_f = np.inf
    best_x = None
    for support in itertools.combinations(range(n), s):
        idx = list(support)
        xs = solve_refined(Q[np.ix_(idx, idx)], -nu * c[idx])
        f = 0.5 * nu * float(c[idx] @ xs)
        if f < best_f:
            best_f = f
            best_x = np.zeros(n)
            best_x[idx] = xs
    return best_f, best_x


def oracle_portfolio_global(problem):
    """Exact global minimum of the sparse simplex-constrained quadratic.

    For each support, every face of the restricted simplex is solved
    through its equality KKT system; candidates with nonnegative solutions
    are compared exactly.
    """
    Q, c, nu, s = (problem.extras[k] for k in ("Q", "c", "nu", "s"))
    n = Q.shape[0]
    if n > 25:
        raise ValueError("combinatorial budget guard: n <= 25")
    best_f = np.inf
    best_x = None
    for support in itertools.combinations(range(n), s):
        for r in range(1, s + 1):
            for face in itertools.combinations(support, r):
                idx = list(face)
                k = len(idx)
                KKT = np.zeros((k + 1, k + 1))
                KKT[:k, :k] = Q[np.ix_(idx, idx)]
                KKT[:k, k] = 1.0
                KKT[k, :k] = 1.0
                rhs = np.concatenate([-nu * c[idx], [1.0]])
                try:
                    sol = solve_refined(KKT, rhs)
                except np.linalg.LinAlgError:
                    continue
                xs = sol[:k]
                if np.min(xs) < -1e-10:
                    continue
                f = quadratic_value_refined(Q[np.ix_(idx, idx)], c[idx], nu, xs)
                if f < best_f:
                    best_f = f
                    best_x = np.zeros(n)
                    best_x[idx] = xs
    return best_f, best_x


def oracle_disjunctive_enumeration(problem, maxiter=300):
    """Certified reference for disjunctive programs: solve the convex
    problem restricted to each polyhedron (SLSQP) and keep the best
    feasible value."""
    polyhedra = problem.extras["polyhedra"]
    c, p, t = (problem.extras[k] for k in ("c", "p", "t"))
    n = problem.dim_x

    def fun(x):
        return problem.objective(x)[0]

    def jac(x):
        return problem.objective(x)[1]

    def quartic(x):
        return t - np.sum(c * (x[:, None] - p) ** 4, axis=0)

    best_f = np.inf
    best_x = None
    for A, b in polyhedra:
        constraints = [
            {"type": "ineq", "fun": lambda x, A=A, b=b: b - A @ x},
            {"type": "ineq", "fun": quartic},
        ]
        res = minimize(
            fun,
            np.zeros(n),
            jac=jac,
            method="SLSQP",
            constraints=constraints,
            options={"maxiter": maxiter, "ftol": 1e-12},
        )
        viol = max(
            float(np.max(A @ res.x - b, initial=0.0)),
            float(np.max(-quartic(res.x), initial=0.0)),
        )
        if viol <= 1e-6 and res.fun < best_f:
            best_f = float(res.fun)
            best_x = res.x.copy()
    if best_x is None:
        raise ValueError("no polyhedron admits a feasible point for the shared constraints")
    return best_f, best_x


def make_problem(spec):
    """Build a problem from its JSON description {'family': ..., params...}."""
    spec = dict(spec)
    family = spec.pop("family")
    if family == "sparse_qp":
        return gen_sparse_qp(**spec)
    if family == "beck_eldar":
        return gen_beck_eldar()
    if family == "portfolio":
        return gen_portfolio(**spec)
    if family == "correlation":
        return gen_correlation(**spec)
    if family == "multitask_logistic":
        return gen_multitask_logistic(**spec)
    if family == "disjunctive_logistic":
        return gen_disjunctive_logistic(**spec)
    raise ValueError(f"unknown problem family {family!r}")
