"""Deterministic projection oracles onto the nonconvex constraint sets.

All tie-breaking is deterministic (lowest index, lowest member index,
keep-x branch) so repeated runs are bit-reproducible.  The dense spectral
kernels are LAPACK-backed (numpy); the partial symmetric eigensolver used
for large matrices is ARPACK with a fixed start vector and a
full-decomposition fallback.
"""

from functools import lru_cache

import numpy as np
from scipy.sparse.linalg import ArpackError, eigsh

from .errors import DimensionMismatch, InfeasiblePolyhedron, NumericalFailure

# up to this order a full eigendecomposition is cheaper than a partial one
FULL_EIG_MAX_N = 64

SYMMETRY_TOL = 1e-8


def project_sparse(x, s):
    """Keep the s largest-magnitude entries of x, zero the rest.

    Ties are resolved toward the lowest index (stable sort on magnitude).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if not 0 < s < n:
        raise ValueError(f"sparsity level must satisfy 0 < s < n, got s={s}, n={n}")
    keep = np.argsort(-np.abs(x), kind="stable")[:s]
    out = np.zeros(n)
    out[keep] = x[keep]
    return out


def truncated_svd_project(X, rank):
    """Closest matrix of rank <= rank in Frobenius norm (truncated SVD)."""
    X = np.asarray(X, dtype=float)
    m, n = X.shape
    if not 1 <= rank <= min(m, n) - 1:
        raise ValueError(f"rank bound must satisfy 1 <= rank <= min(m,n)-1, got {rank}")
    try:
        U, sv, Vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    return (U[:, :rank] * sv[:rank]) @ Vt[:rank]


def _psd_lowrank_core(S, rank, full_eig_max_n):
    """Clip-and-truncate for an exactly symmetric S."""
    n = S.shape[0]
    vals = vecs = None
    if n > full_eig_max_n:
        try:
            v0 = np.full(n, 1.0 / np.sqrt(n))
            vals, vecs = eigsh(S, k=rank, which="LA", v0=v0)
        except ArpackError:
            vals = vecs = None
    if vals is None:
        try:
            all_vals, all_vecs = np.linalg.eigh(S)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
        vals, vecs = all_vals[-rank:], all_vecs[:, -rank:]
    clipped = np.maximum(vals, 0.0)
    out = (vecs * clipped) @ vecs.T
    return (out + out.T) / 2.0


def psd_lowrank_project(X, rank, full_eig_max_n=FULL_EIG_MAX_N):
    """Closest PSD matrix of rank <= rank: clip the top eigenvalues at zero.

    X must be symmetric up to SYMMETRY_TOL (it is symmetrized before
    decomposition).  For n > full_eig_max_n only the top eigenpairs are
    computed (Lanczos, fixed start vector), falling back to a full
    decomposition if the iteration fails.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if X.shape != (n, n):
        raise DimensionMismatch(f"expected square matrix, got shape {X.shape}")
    asym = np.max(np.abs(X - X.T)) if n else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"matrix asymmetry {asym:.2e} exceeds tolerance {SYMMETRY_TOL:.0e}")
    if not 1 <= rank < n:
        raise ValueError(f"rank bound must satisfy 1 <= rank < n, got {rank}")
    return _psd_lowrank_core((X + X.T) / 2.0, rank, full_eig_max_n)


def project_box_switching(x, y, lx, ux, ly, uy):
    """Project the pair onto {x_i*y_i = 0, l_x<=x<=u_x, l_y<=y<=u_y} pairwise.

    Per pair the two candidates are (clamp(x), 0) and (0, clamp(y)); the
    cheaper one wins and ties keep the x branch.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch("x and y must have the same length")
    xt = np.clip(x, lx, ux)
    yt = np.clip(y, ly, uy)
    keep_x = x * x + (yt - y) ** 2 >= (xt - x) ** 2 + y * y
    return np.where(keep_x, xt, 0.0), np.where(keep_x, 0.0, yt)


def nnls_lawson_hanson(E, f, maxiter=None):
    """min ||E u - f|| over u >= 0 by the classic active-set iteration.

    Pivoting is deterministic (largest dual, ties to the lowest index), so
    repeated calls are bit-reproducible.  At termination the complementary
    slackness of the returned u holds by construction.
    """
    E = np.asarray(E, dtype=float)
    f = np.asarray(f, dtype=float)
    m, k = E.shape
    if maxiter is None:
        maxiter = 30 * k + 100
    u = np.zeros(k)
    passive = np.zeros(k, dtype=bool)
    resid = f.copy()
    dual_tol = 1e-11 * max(1.0, float(np.abs(E).max()) * float(np.linalg.norm(f)))
    for _ in range(maxiter):
        dual = E.T @ resid
        dual[passive] = -np.inf
        j = int(np.argmax(dual))
        if dual[j] <= dual_tol:
            return u, float(np.linalg.norm(resid))
        passive[j] = True
        while True:
            idx = np.flatnonzero(passive)
            s, *_ = np.linalg.lstsq(E[:, idx], f, rcond=None)
            if np.min(s) > 0.0:
                u[:] = 0.0
                u[idx] = s
                break
            ui = u[idx]
            neg = s <= 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                steps = ui[neg] / (ui[neg] - s[neg])
            alpha = float(np.min(steps))
            u[idx] = ui + alpha * (s - ui)
            drop = idx[u[idx] <= 1e-14]
            u[drop] = 0.0
            passive[drop] = False
            if not passive.any():
                return u, float(np.linalg.norm(f))
        resid = f - E @ u
    raise NumericalFailure("active-set iteration limit exceeded in nonnegative least squares")


def project_polyhedron(x, A, b, maxiter=None):
    """Euclidean projection of x onto the nonempty polyhedron {z : Az <= b}.

    Solved through the least-distance reduction to nonnegative least
    squares: with G = -A and h = Ax - b, the NNLS problem
    min ||[G^T; h^T] u - e_{n+1}|| yields the step w via the residual.  A
    (numerically) zero NNLS residual certifies an empty polyhedron.
    """
    x = np.asarray(x, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    s, n = A.shape
    if x.shape != (n,) or b.shape != (s,):
        raise DimensionMismatch("inconsistent polyhedron dimensions")
    h = A @ x - b
    if np.all(h <= 0.0):
        return x.copy()
    E = np.vstack([-A.T, h])
    f = np.zeros(n + 1)
    f[n] = 1.0
    u, rnorm = nnls_lawson_hanson(E, f, maxiter=maxiter)
    r = E @ u - f
    if abs(r[n]) <= 1e-12:
        raise InfeasiblePolyhedron("polyhedron is empty (dual certificate)")
    w = -r[:n] / r[n]
    z = x + w
    # KKT sanity: stationarity w + A^T nu = 0 with complementary nu >= 0
    nu = u / (-r[n])
    scale = max(1.0, float(np.abs(h).max()), float(np.linalg.norm(w)))
    kkt = max(
        float(np.linalg.norm(w + A.T @ nu)),
        float(np.max(A @ z - b, initial=0.0)),
        float(np.abs(nu * (A @ z - b)).max(initial=0.0)),
    )
    if kkt > 1e-6 * scale:
        raise NumericalFailure(f"polyhedron projection KKT residual {kkt:.2e} too large")
    return z


def project_disjunctive(x, polyhedra):
    """Closest point among the projections onto each member polyhedron.

    Ties are broken toward the lowest member index.
    """
    if not polyhedra:
        raise ValueError("disjunctive union needs at least one member")
    best = None
    best_d2 = np.inf
    for A, b in polyhedra:
        z = project_polyhedron(x, A, b)
        d2 = float(np.sum((z - x) ** 2))
        if d2 < best_d2:
            best, best_d2 = z, d2
    return best


@lru_cache(maxsize=32)
def _triu_coords(n):
    iu, ju = np.triu_indices(n)
    w = np.where(iu == ju, 1.0, np.sqrt(2.0))
    return iu, ju, w


def pack_symmetric(M):
    """Isometric upper-triangle coordinates of a symmetric matrix.

    Off-diagonal entries are scaled by sqrt(2) so the packed Euclidean norm
    equals the Frobenius norm.
    """
    M = np.asarray(M, dtype=float)
    iu, ju, w = _triu_coords(M.shape[0])
    return M[iu, ju] * w


def unpack_symmetric(v, n):
    """Inverse of pack_symmetric."""
    v = np.asarray(v, dtype=float)
    iu, ju, w = _triu_coords(n)
    M = np.zeros((n, n))
    M[iu, ju] = v / w
    M[ju, iu] = M[iu, ju]
    return M


def _check_vec(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise DimensionMismatch(f"expected vector of length {dim}, got shape {x.shape}")
    return x


class GeometricSet:
    """Closed, possibly nonconvex set with a deterministic projection selector."""

    dim: int

    def project(self, x):
        raise NotImplementedError

    def contains(self, x, tol=1e-12):
        x = _check_vec(x, self.dim)
        return float(np.linalg.norm(self.project(x) - x)) <= tol


class Unrestricted(GeometricSet):
    """The whole space; projection is the identity."""

    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, x):
        return _check_vec(x, self.dim).copy()


class SparsitySet(GeometricSet):
    """{x : ||x||_0 <= s}."""

    def __init__(self, dim, s):
        self.dim = int(dim)
        if not 0 < s < self.dim:
            raise ValueError("sparsity level must satisfy 0 < s < n")
        self.s = int(s)

    def project(self, x):
        return project_sparse(_check_vec(x, self.dim), self.s)


class LowRankSet(GeometricSet):
    """{X : rank(X) <= rank} for m x n matrices stored as flat vectors."""

    def __init__(self, rank, shape):
        self.shape = (int(shape[0]), int(shape[1]))
        self.rank = int(rank)
        if not 1 <= self.rank <= min(self.shape) - 1:
            raise ValueError("rank bound must satisfy 1 <= rank <= min(m,n)-1")
        self.dim = self.shape[0] * self.shape[1]

    def project(self, x):
        X = _check_vec(x, self.dim).reshape(self.shape)
        return truncated_svd_project(X, self.rank).ravel()


class PsdLowRankSet(GeometricSet):
    """{X : X PSD symmetric, rank(X) <= rank} for n x n matrices.

    With packed=True the vectors are isometric upper-triangle coordinates
    (the natural storage when symmetry is structural); otherwise flat n*n
    vectors that must be symmetric up to tolerance.
    """

    def __init__(self, rank, n, packed=False):
        self.n = int(n)
        self.rank = int(rank)
        if not 1 <= self.rank < self.n:
            raise ValueError("rank bound must satisfy 1 <= rank < n")
        self.packed = bool(packed)
        self.dim = self.n * (self.n + 1) // 2 if packed else self.n * self.n

    def project(self, x):
        x = _check_vec(x, self.dim)
        if self.packed:
            # unpacking yields an exactly symmetric matrix; skip the check
            X = unpack_symmetric(x, self.n)
            return pack_symmetric(_psd_lowrank_core(X, self.rank, FULL_EIG_MAX_N))
        X = x.reshape(self.n, self.n)
        return psd_lowrank_project(X, self.rank).ravel()


class BoxSwitchingSet(GeometricSet):
    """Pairwise switching set on stacked (x, y) vectors of equal length."""

    def __init__(self, lx, ux, ly, uy):
        self.lx = np.asarray(lx, dtype=float)
        self.ux = np.asarray(ux, dtype=float)
        self.ly = np.asarray(ly, dtype=float)
        self.uy = np.asarray(uy, dtype=float)
        n = self.lx.size
        if not (self.ux.size == self.ly.size == self.uy.size == n):
            raise DimensionMismatch("bound vectors must have equal length")
        if np.any(self.lx > 0) or np.any(self.ux < 0) or np.any(self.ly > 0) or np.any(self.uy < 0):
            raise ValueError("each box must contain 0")
        self.pairs = n
        self.dim = 2 * n

    def project(self, x):
        x = _check_vec(x, self.dim)
        xh, yh = project_box_switching(
            x[: self.pairs], x[self.pairs :], self.lx, self.ux, self.ly, self.uy
        )
        return np.concatenate([xh, yh])


class DisjunctiveUnion(GeometricSet):
    """Union of polyhedra {z : A_q z <= b_q}."""

    def __init__(self, polyhedra, dim):
        self.polyhedra = [(np.asarray(A, dtype=float), np.asarray(b, dtype=float)) for A, b in polyhedra]
        if not self.polyhedra:
            raise ValueError("disjunctive union needs at least one member")
        self.dim = int(dim)

    def project(self, x):
        return project_disjunctive(_check_vec(x, self.dim), self.polyhedra)


class ProductSet(GeometricSet):
    """Cartesian product of geometric sets on consecutive coordinate blocks."""

    def __init__(self, parts):
        self.parts = list(parts)
        if not self.parts:
            raise ValueError("product needs at least one factor")
        self.dim = sum(p.dim for p in self.parts)
        self._offsets = np.cumsum([0] + [p.dim for p in self.parts])

    def project(self, x):
        x = _check_vec(x, self.dim)
        out = np.empty_like(x)
        for part, a, b in zip(self.parts, self._offsets[:-1], self._offsets[1:]):
            out[a:b] = part.project(x[a:b])
        return out
