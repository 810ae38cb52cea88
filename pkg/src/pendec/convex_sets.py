"""Convex target sets: projections, distances, squared-distance gradients.

Every set exposes ``project`` and derives the squared distance
s(y) = 0.5 * dist(y)^2 and its gradient y - P(y) from it, so there is a
single code path for the smooth penalty terms.
"""

import numpy as np

from .errors import DimensionMismatch

MEMBERSHIP_TOL = 1e-12


def _check_dim(y, dim):
    y = np.asarray(y, dtype=float)
    if y.shape != (dim,):
        raise DimensionMismatch(f"expected vector of length {dim}, got shape {y.shape}")
    return y


class ConvexTarget:
    """Closed convex set with a Euclidean projection operator."""

    dim: int

    def project(self, y):
        raise NotImplementedError

    def squared_distance_and_gradient(self, y):
        """Return (0.5*dist(y)^2, y - P(y)); both vanish iff y is in the set."""
        y = _check_dim(y, self.dim)
        g = y - self.project(y)
        return 0.5 * float(g @ g), g

    def distance(self, y):
        y = _check_dim(y, self.dim)
        return float(np.linalg.norm(y - self.project(y)))

    def contains(self, y, tol=MEMBERSHIP_TOL):
        return self.distance(y) <= tol


class WholeSpace(ConvexTarget):
    """No restriction; the projection is the identity."""

    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, y):
        return _check_dim(y, self.dim).copy()


class SingletonZero(ConvexTarget):
    """The set {0}."""

    def __init__(self, dim):
        self.dim = int(dim)

    def project(self, y):
        _check_dim(y, self.dim)
        return np.zeros(self.dim)


class Box(ConvexTarget):
    """Componentwise bounds l <= z <= u; +-inf entries are allowed and clamp trivially."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise DimensionMismatch("box bounds must be 1-d arrays of equal length")
        if np.any(self.lower > self.upper):
            raise ValueError("box requires l <= u componentwise")
        self.dim = self.lower.size

    def project(self, y):
        y = _check_dim(y, self.dim)
        return np.clip(y, self.lower, self.upper)


class NonpositiveShifted(ConvexTarget):
    """The shifted nonpositive orthant {z : z <= t}."""

    def __init__(self, t):
        self.t = np.asarray(t, dtype=float)
        self.dim = self.t.size

    def project(self, y):
        y = _check_dim(y, self.dim)
        return np.minimum(y, self.t)


class UnitSimplex(ConvexTarget):
    """The unit simplex {z : z >= 0, sum(z) = 1}.

    Projection uses the sort-based pivot rule: sort decreasingly, find the
    largest index whose running-mean shift keeps the component positive,
    subtract that shift, clamp at zero.
    """

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("simplex needs dimension >= 1")
        self.dim = int(dim)

    def project(self, y):
        y = _check_dim(y, self.dim)
        u = np.sort(y)[::-1]
        shifts = (np.cumsum(u) - 1.0) / np.arange(1, self.dim + 1)
        k = np.nonzero(u - shifts > 0)[0][-1]
        return np.maximum(y - shifts[k], 0.0)


class CartesianProduct(ConvexTarget):
    """Product of convex targets acting on consecutive blocks of coordinates."""

    def __init__(self, parts):
        self.parts = list(parts)
        if not self.parts:
            raise ValueError("product needs at least one factor")
        self.dim = sum(p.dim for p in self.parts)
        self._offsets = np.cumsum([0] + [p.dim for p in self.parts])

    def project(self, y):
        y = _check_dim(y, self.dim)
        out = np.empty_like(y)
        for part, a, b in zip(self.parts, self._offsets[:-1], self._offsets[1:]):
            out[a:b] = part.project(y[a:b])
        return out
