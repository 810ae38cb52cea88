import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pendec.errors import InfeasiblePolyhedron
from pendec.geometric_sets import (
    BoxSwitchingSet,
    DisjunctiveUnion,
    LowRankSet,
    ProductSet,
    PsdLowRankSet,
    SparsitySet,
    Unrestricted,
    pack_symmetric,
    project_box_switching,
    project_disjunctive,
    project_polyhedron,
    project_sparse,
    psd_lowrank_project,
    truncated_svd_project,
    unpack_symmetric,
)


def _random_polyhedron(rng, rows, n):
    while True:
        A = rng.uniform(-1, 1, (rows, n))
        b = rng.uniform(-1, 1, rows)
        try:
            project_polyhedron(np.zeros(n), A, b)
        except InfeasiblePolyhedron:
            continue
        return A, b


def all_sets():
    rng = np.random.default_rng(23)
    return [
        ("sparsity", SparsitySet(6, 2)),
        ("low_rank", LowRankSet(2, (5, 4))),
        ("psd_low_rank", PsdLowRankSet(2, 5)),
        ("psd_low_rank_packed", PsdLowRankSet(2, 5, packed=True)),
        (
            "box_switching",
            BoxSwitchingSet(np.full(3, -1.0), np.ones(3), np.zeros(3), np.full(3, np.inf)),
        ),
        ("disjunctive", DisjunctiveUnion([_random_polyhedron(rng, 4, 3) for _ in range(3)], 3)),
        ("product", ProductSet([Unrestricted(2), SparsitySet(4, 1)])),
    ]


def _generic_point(name, target, rng):
    x = rng.normal(scale=2.0, size=target.dim)
    if name in ("psd_low_rank",):
        M = x.reshape(target.n, target.n)
        return ((M + M.T) / 2).ravel()
    return x


@pytest.mark.parametrize("name,target", all_sets())
def test_projection_idempotent(name, target):
    rng = np.random.default_rng(29)
    for _ in range(20):
        x = _generic_point(name, target, rng)
        p = target.project(x)
        assert np.linalg.norm(target.project(p) - p) <= 1e-10 * max(1.0, np.linalg.norm(p))


# sparsity -------------------------------------------------------------


def test_sparse_examples():
    assert np.array_equal(project_sparse([3.0, -1.0, 2.0], 2), [3.0, 0.0, 2.0])
    x = np.array([0.0, 5.0, 0.0, -1.0])
    assert np.array_equal(project_sparse(x, 2), x)  # already sparse: fixed point
    assert np.array_equal(project_sparse([1.0, -1.0], 1), [1.0, 0.0])  # lowest-index tie


def test_sparse_out_of_range_rejected():
    with pytest.raises(ValueError):
        project_sparse([1.0, 2.0], 2)
    with pytest.raises(ValueError):
        project_sparse([1.0, 2.0], 0)


def _sparse_oracle_distance(x, s):
    best = np.inf
    for support in itertools.combinations(range(x.size), s):
        z = np.zeros(x.size)
        z[list(support)] = x[list(support)]
        best = min(best, np.linalg.norm(z - x))
    return best


def test_sparse_projection_exhaustive_1000_trials():
    rng = np.random.default_rng(31)
    for _ in range(1000):
        n = int(rng.integers(2, 11))
        s = int(rng.integers(1, n))
        x = rng.normal(size=n)
        p = project_sparse(x, s)
        assert np.count_nonzero(p) <= s
        kept = p != 0
        assert np.array_equal(p[kept], x[kept])
        assert np.linalg.norm(p - x) <= _sparse_oracle_distance(x, s) + 1e-12


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=9), st.data())
@settings(max_examples=60)
def test_sparse_projection_optimal_property(values, data):
    x = np.asarray(values)
    s = data.draw(st.integers(1, x.size - 1))
    p = project_sparse(x, s)
    assert np.linalg.norm(p - x) <= _sparse_oracle_distance(x, s) + 1e-9


# low rank -------------------------------------------------------------


def test_truncated_svd_examples():
    X = np.diag([3.0, 2.0, 1.0])
    assert np.allclose(truncated_svd_project(X, 2), np.diag([3.0, 2.0, 0.0]), atol=1e-12)
    rng = np.random.default_rng(37)
    low = rng.normal(size=(6, 2)) @ rng.normal(size=(2, 4))
    assert np.linalg.norm(truncated_svd_project(low, 2) - low) <= 1e-10  # fixed point


def test_truncated_svd_tail_energy_50_matrices():
    rng = np.random.default_rng(41)
    for _ in range(50):
        m, n = int(rng.integers(3, 9)), int(rng.integers(3, 9))
        k = int(rng.integers(1, min(m, n)))
        X = rng.normal(size=(m, n))
        P = truncated_svd_project(X, k)
        sv = np.linalg.svd(X, compute_uv=False)
        tail = float(np.sum(sv[k:] ** 2))
        resid = float(np.linalg.norm(X - P) ** 2)
        assert abs(resid - tail) <= 1e-8 * max(1.0, tail)


def test_truncated_svd_random_5x4_residual():
    rng = np.random.default_rng(43)
    X = rng.normal(size=(5, 4))
    P = truncated_svd_project(X, 2)
    sv = np.linalg.svd(X, compute_uv=False)
    assert np.linalg.norm(X - P) ** 2 == pytest.approx(sv[2] ** 2 + sv[3] ** 2, rel=1e-8)


# psd low rank ---------------------------------------------------------


def test_psd_lowrank_examples():
    assert np.allclose(psd_lowrank_project(np.diag([2.0, -1.0]), 1), np.diag([2.0, 0.0]))
    rng = np.random.default_rng(47)
    B = rng.normal(size=(5, 2))
    X = B @ B.T  # PSD with rank 2: fixed point
    assert np.allclose(psd_lowrank_project(X, 2), X, atol=1e-10)


def test_psd_lowrank_matches_full_eigendecomposition_oracle():
    rng = np.random.default_rng(53)
    for _ in range(20):
        M = rng.normal(size=(8, 8))
        X = (M + M.T) / 2
        P = psd_lowrank_project(X, 3)
        vals, vecs = np.linalg.eigh(X)
        keep = np.maximum(vals[-3:], 0.0)
        ref = (vecs[:, -3:] * keep) @ vecs[:, -3:].T
        assert np.linalg.norm(P - ref) <= 1e-8


def test_psd_lowrank_lanczos_path_matches_dense():
    rng = np.random.default_rng(59)
    M = rng.normal(size=(90, 90))
    X = (M + M.T) / 2
    fast = psd_lowrank_project(X, 4)  # n > 64: partial eigensolver
    dense = psd_lowrank_project(X, 4, full_eig_max_n=1000)
    assert np.linalg.norm(fast - dense) <= 1e-7


def test_psd_lowrank_rejects_asymmetric():
    X = np.array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        psd_lowrank_project(X, 1)


def test_packed_coordinates_are_isometric():
    rng = np.random.default_rng(61)
    M = rng.normal(size=(7, 7))
    M = (M + M.T) / 2
    v = pack_symmetric(M)
    assert np.allclose(unpack_symmetric(v, 7), M, atol=1e-14)
    assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(M), rel=1e-14)


def test_packed_projection_consistent_with_full():
    rng = np.random.default_rng(67)
    M = rng.normal(size=(6, 6))
    M = (M + M.T) / 2
    packed = PsdLowRankSet(2, 6, packed=True).project(pack_symmetric(M))
    assert np.allclose(unpack_symmetric(packed, 6), psd_lowrank_project(M, 2), atol=1e-10)


# box switching --------------------------------------------------------


def test_box_switching_examples():
    xh, yh = project_box_switching(np.array([1.0]), np.array([2.0]), 0.0, np.inf, 0.0, np.inf)
    assert (xh[0], yh[0]) == (0.0, 2.0)  # branch distances 1 vs 4
    xh, yh = project_box_switching(np.array([0.5]), np.array([0.0]), 0.0, 1.0, 0.0, 1.0)
    assert (xh[0], yh[0]) == (0.5, 0.0)  # feasible pair unchanged
    xh, yh = project_box_switching(np.array([3.0]), np.array([3.0]), 0.0, 1.0, 0.0, 1.0)
    assert (xh[0], yh[0]) == (1.0, 0.0)  # tie keeps the x branch


def _switch_oracle(x, y, lx, ux, ly, uy):
    xt = min(max(x, lx), ux)
    yt = min(max(y, ly), uy)
    dx = (xt - x) ** 2 + y**2
    dy = x**2 + (yt - y) ** 2
    return (xt, 0.0) if dx <= dy else (0.0, yt)


def test_box_switching_brute_force_1000_pairs():
    rng = np.random.default_rng(71)
    for _ in range(1000):
        lx, ly = -rng.random(2)
        ux, uy = rng.random(2)
        if rng.random() < 0.3:
            ux = np.inf
        if rng.random() < 0.3:
            lx = -np.inf
        x, y = rng.normal(scale=2.0, size=2)
        xh, yh = project_box_switching(np.array([x]), np.array([y]), lx, ux, ly, uy)
        ox, oy = _switch_oracle(x, y, lx, ux, ly, uy)
        got = (xh[0] - x) ** 2 + (yh[0] - y) ** 2
        want = (ox - x) ** 2 + (oy - y) ** 2
        assert got == pytest.approx(want, abs=1e-12)
        assert xh[0] * yh[0] == 0.0


def test_box_switching_requires_zero_in_boxes():
    with pytest.raises(ValueError):
        BoxSwitchingSet(np.array([1.0]), np.array([2.0]), np.array([0.0]), np.array([1.0]))


# polyhedra ------------------------------------------------------------


def test_polyhedron_feasible_point_is_fixed():
    A = np.array([[1.0, 0.0], [0.0, 1.0]])
    b = np.array([1.0, 1.0])
    x = np.array([0.2, -3.0])
    assert np.array_equal(project_polyhedron(x, A, b), x)


def test_polyhedron_halfspace_example():
    z = project_polyhedron(np.array([2.0, 5.0]), np.array([[1.0, 0.0]]), np.array([0.0]))
    assert np.allclose(z, [0.0, 5.0], atol=1e-10)


def _projection_oracle_active_set(x, A, b):
    # exhaustive search over active sets of the least-distance KKT system
    s, n = A.shape
    best, best_d = None, np.inf
    for r in range(0, min(s, n) + 1):
        for active in itertools.combinations(range(s), r):
            idx = list(active)
            if idx:
                Aa = A[idx]
                K = Aa @ Aa.T
                try:
                    nu = np.linalg.solve(K, Aa @ x - b[idx])
                except np.linalg.LinAlgError:
                    continue
                if np.min(nu) < -1e-9:
                    continue
                z = x - Aa.T @ nu
            else:
                z = x.copy()
            if np.max(A @ z - b, initial=0.0) > 1e-9:
                continue
            d = np.linalg.norm(z - x)
            if d < best_d:
                best, best_d = z, d
    return best


def test_polyhedron_matches_active_set_oracle_12x10():
    rng = np.random.default_rng(73)
    hits = 0
    while hits < 5:
        A, b = _random_polyhedron(rng, 12, 10)
        x = rng.normal(scale=1.5, size=10)
        z = project_polyhedron(x, A, b)
        ref = _projection_oracle_active_set(x, A, b)
        assert ref is not None
        assert np.linalg.norm(z - ref) <= 1e-6
        assert np.max(A @ z - b, initial=0.0) <= 1e-8
        hits += 1


def test_polyhedron_infeasible_detected():
    A = np.array([[1.0], [-1.0]])
    b = np.array([-1.0, -1.0])  # x <= -1 and x >= 1
    with pytest.raises(InfeasiblePolyhedron):
        project_polyhedron(np.array([0.0]), A, b)


# disjunctive ----------------------------------------------------------


def test_disjunctive_examples():
    polys = [
        (np.array([[1.0], [-1.0]]), np.array([1.0, 0.0])),  # [0, 1]
        (np.array([[1.0], [-1.0]]), np.array([4.0, -3.0])),  # [3, 4]
    ]
    assert project_disjunctive(np.array([2.4]), polys) == pytest.approx([3.0])
    assert project_disjunctive(np.array([0.5]), polys) == pytest.approx([0.5])  # member point


def test_disjunctive_min_over_member_projections():
    rng = np.random.default_rng(79)
    polys = [_random_polyhedron(rng, 5, 4) for _ in range(5)]
    union = DisjunctiveUnion(polys, 4)
    for _ in range(20):
        x = rng.normal(scale=2.0, size=4)
        p = union.project(x)
        dists = [np.linalg.norm(project_polyhedron(x, A, b) - x) for A, b in polys]
        assert np.linalg.norm(p - x) <= min(dists) + 1e-10
        for A, b in polys:
            assert np.linalg.norm(p - x) <= np.linalg.norm(project_polyhedron(x, A, b) - x) + 1e-10


def test_product_set_projects_blockwise():
    ps = ProductSet([Unrestricted(2), SparsitySet(3, 1)])
    x = np.array([1.0, -2.0, 3.0, -4.0, 1.0])
    p = ps.project(x)
    assert np.array_equal(p[:2], x[:2])
    assert np.array_equal(p[2:], [0.0, -4.0, 0.0])
