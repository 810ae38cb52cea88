import numpy as np
import pytest

from pendec.convex_sets import Box, SingletonZero
from pendec.errors import DimensionMismatch, EvaluationError
from pendec.geometric_sets import SparsitySet, Unrestricted
from pendec.problem import CountingProblem, Problem, evaluate_constraints, evaluate_objective


def quad_problem():
    return Problem(
        objective=lambda x: (0.5 * float(x @ x), x.copy()),
        geometric_set=Unrestricted(2),
        dim_x=2,
    )


def test_objective_examples():
    value, grad = evaluate_objective(quad_problem(), np.array([1.0, 2.0]))
    assert value == pytest.approx(2.5)
    assert np.allclose(grad, [1.0, 2.0])

    c = np.array([3.0, -1.0])
    linear = Problem(
        objective=lambda x: (float(c @ x), c.copy()), geometric_set=Unrestricted(2), dim_x=2
    )
    value, grad = evaluate_objective(linear, np.zeros(2))
    assert value == 0.0
    assert np.array_equal(grad, c)


def test_objective_validation():
    prob = quad_problem()
    with pytest.raises(DimensionMismatch):
        evaluate_objective(prob, np.zeros(3))
    with pytest.raises(EvaluationError):
        evaluate_objective(prob, np.array([np.nan, 0.0]))

    bad = Problem(
        objective=lambda x: (np.inf, x.copy()), geometric_set=Unrestricted(2), dim_x=2
    )
    with pytest.raises(EvaluationError):
        evaluate_objective(bad, np.zeros(2))

    wrong_dim = Problem(
        objective=lambda x: (0.0, np.zeros(3)), geometric_set=Unrestricted(2), dim_x=2
    )
    with pytest.raises(DimensionMismatch):
        evaluate_objective(wrong_dim, np.zeros(2))


def test_constraints_simplex_sum_example():
    n = 4
    prob = Problem(
        objective=lambda x: (0.0, np.zeros(n)),
        geometric_set=Unrestricted(n),
        dim_x=n,
        constraint_map=lambda x: (np.array([x.sum() - 1.0]), lambda lam: np.full(n, lam[0])),
        convex_target=SingletonZero(1),
        dim_y=1,
    )
    _, residual = evaluate_constraints(prob, np.full(n, 1.0 / n))
    assert residual <= 1e-12


def test_constraints_box_clamp_example():
    prob = Problem(
        objective=lambda x: (0.0, np.zeros(2)),
        geometric_set=Unrestricted(2),
        dim_x=2,
        constraint_map=lambda x: (x.copy(), lambda lam: lam.copy()),
        convex_target=Box(np.zeros(2), np.ones(2)),
        dim_y=2,
    )
    _, residual = evaluate_constraints(prob, np.array([2.0, -1.0]))
    assert residual == pytest.approx(np.sqrt(2.0))


def test_constraints_residual_matches_direct_recomputation():
    # random affine map into a random box
    rng = np.random.default_rng(3)
    n, m = 5, 4
    M = rng.normal(size=(m, n))
    d = rng.normal(size=m)
    lo = rng.normal(size=m)
    hi = lo + rng.random(m)
    box = Box(lo, hi)
    prob = Problem(
        objective=lambda x: (0.0, np.zeros(n)),
        geometric_set=Unrestricted(n),
        dim_x=n,
        constraint_map=lambda x: (M @ x + d, lambda lam: M.T @ lam),
        convex_target=box,
        dim_y=m,
    )
    for _ in range(25):
        x = rng.normal(scale=2.0, size=n)
        g, residual = evaluate_constraints(prob, x)
        assert abs(residual - np.linalg.norm(g - box.project(g))) <= 1e-12


def test_absent_constraint_map_gives_zero_residual():
    g, residual = evaluate_constraints(quad_problem(), np.ones(2))
    assert residual == 0.0
    assert g.size == 0


def test_constraint_map_requires_target():
    with pytest.raises(ValueError):
        Problem(
            objective=lambda x: (0.0, np.zeros(2)),
            geometric_set=Unrestricted(2),
            dim_x=2,
            constraint_map=lambda x: (x, lambda lam: lam),
        )


def test_counting_problem_tracks_calls():
    base = Problem(
        objective=lambda x: (0.0, np.zeros(3)),
        geometric_set=SparsitySet(3, 1),
        dim_x=3,
        constraint_map=lambda x: (x.copy(), lambda lam: lam.copy()),
        convex_target=SingletonZero(3),
        dim_y=3,
    )
    counting = CountingProblem(base)
    counting.objective(np.zeros(3))
    counting.objective(np.zeros(3))
    counting.constraint_map(np.zeros(3))
    counting.project_geometric(np.ones(3))
    assert counting.counters() == {
        "objective_evals": 2,
        "constraint_evals": 1,
        "projections": 1,
    }
