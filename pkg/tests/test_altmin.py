import itertools

import numpy as np
import pytest

from pendec.altmin import AltMinParams, alternating_minimize
from pendec.errors import LineSearchFailure, NumericalFailure
from pendec.geometric_sets import SparsitySet, Unrestricted
from pendec.penalty import PenaltyObjective
from pendec.problem import CountingProblem, Problem


def quad_problem(a, geometric):
    return Problem(
        objective=lambda x: (0.5 * float((x - a) @ (x - a)), x - a),
        geometric_set=geometric,
        dim_x=a.size,
    )


def test_unconstrained_whole_space_converges_to_origin():
    prob = quad_problem(np.zeros(2), Unrestricted(2))
    po = PenaltyObjective(prob, 1.0)
    x0 = np.array([4.0, 4.0])
    x, y, stats = alternating_minimize(po, x0, x0.copy(), AltMinParams(eps_in=1e-12))
    assert np.allclose(x, 0.0, atol=1e-4)
    assert np.array_equal(x, y)
    assert stats.q_values[-1] <= 1e-7


def test_large_tau_pins_sparse_solution():
    a = np.array([3.0, 0.1])
    prob = quad_problem(a, SparsitySet(2, 1))
    po = PenaltyObjective(prob, 1e6)
    x, y, stats = alternating_minimize(
        po, a.copy(), prob.geometric_set.project(a), AltMinParams(eps_in=1e-10)
    )
    # support enumeration over the 2 singletons: keeping the first wins
    assert np.array_equal(y, [3.0, 0.0])
    assert np.allclose(x, [3.0, 0.0], atol=1e-3)


def test_immediate_gradient_exit():
    prob = quad_problem(np.zeros(2), Unrestricted(2))
    po = PenaltyObjective(prob, 1.0)
    x0 = np.array([1e-9, 0.0])
    x, y, stats = alternating_minimize(po, x0, x0.copy(), AltMinParams(delta=1e-6))
    assert stats.iterations == 0
    assert stats.stop == "gradient"
    assert np.array_equal(x, x0)


def test_q_strictly_decreasing_until_stop():
    rng = np.random.default_rng(3)
    a = rng.normal(size=4)
    prob = quad_problem(a, SparsitySet(4, 2))
    po = PenaltyObjective(prob, 3.0)
    x0 = rng.normal(size=4)
    _, _, stats = alternating_minimize(
        po, x0, prob.geometric_set.project(x0), AltMinParams(eps_in=1e-8)
    )
    diffs = -np.diff(stats.q_values)
    assert np.all(diffs[:-1] > 1e-8)  # every accepted pass decreased above the threshold
    assert diffs[-1] >= -1e-12  # the final pass may only trigger the stop


def test_exactly_one_projection_per_inner_iteration():
    rng = np.random.default_rng(5)
    a = rng.normal(size=5)
    prob = quad_problem(a, SparsitySet(5, 2))
    counting = CountingProblem(prob)
    po = PenaltyObjective(counting, 2.0)
    before = counting.projections
    _, _, stats = alternating_minimize(
        po, np.zeros(5), np.zeros(5), AltMinParams(eps_in=1e-9, j_max=4, step_grad_tol=1e-7)
    )
    assert counting.projections - before == stats.iterations


def test_returned_y_is_projection_of_final_x():
    rng = np.random.default_rng(7)
    a = rng.normal(size=6)
    prob = quad_problem(a, SparsitySet(6, 2))
    po = PenaltyObjective(prob, 4.0)
    x, y, stats = alternating_minimize(po, np.zeros(6), np.zeros(6), AltMinParams(eps_in=1e-9))
    assert stats.iterations > 0
    assert np.array_equal(y, prob.geometric_set.project(x))
    assert np.array_equal(prob.geometric_set.project(y), y)


def test_y_update_matches_support_enumeration():
    # the projection step must solve min_{y in D} q(x, y) exactly
    rng = np.random.default_rng(9)
    prob = quad_problem(rng.normal(size=5), SparsitySet(5, 2))
    po = PenaltyObjective(prob, 2.5)
    for _ in range(20):
        x = rng.normal(size=5)
        y_best, best = None, np.inf
        for support in itertools.combinations(range(5), 2):
            z = np.zeros(5)
            z[list(support)] = x[list(support)]
            value = po.value(x, z)
            if value < best:
                y_best, best = z, value
        assert po.value(x, po.y_subproblem(x)) <= best + 1e-12


def test_divergence_guard_aborts():
    prob = Problem(
        objective=lambda x: (-float(x @ x) ** 2, -4.0 * float(x @ x) * x),
        geometric_set=Unrestricted(2),
        dim_x=2,
    )
    po = PenaltyObjective(prob, 1e-3)
    with pytest.raises((NumericalFailure, LineSearchFailure)):
        alternating_minimize(
            po,
            np.array([5.0, 5.0]),
            np.array([5.0, 5.0]),
            AltMinParams(eps_in=1e-9, q_floor=-1e6, max_inner_iters=100000),
        )


def test_iteration_cap_reported():
    rng = np.random.default_rng(11)
    a = rng.normal(size=4)
    prob = quad_problem(a, SparsitySet(4, 1))
    po = PenaltyObjective(prob, 1.0)
    _, _, stats = alternating_minimize(
        po, np.zeros(4), np.zeros(4), AltMinParams(eps_in=1e-16, max_inner_iters=3)
    )
    assert stats.stop in ("iteration_cap", "decrease")
    assert stats.iterations <= 3


def test_multi_step_mode_reduces_iterations():
    rng = np.random.default_rng(13)
    a = rng.normal(size=6)
    prob = quad_problem(a, SparsitySet(6, 2))

    def run(j_max, tol):
        po = PenaltyObjective(prob, 5.0)
        _, _, stats = alternating_minimize(
            po,
            np.zeros(6),
            np.zeros(6),
            AltMinParams(eps_in=1e-9, j_max=j_max, step_grad_tol=tol),
        )
        return stats.iterations

    assert run(50, 1e-7) <= run(1, 0.0)
