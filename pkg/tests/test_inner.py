import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pendec.errors import LineSearchFailure
from pendec.inner import (
    LbfgsDirection,
    LineSearchParams,
    NonlinearCgDirection,
    armijo_search,
    make_direction_strategy,
)


def test_armijo_full_step_on_well_scaled_quadratic():
    # q(a) = (1-a)^2 / 2 from x=1 along d=-1: first trial accepted
    alpha, value = armijo_search(lambda a: (1 - a) ** 2 / 2, 0.5, -1.0, LineSearchParams())
    assert alpha == 1.0
    assert value == 0.0


def test_armijo_backtracks_to_quarter_step():
    # q(a) = (1-3a)^2, slope -6, gamma=1/2: trials 1, 1/2 rejected, 1/4 accepted
    params = LineSearchParams(gamma=0.5, beta=0.5)
    alpha, value = armijo_search(lambda a: (1 - 3 * a) ** 2, 1.0, -6.0, params)
    assert alpha == 0.25
    assert value == pytest.approx(0.0625)


def test_armijo_rejects_ascent_slope():
    with pytest.raises(ValueError):
        armijo_search(lambda a: a, 0.0, 0.0, LineSearchParams())


def test_armijo_exhaustion_raises():
    with pytest.raises(LineSearchFailure):
        # oracle never satisfies the decrease test
        armijo_search(lambda a: 1.0, 0.0, -1.0, LineSearchParams(max_backtracks=5))


@given(st.floats(0.1, 100.0), st.floats(0.1, 10.0))
@settings(max_examples=60)
def test_armijo_inequality_holds_exactly_as_written(curvature, gnorm):
    # 1-d quadratic q(a) = q0 - g*a + .5*c*(a*g)^2 along d = -g
    params = LineSearchParams()
    q0 = 1.0
    slope = -(gnorm**2)

    def q(a):
        return q0 + a * slope + 0.5 * curvature * (a * gnorm) ** 2

    alpha, value = armijo_search(q, q0, slope, params)
    assert value <= q0 + params.gamma * alpha * slope
    # alpha is beta^j for some integer j
    j = round(np.log(alpha) / np.log(params.beta))
    assert alpha == pytest.approx(params.beta**j)
    if alpha < 1.0:  # the previous trial must have failed
        prev = alpha / params.beta
        assert q(prev) > q0 + params.gamma * prev * slope


def test_gradient_strategy_negates():
    strat = make_direction_strategy("gradient")
    assert np.array_equal(strat.direction(np.array([2.0, -4.0])), [-2.0, 4.0])


def test_lbfgs_empty_memory_is_steepest_descent():
    strat = LbfgsDirection()
    assert np.array_equal(strat.direction(np.array([2.0, -4.0])), [-2.0, 4.0])


def test_lbfgs_single_pair_two_loop():
    # s=[1,0], y=[2,0]: rho=1/2, scaling 1/2, direction on [2,0] is [-1,0]
    strat = LbfgsDirection()
    strat.update(np.array([1.0, 0.0]), np.array([2.0, 0.0]), np.zeros(2))
    assert np.allclose(strat.direction(np.array([2.0, 0.0])), [-1.0, 0.0])


def test_lbfgs_discards_flat_curvature_pairs():
    strat = LbfgsDirection()
    s = np.array([1.0, 0.0])
    # <s, y> = 1e-12 <= 1e-10 * ||s|| * ||y||: nearly orthogonal pair dropped
    strat.update(s, np.array([1e-12, 1.0]), np.zeros(2))
    assert len(strat.pairs) == 0
    strat.update(s, -s, np.zeros(2))  # negative curvature
    assert len(strat.pairs) == 0
    # a well-scaled pair with tiny norms is kept: the floor is relative
    strat.update(1e-6 * s, 1e-6 * s, np.zeros(2))
    assert len(strat.pairs) == 1


def test_lbfgs_memory_capped():
    strat = LbfgsDirection(memory=3)
    rng = np.random.default_rng(0)
    for _ in range(10):
        s = rng.normal(size=2)
        strat.update(s, s, np.zeros(2))
    assert len(strat.pairs) == 3


def test_zero_gradient_rejected():
    with pytest.raises(ValueError):
        make_direction_strategy("lbfgs").direction(np.zeros(3))


def test_safeguard_bounds_hold_for_all_strategies():
    # c1 ||g||^2 <= -<g, d> and ||d|| <= c2 ||g|| with the defaults
    rng = np.random.default_rng(5)
    for name in ("gradient", "lbfgs", "cg"):
        strat = make_direction_strategy(name)
        g_prev = None
        x = rng.normal(size=6)
        for _ in range(30):
            g = rng.normal(size=6)
            d = strat.direction(g)
            gg = float(g @ g)
            assert -float(g @ d) >= strat.c1 * gg - 1e-15
            assert float(np.linalg.norm(d)) <= strat.c2 * np.sqrt(gg) * (1 + 1e-12)
            step = 0.1 * d
            if g_prev is not None:
                strat.update(step, g - g_prev, g)
            g_prev = g


def test_safeguard_falls_back_to_gradient():
    class Bad(LbfgsDirection):
        def _raw_direction(self, grad):
            return grad  # ascent: must be replaced

    g = np.array([1.0, 2.0])
    assert np.array_equal(Bad().direction(g), -g)


def test_cg_restarts_every_dim_steps():
    strat = NonlinearCgDirection()
    rng = np.random.default_rng(11)
    dim = 3
    g = rng.normal(size=dim)
    d = strat.direction(g)
    assert np.array_equal(d, -g)
    for k in range(1, 2 * dim + 1):
        g_new = rng.normal(size=dim)
        strat.update(0.1 * d, g_new - g, g_new)
        g = g_new
        d = strat.direction(g)
        if k % dim == 0:
            assert np.array_equal(d, -g)  # periodic restart to steepest descent


def test_cg_on_quadratic_beats_gradient_descent():
    # PR+ with exact Armijo steps should reach a lower value in equal steps
    rng = np.random.default_rng(13)
    n = 8
    M = rng.normal(size=(n, n))
    Q = M @ M.T + np.eye(n)
    b = rng.normal(size=n)

    def run(strategy, steps=25):
        x = np.zeros(n)
        g = Q @ x - b
        for _ in range(steps):
            d = strategy.direction(g)
            alpha, _ = armijo_search(
                lambda a: 0.5 * float((x + a * d) @ Q @ (x + a * d)) - float(b @ (x + a * d)),
                0.5 * float(x @ Q @ x) - float(b @ x),
                float(g @ d),
                LineSearchParams(),
            )
            x = x + alpha * d
            g_new = Q @ x - b
            strategy.update(alpha * d, g_new - g, g_new)
            g = g_new
        return 0.5 * float(x @ Q @ x) - float(b @ x)

    assert run(NonlinearCgDirection()) <= run(make_direction_strategy("gradient")) + 1e-12
