"""Frank-Wolfe and bisection tests against closed-form and grid oracles."""

import numpy as np
import pytest

from gooddeal.errors import BracketError
from gooddeal.market import Claim, MarketCone, Space, consistent_set, full_simplex
from gooddeal.optimize import bisect, maximize_concave_over_polytope


@pytest.fixture
def simplex2():
    return full_simplex(Space(("a", "b"), [0.5, 0.5]))


def test_linear_objective_hits_vertex(simplex2):
    z = np.array([1.0, 0.0])
    res = maximize_concave_over_polytope(lambda q: q @ z, lambda q: z, simplex2, tol=1e-9)
    assert res.value == pytest.approx(1.0, abs=1e-8)
    np.testing.assert_allclose(res.point, [1.0, 0.0], atol=1e-7)


def test_quadratic_penalty_example(simplex2):
    # sup over the simplex of q1*z1 + q2*z2 - q1^2 with z = (1, 0)
    def f(q):
        return q[0] - q[0] ** 2

    def grad(q):
        return np.array([1.0 - 2.0 * q[0], 0.0])

    res = maximize_concave_over_polytope(f, grad, simplex2, tol=1e-9)
    assert res.value == pytest.approx(0.25, abs=1e-8)
    assert res.point[0] == pytest.approx(0.5, abs=1e-6)


def test_entropy_minimized_at_reference(simplex2):
    p = np.array([0.5, 0.5])

    def f(q):
        safe = np.maximum(q, 1e-300)
        return -float(np.sum(safe * np.log(safe / p)))

    def grad(q):
        safe = np.maximum(q, 1e-16)
        return -(np.log(safe / p) + 1.0)

    res = maximize_concave_over_polytope(f, grad, simplex2, tol=1e-9)
    assert res.value == pytest.approx(0.0, abs=1e-8)
    np.testing.assert_allclose(res.point, p, atol=1e-5)


def test_feasible_start_short_circuits(simplex2):
    p = np.array([0.5, 0.5])

    def f(q):
        safe = np.maximum(q, 1e-300)
        return -float(np.sum(safe * np.log(safe / p)))

    def grad(q):
        safe = np.maximum(q, 1e-16)
        return -(np.log(safe / p) + 1.0)

    res = maximize_concave_over_polytope(f, grad, simplex2, tol=1e-9, start=p.copy())
    assert res.iterations == 0
    assert res.value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_matches_grid_oracle_on_constrained_polytopes(seed):
    rng = np.random.default_rng(seed)
    space = Space(("a", "b"), [0.6, 0.4])
    anchor = np.array([0.5, 0.5])
    raw = rng.normal(size=2)
    # shift the generator so the anchor measure stays consistent
    gens = (Claim(space, raw - (anchor @ raw + 0.05)),)
    poly = consistent_set(MarketCone(space, gens))
    assert not poly.is_empty
    z = rng.normal(size=2)
    kappa = rng.uniform(0.5, 2.0)

    def f(q):
        return float(q @ z - kappa * q[0] ** 2)

    def grad(q):
        return z - np.array([2.0 * kappa * q[0], 0.0])

    res = maximize_concave_over_polytope(f, grad, poly, tol=1e-9)
    # independent oracle: reduce the H-representation to a q1 interval by hand,
    # then take the max over a fine grid that includes the exact endpoints
    q_lo, q_hi = 0.0, 1.0
    for g1, g2 in poly.constraints:
        slope = g1 - g2
        if slope > 0:
            q_hi = min(q_hi, -g2 / slope)
        elif slope < 0:
            q_lo = max(q_lo, -g2 / slope)
        else:
            assert g2 <= 0
    assert q_lo <= q_hi
    grid = np.concatenate([np.linspace(q_lo, q_hi, 100_001), [q_lo, q_hi]])
    values = grid * z[0] + (1.0 - grid) * z[1] - kappa * grid**2
    oracle = values.max()
    assert res.value == pytest.approx(oracle, abs=1e-7)


def test_empty_polytope_rejected():
    space = Space(("a", "b"), [0.5, 0.5])
    poly = consistent_set(MarketCone(space, (Claim(space, [1.0, 1.0]),)))
    with pytest.raises(Exception):
        maximize_concave_over_polytope(lambda q: 0.0, lambda q: np.zeros(2), poly)


def test_bisect_step_threshold():
    c = bisect(lambda t: t >= 0.3, 0.0, 1.0, tol=1e-8)
    assert c == pytest.approx(0.3, abs=1e-8)


def test_bisect_quadratic_loss_threshold():
    # first c with l(max(-c,0)) <= delta for l(t)=t^2, delta=0.01 is -sqrt(delta)
    delta = 0.01
    c = bisect(lambda t: max(-t, 0.0) ** 2 <= delta, -1.0, 0.0, tol=1e-9)
    assert c == pytest.approx(-0.1, abs=1e-8)


def test_bisect_boundary_convention():
    assert bisect(lambda t: True, 2.0, 3.0) == 2.0


def test_bisect_expansion():
    c = bisect(lambda t: t >= -7.5, -1.0, 0.0, tol=1e-8, expand=True)
    assert c == pytest.approx(-7.5, abs=1e-7)
    with pytest.raises(BracketError):
        bisect(lambda t: False, 0.0, 1.0, expand=True, max_expand=5)
