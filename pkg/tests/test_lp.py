"""Linear-programming kernel tests: statuses, certificates, duality."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gooddeal.errors import SolverError
from gooddeal.lp import LinearProgram, solve_lp


def test_trivial_optimal():
    # max x s.t. x <= 1, x >= 0
    lp = LinearProgram.build([1.0], a_ub=[[1.0]], b_ub=[1.0])
    out = solve_lp(lp)
    assert out.status == "optimal"
    assert out.value == pytest.approx(1.0, abs=1e-10)
    assert out.x[0] == pytest.approx(1.0, abs=1e-10)


def test_trivial_infeasible_with_farkas():
    # max x s.t. x <= -1, x >= 0
    lp = LinearProgram.build([1.0], a_ub=[[1.0]], b_ub=[-1.0])
    out = solve_lp(lp)
    assert out.status == "infeasible"
    cert = out.farkas
    assert cert is not None
    y, a_all, b_all = cert.as_inequality_form(lp)
    assert (y >= -1e-12).all()
    assert np.abs(y @ a_all).max() <= 1e-9
    assert y @ b_all < -1e-12


def test_trivial_unbounded_with_ray():
    # max x, x >= 0, no upper constraint
    lp = LinearProgram.build([1.0])
    out = solve_lp(lp)
    assert out.status == "unbounded"
    ray = out.ray
    assert ray is not None
    assert lp.objective @ ray > 1e-12


def test_equality_and_free_variables():
    # max x1 + x2 s.t. x1 + x2 = 1, x1 - x2 <= 0.2, x2 free
    lp = LinearProgram.build(
        [1.0, 1.0],
        a_ub=[[1.0, -1.0]],
        b_ub=[0.2],
        a_eq=[[1.0, 1.0]],
        b_eq=[1.0],
        lower=[0.0, None],
    )
    out = solve_lp(lp)
    assert out.status == "optimal"
    assert out.value == pytest.approx(1.0, abs=1e-10)


def test_shifted_lower_bounds():
    # max -x s.t. x >= 3  ->  optimum at x = 3
    lp = LinearProgram.build([-1.0], lower=[3.0])
    out = solve_lp(lp)
    assert out.status == "optimal"
    assert out.x[0] == pytest.approx(3.0, abs=1e-10)
    assert out.dual_value == pytest.approx(-3.0, abs=1e-10)


def test_degenerate_problem_terminates():
    # Many redundant constraints through the same vertex.
    lp = LinearProgram.build(
        [1.0, 1.0],
        a_ub=[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 2.0]],
        b_ub=[1.0, 1.0, 1.0, 2.0, 4.0],
    )
    out = solve_lp(lp)
    assert out.status == "optimal"
    assert out.value == pytest.approx(2.0, abs=1e-9)


def _random_lp(rng, n, m_ub, m_eq, free_frac=0.3):
    c = rng.normal(size=n)
    a_ub = rng.normal(size=(m_ub, n)) if m_ub else None
    b_ub = rng.uniform(0.5, 2.0, size=m_ub) if m_ub else None
    a_eq = None
    b_eq = None
    if m_eq:
        a_eq = rng.normal(size=(m_eq, n))
        b_eq = a_eq @ np.abs(rng.normal(size=n)) * 0.1
    lower = [None if rng.uniform() < free_frac else 0.0 for _ in range(n)]
    return LinearProgram.build(c, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=b_eq, lower=lower)


def _brute_force_value(lp, grid_cap=None):
    """Independent oracle: enumerate basic points of the inequality system."""
    n = lp.n_vars
    bounded = [i for i, l in enumerate(lp.lower) if l is not None]
    rows = [((lp.a_ub[r]), lp.b_ub[r]) for r in range(lp.a_ub.shape[0])]
    rows += [((lp.a_eq[r]), lp.b_eq[r]) for r in range(lp.a_eq.shape[0])]
    rows += [(-np.eye(n)[i], -lp.lower[i]) for i in bounded]
    eq_count = lp.a_eq.shape[0]
    best = None
    idx = range(len(rows))
    for combo in itertools.combinations(idx, n):
        # equality rows must always be active
        if eq_count and not set(range(lp.a_ub.shape[0], lp.a_ub.shape[0] + eq_count)) <= set(combo):
            continue
        a = np.array([rows[k][0] for k in combo])
        b = np.array([rows[k][1] for k in combo])
        try:
            x = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            continue
        feasible = all(r @ x <= rhs + 1e-8 for r, rhs in rows)
        if feasible:
            v = lp.objective @ x
            if best is None or v > best:
                best = v
    return best


@pytest.mark.parametrize("seed", range(30))
def test_random_lp_against_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 4))
    m_ub = int(rng.integers(1, 5))
    m_eq = int(rng.integers(0, 2))
    lp = _random_lp(rng, n, m_ub, m_eq)
    out = solve_lp(lp)
    oracle = _brute_force_value(lp)
    if out.status == "optimal":
        assert oracle is not None
        assert out.value == pytest.approx(oracle, abs=1e-7)
        # strong duality
        assert abs(out.value - out.dual_value) <= 1e-8 * (1 + abs(out.value))
    elif out.status == "infeasible":
        assert oracle is None
        y, a_all, b_all = out.farkas.as_inequality_form(lp)
        assert (y >= -1e-12).all()
        assert np.abs(y @ a_all).max() <= 1e-7 * (1 + np.abs(y).max())
        assert y @ b_all < 0
    else:  # unbounded
        ray = out.ray
        assert lp.objective @ ray > 1e-10
        if lp.a_ub.size:
            assert (lp.a_ub @ ray <= 1e-8).all()
        if lp.a_eq.size:
            assert np.abs(lp.a_eq @ ray).max() <= 1e-8
        for i, l in enumerate(lp.lower):
            if l is not None:
                assert ray[i] >= -1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_duality_gap_on_feasible_problems(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    m = int(rng.integers(1, 6))
    a_ub = rng.normal(size=(m, n))
    b_ub = a_ub @ np.abs(rng.normal(size=n)) + rng.uniform(0.1, 1.0, size=m)
    lp = LinearProgram.build(rng.normal(size=n), a_ub=a_ub, b_ub=b_ub)
    out = solve_lp(lp)
    if out.status == "optimal":
        assert abs(out.value - out.dual_value) <= 1e-8 * (1 + abs(out.value))
    else:
        assert out.status == "unbounded"


def test_iteration_budget_raises_explicitly():
    lp = LinearProgram.build(
        [1.0, 1.0, 1.0],
        a_ub=np.vstack([np.eye(3), np.ones((1, 3))]),
        b_ub=[1.0, 1.0, 1.0, 2.0],
    )
    with pytest.raises(SolverError):
        solve_lp(lp, max_iter=0)


def test_rejects_nonfinite_data():
    with pytest.raises(ValueError):
        LinearProgram.build([np.nan])
    with pytest.raises(ValueError):
        LinearProgram.build([1.0], a_ub=[[np.inf]], b_ub=[1.0])
