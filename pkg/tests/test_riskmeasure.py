"""Risk-measure evaluation, conjugates, and axiom checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gooddeal.market import Claim, MarketCone, Measure, Space, consistent_set, full_simplex
from gooddeal.riskmeasure import (
    axioms_check,
    entropic,
    finite_list,
    quadratic_two_atom,
    relative_entropy,
    worst_case,
)
from gooddeal.sentinels import PLUS_INF
from gooddeal.superhedge import dual_superhedge


@pytest.fixture
def space2():
    return Space(("w1", "w2"), [0.5, 0.5])


def test_entropic_cash(space2):
    rho = entropic(space2, 1.0)
    c = 1.3
    assert rho.evaluate(Claim(space2, [c, c])) == pytest.approx(-c, abs=1e-12)


def test_quadratic_example_value(space2):
    rho = quadratic_two_atom(space2)
    # sup_q { q*1 + (1-q)*0 - q^2 } = 1/4 at q = 1/2
    assert rho.evaluate(Claim(space2, [-1.0, 0.0])) == pytest.approx(0.25, abs=1e-12)
    m = rho.argmax_measure(Claim(space2, [-1.0, 0.0]))
    assert m.q[0] == pytest.approx(0.5)


def test_finite_list_value(space2):
    rho = finite_list(space2, [[0.4, 0.6], [0.6, 0.4]], [0.0, 0.0])
    assert rho.evaluate(Claim(space2, [-1.0, 0.0])) == pytest.approx(0.6, abs=1e-12)


def test_finite_list_rejects_unnormalized(space2):
    with pytest.raises(ValueError):
        finite_list(space2, [[0.4, 0.6]], [0.1])
    with pytest.raises(ValueError):
        finite_list(space2, [[0.4, 0.6], [0.6, 0.4]], [0.0, -0.2])


def test_worst_case_conjugate(space2):
    rho = worst_case(full_simplex(space2))
    assert rho.conjugate(Measure(space2, [0.3, 0.7])) == 0.0
    market = MarketCone(space2, (Claim(space2, [1.0, 0.0]),))
    rho_q = worst_case(consistent_set(market))
    assert rho_q.conjugate(Measure(space2, [0.0, 1.0])) == 0.0
    assert rho_q.conjugate(Measure(space2, [0.5, 0.5])) is PLUS_INF


def test_entropic_conjugate(space2):
    rho = entropic(space2, 1.0)
    assert rho.conjugate(Measure(space2, [0.5, 0.5])) == pytest.approx(0.0, abs=1e-15)
    q = np.array([0.8, 0.2])
    expected = relative_entropy(q, np.array([0.5, 0.5]))
    assert rho.conjugate(q) == pytest.approx(expected, abs=1e-12)


def test_quadratic_conjugate(space2):
    rho = quadratic_two_atom(space2)
    for q1 in (0.0, 0.3, 1.0):
        assert rho.conjugate(np.array([q1, 1 - q1])) == pytest.approx(q1**2)


def test_finite_list_envelope_conjugate(space2):
    rho = finite_list(space2, [[0.4, 0.6], [0.6, 0.4]], [0.0, 0.2])
    # on the segment the envelope interpolates, off it the penalty is infinite
    assert rho.conjugate(np.array([0.4, 0.6])) == pytest.approx(0.0, abs=1e-10)
    assert rho.conjugate(np.array([0.6, 0.4])) == pytest.approx(0.2, abs=1e-10)
    assert rho.conjugate(np.array([0.5, 0.5])) == pytest.approx(0.1, abs=1e-10)
    assert rho.conjugate(np.array([0.9, 0.1])) is PLUS_INF


def test_axioms_pass_for_all_families(space2):
    simplex = full_simplex(space2)
    for rho in (
        entropic(space2, 1.0),
        quadratic_two_atom(space2),
        worst_case(simplex),
        finite_list(space2, [[0.4, 0.6], [0.6, 0.4]], [0.0, 0.1]),
    ):
        report = axioms_check(rho, samples=300, seed=5)
        assert report.passed, report.violations


def test_axioms_catch_broken_measure(space2):
    class Broken:
        space = space2

        def evaluate(self, x):
            return float(np.max(-x.values)) + 0.1  # not normalized

    report = axioms_check(Broken(), samples=10, seed=0)
    assert not report.passed
    assert report.violations[0]["axiom"] == "normalization"


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000))
def test_bid_ask_order_property(seed):
    space = Space(("w1", "w2"), [0.5, 0.5])
    rng = np.random.default_rng(seed)
    rho = entropic(space, float(rng.uniform(0.2, 3.0)))
    x = Claim(space, rng.normal(scale=2.0, size=2))
    # convexity + normalization force the bid below the ask
    assert rho.evaluate(x) + rho.evaluate(-x) >= -1e-8


def test_worst_case_matches_dual_superhedge(space2):
    market = MarketCone(space2, (Claim(space2, [0.5, -0.4]),))
    poly = consistent_set(market)
    rho = worst_case(poly)
    rng = np.random.default_rng(3)
    for _ in range(25):
        x = Claim(space2, rng.normal(size=2))
        assert rho.evaluate(x) == pytest.approx(dual_superhedge(poly, x), abs=1e-9)


def test_entropic_against_simplex_grid(space2):
    rho = entropic(space2, 1.7)
    p = space2.p
    grid = np.linspace(0.0, 1.0, 1001)
    rng = np.random.default_rng(9)
    for _ in range(5):
        x = rng.normal(size=2)
        vals = []
        for q1 in grid:
            q = np.array([q1, 1 - q1])
            vals.append(q @ (-x) - relative_entropy(q, p) / 1.7)
        oracle = max(vals)
        assert rho.evaluate(Claim(space2, x)) == pytest.approx(oracle, abs=1e-4)


def test_fenchel_consistency_finite_list(space2):
    """Evaluation agrees with re-maximizing against the envelope on a grid."""
    rho = finite_list(space2, [[0.3, 0.7], [0.8, 0.2]], [0.0, 0.4])
    rng = np.random.default_rng(21)
    grid = np.linspace(0.3, 0.8, 501)
    for _ in range(10):
        x = rng.normal(size=2)
        direct = rho.evaluate(Claim(space2, x))
        over_grid = max(
            q1 * (-x[0]) + (1 - q1) * (-x[1]) - rho.conjugate(np.array([q1, 1 - q1]))
            for q1 in grid
        )
        assert direct >= over_grid - 1e-9
        assert direct == pytest.approx(over_grid, abs=2e-3)


def test_conjugate_attains_supremum(space2):
    rho = quadratic_two_atom(space2)
    rng = np.random.default_rng(31)
    for _ in range(20):
        x = Claim(space2, rng.normal(size=2))
        m = rho.argmax_measure(x)
        recon = m.expectation(-x) - rho.conjugate(m)
        assert recon == pytest.approx(rho.evaluate(x), abs=1e-10)
