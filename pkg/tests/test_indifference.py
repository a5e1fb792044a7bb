"""Indifference-operator tests: offsets, prices, fixed points."""

import numpy as np
import pytest

from gooddeal.errors import DegenerateMarketError
from gooddeal.indifference import (
    IndifferencePricer,
    dual_indifference_price,
    fixed_point_residual,
    offset,
)
from gooddeal.market import Claim, MarketCone, Space, consistent_set, full_simplex
from gooddeal.riskmeasure import (
    entropic,
    finite_list,
    quadratic_two_atom,
    relative_entropy,
    worst_case,
)
from gooddeal.sentinels import MINUS_INF


@pytest.fixture
def space2():
    return Space(("w0", "w1"), [0.5, 0.5])


def arrow_debreu(space):
    unit = np.array([0.0, 1.0])
    return MarketCone(space, (Claim(space, unit - 0.6), Claim(space, 0.4 - unit)))


def test_offset_frictionless_entropic(space2):
    assert offset(MarketCone(space2, ()), entropic(space2, 1.0)) == pytest.approx(0.0, abs=1e-9)


def test_offset_arrow_debreu_entropic_matches_grid(space2):
    market = arrow_debreu(space2)
    value = offset(market, entropic(space2, 1.0))
    # independent oracle: -min of relative entropy over the consistent segment
    grid_min = min(
        relative_entropy(np.array([1 - q, q]), space2.p) for q in np.linspace(0.4, 0.6, 2001)
    )
    assert value == pytest.approx(-grid_min, abs=1e-8)
    assert value == pytest.approx(0.0, abs=1e-9)  # reference measure is consistent here


def test_offset_skewed_reference_matches_grid():
    space = Space(("w0", "w1"), [0.8, 0.2])
    market = arrow_debreu(space)
    value = offset(market, entropic(space, 1.0))
    # the reference (q1 = 0.2) is outside [0.4, 0.6]: the offset is strictly negative
    grid_min = min(
        relative_entropy(np.array([1 - q, q]), space.p) for q in np.linspace(0.4, 0.6, 200_001)
    )
    assert value == pytest.approx(-grid_min, abs=1e-8)
    assert value < -1e-3


def test_offset_worst_case_is_zero(space2):
    market = arrow_debreu(space2)
    rho = worst_case(consistent_set(market))
    assert offset(market, rho) == pytest.approx(0.0, abs=1e-10)


def test_offset_degenerate_with_ray(space2):
    market = MarketCone(space2, (Claim(space2, [1.0, 1.0]),))
    assert offset(market, entropic(space2, 1.0)) is MINUS_INF
    pricer = IndifferencePricer.build(market, entropic(space2, 1.0))
    assert pricer.is_degenerate
    with pytest.raises(DegenerateMarketError) as err:
        pricer.price(Claim(space2, [0.0, 0.0]))
    assert err.value.ray is not None
    assert err.value.ray.values.min() >= 1.0 - 1e-9  # dominates cash


def test_price_zero_claim_is_zero(space2):
    for rho in (entropic(space2, 2.0), finite_list(space2, [[0.4, 0.6], [0.6, 0.4]], [0.0, 0.3])):
        pricer = IndifferencePricer.build(arrow_debreu(space2), rho)
        assert pricer.price(Claim(space2, [0.0, 0.0])) == pytest.approx(0.0, abs=1e-9)


def test_no_hedging_instruments_reduce_to_base(space2):
    """With only free disposal available, indifference pricing returns the base measure."""
    market = MarketCone(space2, ())
    rho = entropic(space2, 1.0)
    pricer = IndifferencePricer.build(market, rho)
    rng = np.random.default_rng(17)
    for _ in range(25):
        x = Claim(space2, rng.normal(scale=1.5, size=2))
        assert pricer.price(-x) == pytest.approx(rho.evaluate(-x), abs=1e-8)
        assert pricer.price(-x) == pytest.approx(
            np.log(0.5 * np.exp(x.values[0]) + 0.5 * np.exp(x.values[1])), abs=1e-8
        )


def test_arrow_debreu_entropic_ask_inside_bounds(space2):
    market = arrow_debreu(space2)
    pricer = IndifferencePricer.build(market, entropic(space2, 1.0))
    ask = pricer.price(Claim(space2, [0.0, -1.0]))  # sell one unit of the traded state
    assert 0.4 <= ask <= 0.6
    # oracle: maximize q*(1) - entropy penalty over the consistent segment
    qs = np.linspace(0.4, 0.6, 2001)
    oracle = max(q - relative_entropy(np.array([1 - q, q]), space2.p) for q in qs)
    assert ask == pytest.approx(oracle, abs=1e-7)


def test_fixed_point_worst_case_over_consistent(space2):
    market = arrow_debreu(space2)
    rho = worst_case(consistent_set(market))
    rng = np.random.default_rng(3)
    claims = [Claim(space2, rng.normal(scale=2.0, size=2)) for _ in range(100)]
    assert fixed_point_residual(market, rho, claims) <= 1e-7


def test_fixed_point_quadratic_frictionless(space2):
    market = MarketCone(space2, ())
    rho = quadratic_two_atom(space2)
    rng = np.random.default_rng(4)
    claims = [Claim(space2, rng.normal(scale=2.0, size=2)) for _ in range(60)]
    assert fixed_point_residual(market, rho, claims) <= 1e-6


def test_fixed_point_fails_for_entropic_on_arrow_debreu(space2):
    market = arrow_debreu(space2)
    rho = entropic(space2, 1.0)
    rng = np.random.default_rng(5)
    claims = [Claim(space2, rng.normal(scale=2.0, size=2)) for _ in range(40)]
    assert fixed_point_residual(market, rho, claims) > 1e-3


def test_price_dominated_by_shifted_base(space2):
    market = arrow_debreu(space2)
    rho = entropic(space2, 1.3)
    pricer = IndifferencePricer.build(market, rho)
    rng = np.random.default_rng(6)
    for _ in range(30):
        x = Claim(space2, rng.normal(scale=2.0, size=2))
        assert pricer.price(x) <= rho.evaluate(x) - pricer.offset + 1e-8


def test_market_claims_priced_nonpositive(space2):
    market = arrow_debreu(space2)
    pricer = IndifferencePricer.build(market, entropic(space2, 1.0))
    g = market.generator_matrix
    rng = np.random.default_rng(7)
    for _ in range(20):
        lam = rng.uniform(0, 2, size=g.shape[0])
        s = rng.uniform(0, 1, size=2)
        m = Claim(space2, g.T @ lam - s)
        assert pricer.price(-m) <= 1e-8


def test_dual_primal_agreement_finite_list(space2):
    market = arrow_debreu(space2)
    rho = finite_list(space2, [[0.4, 0.6], [0.55, 0.45]], [0.0, 0.12])
    pricer = IndifferencePricer.build(market, rho)
    rng = np.random.default_rng(8)
    for _ in range(40):
        x = Claim(space2, rng.normal(scale=2.0, size=2))
        assert pricer.price(x) == pytest.approx(dual_indifference_price(pricer, x), abs=1e-7)


def test_price_cash_invariance_and_convexity(space2):
    market = arrow_debreu(space2)
    pricer = IndifferencePricer.build(market, entropic(space2, 0.8))
    rng = np.random.default_rng(9)
    for _ in range(20):
        x = Claim(space2, rng.normal(size=2))
        y = Claim(space2, rng.normal(size=2))
        c = float(rng.normal())
        assert pricer.price(x + c) == pytest.approx(pricer.price(x) - c, abs=1e-7)
        lam = float(rng.uniform())
        mix = x * lam + y * (1 - lam)
        assert pricer.price(mix) <= lam * pricer.price(x) + (1 - lam) * pricer.price(y) + 1e-7


def test_hedge_report(space2):
    market = arrow_debreu(space2)
    pricer = IndifferencePricer.build(market, entropic(space2, 1.0))
    x = Claim(space2, [0.0, -1.0])
    lam, hedged = pricer.hedge(x)
    assert lam.shape == (2,)
    assert (lam >= -1e-12).all()
    assert hedged == pytest.approx(pricer.price(x), abs=1e-5)

    rho = finite_list(space2, [[0.4, 0.6], [0.6, 0.4]], [0.0, 0.0])
    pricer2 = IndifferencePricer.build(market, rho)
    lam2, hedged2 = pricer2.hedge(x)
    assert hedged2 == pytest.approx(pricer2.price(x), abs=1e-9)
