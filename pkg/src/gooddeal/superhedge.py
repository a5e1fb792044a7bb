"""Superhedging bounds and arbitrage certification.

The superhedging cost of a claim is the least initial capital that, combined
with some zero-cost trade, dominates the claim in every state.  Its dual is a
plain linear maximum over the consistent-measure polytope; on finite spaces
the two agree exactly (polyhedral strong duality), so both paths are exposed
and cross-checked in tests.

Every boolean in the market report carries a machine-checkable certificate:
a consistent measure, an equivalent consistent measure, a dominating hedge
for the cash claim, or an arbitrage claim together with the hedge that
super-replicates it from zero cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import SolverError
from .lp import LinearProgram, solve_lp
from .market import (
    Claim,
    MarketCone,
    Measure,
    MeasurePolytope,
    consistent_set,
    has_equivalent_measure,
)
from .sentinels import MINUS_INF, PLUS_INF, is_finite

ARBITRAGE_TOL = 1e-9

RealOrSentinel = Union[float, object]


@dataclass(frozen=True)
class PriceBound:
    """Pricing interval for a claim.  ``kind`` is "no-arbitrage" or "good-deal"."""

    lower: RealOrSentinel
    upper: RealOrSentinel
    kind: str

    def __post_init__(self):
        if is_finite(self.lower) and is_finite(self.upper):
            if self.lower > self.upper + 1e-9:
                raise ValueError(f"bound interval is empty: [{self.lower}, {self.upper}]")

    @property
    def is_degenerate(self) -> bool:
        """True when either endpoint is a sentinel (no consistent pricing)."""
        return not (is_finite(self.lower) and is_finite(self.upper))

    def width(self) -> float:
        return float(self.upper - self.lower)

    def contains(self, price: float, slack: float = 0.0) -> bool:
        return self.lower - slack <= price <= self.upper + slack


@dataclass(frozen=True)
class FtapReport:
    """Market-level existence flags with their certificates.

    ``q_nonempty``  - a consistent pricing measure exists,
    ``one_in_m``    - the cash claim is attainable at zero cost,
    ``qe_nonempty`` - a consistent measure charging every atom exists,
    ``nfl``         - no nonzero nonnegative claim is attainable at zero cost.

    On finite spaces ``q_nonempty == not one_in_m`` and ``qe_nonempty == nfl``;
    both pairs are computed by independent LPs and verified at construction.
    """

    q_nonempty: bool
    one_in_m: bool
    qe_nonempty: bool
    nfl: bool
    consistent_measure: Optional[Measure] = None
    equivalent_measure: Optional[Measure] = None
    arbitrage_claim: Optional[Claim] = None
    arbitrage_hedge: Optional[np.ndarray] = None
    cash_dominating_hedge: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.q_nonempty == self.one_in_m:
            raise RuntimeError(
                "inconsistent certificates: consistent-set emptiness must mirror "
                "cash attainability on a finite space"
            )
        if self.qe_nonempty != self.nfl:
            raise RuntimeError(
                "inconsistent certificates: equivalent-measure existence must mirror "
                "absence of arbitrage on a finite space"
            )


def superhedging_cost(market: MarketCone, x: Claim) -> RealOrSentinel:
    """Least cash ``c`` such that ``c + m + x >= 0`` for some zero-cost trade ``m``.

    Returns the ``MINUS_INF`` sentinel when the cost is unbounded below, which
    happens exactly when no consistent pricing measure exists.
    """
    n = market.space.n_atoms
    g = market.generator_matrix
    k = g.shape[0]
    # variables (c, lam): maximize -c  s.t.  -c - lam.g <= x componentwise
    objective = np.zeros(1 + k)
    objective[0] = -1.0
    a_ub = np.hstack([-np.ones((n, 1)), -g.T]) if k else -np.ones((n, 1))
    lp = LinearProgram.build(
        objective, a_ub=a_ub, b_ub=x.values, lower=[None] + [0.0] * k
    )
    out = solve_lp(lp)
    if out.status == "unbounded":
        return MINUS_INF
    if out.status != "optimal":
        raise SolverError(f"superhedging LP returned {out.status}")
    return float(out.x[0])


def superhedging_witness(market: MarketCone, x: Claim):
    """``(cost, hedge_weights)`` for the superhedge of ``x``; sentinel cost has no hedge."""
    n = market.space.n_atoms
    g = market.generator_matrix
    k = g.shape[0]
    objective = np.zeros(1 + k)
    objective[0] = -1.0
    a_ub = np.hstack([-np.ones((n, 1)), -g.T]) if k else -np.ones((n, 1))
    lp = LinearProgram.build(objective, a_ub=a_ub, b_ub=x.values, lower=[None] + [0.0] * k)
    out = solve_lp(lp)
    if out.status == "unbounded":
        return MINUS_INF, None
    return float(out.x[0]), out.x[1:]


def dual_superhedge(polytope: MeasurePolytope, x: Claim) -> RealOrSentinel:
    """Supremum of ``E_Q[-x]`` over the consistent measures; sentinel when empty."""
    if polytope.is_empty:
        return MINUS_INF
    value, _ = polytope.linear_maximum(-x.values)
    return float(value)


def no_arbitrage_bound(market: MarketCone, x: Claim) -> PriceBound:
    """The interval between the buyer's and the seller's superhedging prices."""
    upper = superhedging_cost(market, -x)
    cost_x = superhedging_cost(market, x)
    lower = MINUS_INF if cost_x is MINUS_INF else -cost_x
    if lower is MINUS_INF:
        lower = PLUS_INF  # -(-inf): interval degenerates, flagged via is_degenerate
    return PriceBound(lower=lower, upper=upper, kind="no-arbitrage")


def ftap_report(market: MarketCone) -> FtapReport:
    """Existence flags for consistent pricing, with certificates for each verdict."""
    poly = consistent_set(market)
    q_nonempty = not poly.is_empty

    ones = Claim(market.space, np.ones(market.space.n_atoms))
    cash_hedge = market.containment_witness(ones)
    one_in_m = cash_hedge is not None

    equivalent = has_equivalent_measure(poly)
    qe_nonempty = equivalent is not None

    arb_claim, arb_hedge = _arbitrage_search(market)
    nfl = arb_claim is None

    return FtapReport(
        q_nonempty=q_nonempty,
        one_in_m=one_in_m,
        qe_nonempty=qe_nonempty,
        nfl=nfl,
        consistent_measure=poly.witness,
        equivalent_measure=equivalent,
        arbitrage_claim=arb_claim,
        arbitrage_hedge=arb_hedge,
        cash_dominating_hedge=cash_hedge,
    )


def _arbitrage_search(market: MarketCone):
    """Maximize the mass of a nonnegative claim attainable at zero cost.

    Solves ``max sum(z) s.t. 0 <= z <= 1, z <= lam . g, lam >= 0``; the market
    admits arbitrage iff the optimum is strictly positive, and the maximizer
    is the arbitrage witness.
    """
    n = market.space.n_atoms
    g = market.generator_matrix
    k = g.shape[0]
    if k == 0:
        return None, None
    # variables (z, lam)
    rows_link = np.hstack([np.eye(n), -g.T])
    rows_cap = np.hstack([np.eye(n), np.zeros((n, k))])
    lp = LinearProgram.build(
        np.concatenate([np.ones(n), np.zeros(k)]),
        a_ub=np.vstack([rows_link, rows_cap]),
        b_ub=np.concatenate([np.zeros(n), np.ones(n)]),
    )
    out = solve_lp(lp)
    if out.status != "optimal":
        raise SolverError(f"arbitrage-search LP returned {out.status}")
    if out.value <= ARBITRAGE_TOL:
        return None, None
    z = np.maximum(out.x[:n], 0.0)
    return Claim(market.space, z), out.x[n:]
