"""Risk-indifference pricing relative to a market cone.

The indifference price of a claim is the least cash amount that keeps the
optimally hedged position no riskier than the optimally hedged status quo:

    price(x) = inf over trades m of rho(x + m)  -  inf over trades m of rho(m)

The second infimum (the "offset") is cached by the pricer.  Piecewise-linear
penalties (finite list, worst case) evaluate by an epigraph LP over the hedge
weights; smooth penalties (entropic, quadratic) evaluate through the dual
form: a concave maximization of ``E_Q[-x] - penalty(Q)`` over the consistent
measures, valid on finite spaces by minimax and cross-checked in tests.

An offset of minus infinity means the market lets the base measure's risk be
pushed below any floor; the pricer is then degenerate and every evaluation
raises :class:`DegenerateMarketError` naming the unbounded ray.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateMarketError, GoodDealError, SolverError
from .lp import LinearProgram, solve_lp
from .market import Claim, MarketCone, MeasurePolytope, VertexCapError, consistent_set, vertices
from .optimize import maximize_concave_over_polytope
from .riskmeasure import (
    EntropicPenalty,
    FiniteListPenalty,
    QuadraticPenalty,
    RiskMeasure,
    WorstCasePenalty,
)
from .sentinels import MINUS_INF, is_finite

DUAL_GAP_TOL = 1e-9
_HEDGE_MAX_ITER = 5_000


def _support_and_penalties(base: RiskMeasure):
    """Finite support representation of a piecewise-linear penalty."""
    pen = base.penalty
    if isinstance(pen, FiniteListPenalty):
        support = np.vstack([m.q for m in pen.measures])
        return support, pen.penalties
    if isinstance(pen, WorstCasePenalty):
        verts = vertices(pen.polytope)
        support = np.vstack([v.q for v in verts])
        return support, np.zeros(support.shape[0])
    raise GoodDealError("no finite support representation for smooth penalties")


@dataclass(frozen=True, eq=False)
class IndifferencePricer:
    """Seller's indifference prices for one (market, base risk measure) pair."""

    market: MarketCone
    base: RiskMeasure
    consistent: MeasurePolytope
    offset: object  # float or MINUS_INF
    unbounded_ray: Optional[Claim] = None

    @classmethod
    def build(cls, market: MarketCone, base: RiskMeasure) -> "IndifferencePricer":
        if market.space != base.space:
            raise GoodDealError("market and base risk measure live on different spaces")
        poly = consistent_set(market)
        value, ray = _offset_with_certificate(market, base, poly)
        return cls(market=market, base=base, consistent=poly, offset=value, unbounded_ray=ray)

    @property
    def space(self):
        return self.market.space

    @property
    def is_degenerate(self) -> bool:
        return not is_finite(self.offset)

    def _require_finite(self):
        if self.is_degenerate:
            raise DegenerateMarketError(
                "indifference pricer is degenerate: hedged risk is unbounded below "
                f"along the zero-cost claim {None if self.unbounded_ray is None else self.unbounded_ray.values}",
                ray=self.unbounded_ray,
            )

    def price(self, x: Claim) -> float:
        """The indifference value; ``price(-x)`` is the seller's ask for ``x``."""
        self._require_finite()
        pen = self.base.penalty
        if isinstance(pen, (FiniteListPenalty, WorstCasePenalty)):
            value, _, _ = _hedged_risk_lp(self.market, self.base, x)
            if value is MINUS_INF:
                raise DegenerateMarketError("hedged risk unbounded below", ray=None)
            return float(value - self.offset)
        return self._dual_price(x)

    # risk-measure protocol, so pricers feed the same harnesses as measures
    evaluate = price

    def _dual_price(self, x: Claim) -> float:
        base = self.base

        def value(q):
            return float(q @ (-x.values) - base.conjugate(q))

        def gradient(q):
            return -x.values - base.penalty_gradient(q)

        start = _smooth_penalty_start(base, self.consistent)
        res = maximize_concave_over_polytope(
            value, gradient, self.consistent, tol=DUAL_GAP_TOL, start=start
        )
        return float(res.value - self.offset)

    def hedge(self, x: Claim):
        """Hedge weights attaining the inner infimum, with the hedged risk value."""
        self._require_finite()
        pen = self.base.penalty
        if isinstance(pen, (FiniteListPenalty, WorstCasePenalty)):
            value, lam, _ = _hedged_risk_lp(self.market, self.base, x)
            return lam, float(value - self.offset)
        return self._smooth_hedge(x)

    def _smooth_hedge(self, x: Claim):
        """Projected gradient on the hedge weights for smooth penalties."""
        g = self.market.generator_matrix
        k = g.shape[0]
        if k == 0:
            return np.zeros(0), float(self.base.evaluate(x) - self.offset)
        lam = np.zeros(k)

        def risk(l):
            return self.base.evaluate(Claim(self.space, x.values + g.T @ l))

        best = risk(lam)
        step = 1.0
        for _ in range(_HEDGE_MAX_ITER):
            q_star = self.base.argmax_measure(Claim(self.space, x.values + g.T @ lam))
            grad = -(g @ q_star.q)
            candidate = np.maximum(lam - step * grad, 0.0)
            moved = np.abs(candidate - lam).max()
            value = risk(candidate)
            if value < best - 1e-14:
                lam, best = candidate, value
                step *= 1.2
            else:
                step *= 0.5
                if step < 1e-12 or moved < 1e-12:
                    break
        return lam, float(best - self.offset)


def offset(market: MarketCone, base: RiskMeasure):
    """``inf over zero-cost trades m of rho(m)``; MINUS_INF sentinel when unbounded."""
    value, _ = _offset_with_certificate(market, base, consistent_set(market))
    return value


def _offset_with_certificate(market: MarketCone, base: RiskMeasure, poly: MeasurePolytope):
    pen = base.penalty
    if isinstance(pen, (FiniteListPenalty, WorstCasePenalty)):
        zero = Claim(market.space, np.zeros(market.space.n_atoms))
        value, _, ray = _hedged_risk_lp(market, base, zero)
        return value, ray
    # smooth penalties: hedge out the market by the dual identity
    if poly.is_empty:
        ones = Claim(market.space, np.ones(market.space.n_atoms))
        lam = market.containment_witness(ones)
        ray = None
        if lam is not None:
            ray = Claim(market.space, market.generator_matrix.T @ lam)
        return MINUS_INF, ray

    def value(q):
        return -float(base.conjugate(q))

    def gradient(q):
        return -base.penalty_gradient(q)

    start = _smooth_penalty_start(base, poly)
    res = maximize_concave_over_polytope(value, gradient, poly, tol=DUAL_GAP_TOL, start=start)
    return float(res.value), None


def _smooth_penalty_start(base: RiskMeasure, poly: MeasurePolytope) -> Optional[np.ndarray]:
    """Unconstrained penalty minimizer; a one-step optimum when it is consistent."""
    pen = base.penalty
    if isinstance(pen, EntropicPenalty):
        return base.space.p.copy()
    if isinstance(pen, QuadraticPenalty):
        return np.array([0.0, 1.0])
    return None


def _hedged_risk_lp(market: MarketCone, base: RiskMeasure, x: Claim):
    """``inf over m of rho(x + m)`` as an epigraph LP for finite-support penalties.

    Returns ``(value, hedge_weights, ray)``; an unbounded LP yields
    ``(MINUS_INF, None, ray_claim)``.  The free-disposal weights are included
    even though monotone measures never use them.
    """
    support, penalties = _support_and_penalties(base)
    g = market.generator_matrix
    k = g.shape[0]
    n = market.space.n_atoms
    n_meas = support.shape[0]
    # variables (t, lam, s): minimize t  s.t.  Q_i.(-x - g.T lam + s) - c_i <= t
    lam_block = -(support @ g.T) if k else np.zeros((n_meas, 0))
    a_ub = np.hstack([-np.ones((n_meas, 1)), lam_block, support])
    b_ub = penalties + support @ x.values
    objective = np.zeros(1 + k + n)
    objective[0] = -1.0
    lp = LinearProgram.build(
        objective, a_ub=a_ub, b_ub=b_ub, lower=[None] + [0.0] * (k + n)
    )
    out = solve_lp(lp)
    if out.status == "unbounded":
        d_lam, d_s = out.ray[1 : 1 + k], out.ray[1 + k :]
        direction = (g.T @ d_lam if k else np.zeros(n)) - d_s
        return MINUS_INF, None, Claim(market.space, direction)
    if out.status != "optimal":
        raise SolverError(f"hedged-risk LP returned {out.status}")
    return float(out.x[0]), out.x[1 : 1 + k], None


def indifference_price(pricer: IndifferencePricer, x: Claim) -> float:
    return pricer.price(x)


def dual_indifference_price(pricer: IndifferencePricer, x: Claim) -> float:
    """Independent dual evaluation for finite-support penalties (testing route).

    Maximizes ``E_Q[-x] - envelope_penalty(Q)`` over mixtures of the support
    measures constrained to the consistent polytope, then removes the offset.
    """
    pricer._require_finite()
    support, penalties = _support_and_penalties(pricer.base)
    n_meas = support.shape[0]
    constraints = pricer.consistent.constraints
    a_ub = constraints @ support.T if constraints.size else None
    lp = LinearProgram.build(
        support @ (-x.values) - penalties,
        a_ub=a_ub,
        b_ub=np.zeros(constraints.shape[0]) if constraints.size else None,
        a_eq=np.ones((1, n_meas)),
        b_eq=[1.0],
    )
    out = solve_lp(lp)
    if out.status == "infeasible":
        raise DegenerateMarketError(
            "no consistent measure carries finite penalty; dual price undefined"
        )
    if out.status != "optimal":
        raise SolverError(f"dual indifference LP returned {out.status}")
    return float(out.value - pricer.offset)


def fixed_point_residual(market: MarketCone, rho: RiskMeasure, test_claims) -> float:
    """Largest gap between the indifference operator's output and its input.

    Zero residual (up to solver tolerance) characterizes measures already
    priced by the market: applying the operator changes nothing.
    """
    pricer = IndifferencePricer.build(market, rho)
    worst = 0.0
    for x in test_claims:
        worst = max(worst, abs(pricer.price(x) - rho.evaluate(x)))
    return worst
