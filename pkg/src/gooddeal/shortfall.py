"""Shortfall risk pricing: least acceptable price under an expected-loss budget.

The shortfall price of a position is the smallest cash amount ``c`` such that
some zero-cost trade ``m`` keeps the expected loss-weighted shortfall of
``c + m + x`` within the budget ``delta``.  The raw functional is *not*
normalized (its value at zero is the negative inverse loss of the budget);
subtracting that value yields a normalized measure that prices inside the
no-arbitrage bounds.

The outer search is a bisection on ``c``.  The inner feasibility question
"can hedging bring the expected shortfall under the budget?" is convex in
the hedge weights; candidate hedges (previous optimum, zero, the
superhedge) answer most queries immediately, and the rest run a projected
subgradient warm start followed by a projected Newton polish down to
stationarity, so the bisection consumes minima accurate far beyond its own
tolerance.  A linear loss skips all of that: the inner problem is an LP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GoodDealError, SolverError
from .lp import LinearProgram, solve_lp
from .market import Claim, MarketCone
from .optimize import bisect
from .sentinels import MINUS_INF, is_finite
from .superhedge import superhedging_witness

BISECTION_TOL = 1e-7
_SUBGRADIENT_STEPS = 40
_NEWTON_STEPS = 120
_HEDGE_BOX = 1e4
_KKT_TOL = 1e-11
# Directional slopes this small cannot be acted on in double precision; the
# induced error in the hedging infimum is far below the bisection tolerance.
_STATIONARY_SLOPE = 1e-7
# Kinked losses are certified over this declared compact box of hedge weights.
_KINKED_HEDGE_BOX = 100.0
_EXP_CLAMP = 700.0


@dataclass(frozen=True)
class LossFunction:
    """Strictly increasing convex loss on the nonnegative half-line with l(0)=0.

    ``power``: ``l(t) = t**exponent`` with exponent >= 1.
    ``exponential``: ``l(t) = exp(rate * t) - 1`` with rate > 0.
    """

    kind: str
    exponent: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.kind == "power":
            if not (self.exponent >= 1.0):
                raise ValueError("power loss needs exponent >= 1")
        elif self.kind == "exponential":
            if not (self.rate > 0.0):
                raise ValueError("exponential loss needs a positive rate")
        else:
            raise ValueError(f"unknown loss kind {self.kind!r}")

    def value(self, t: np.ndarray) -> np.ndarray:
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        if self.kind == "power":
            return t**self.exponent
        return np.exp(np.minimum(self.rate * t, _EXP_CLAMP)) - 1.0

    def slope(self, t: np.ndarray) -> np.ndarray:
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        if self.kind == "power":
            if self.exponent == 1.0:
                return np.ones_like(t)
            return self.exponent * t ** (self.exponent - 1.0)
        return self.rate * np.exp(np.minimum(self.rate * t, _EXP_CLAMP))

    def inverse(self, level: float) -> float:
        if level < 0:
            raise ValueError("loss levels are nonnegative")
        if self.kind == "power":
            return float(level ** (1.0 / self.exponent))
        return float(np.log1p(level) / self.rate)

    @property
    def kinked_at_zero(self) -> bool:
        """True when ``l`` has positive slope at zero, kinking the shortfall."""
        if self.kind == "power":
            return self.exponent == 1.0
        return True


def power_loss(exponent: float) -> LossFunction:
    return LossFunction(kind="power", exponent=float(exponent))


def exponential_loss(rate: float) -> LossFunction:
    return LossFunction(kind="exponential", rate=float(rate))


@dataclass(frozen=True)
class ShortfallMeasure:
    """A market, a loss function, and a positive risk budget."""

    market: MarketCone
    loss: LossFunction
    delta: float
    tol: float = BISECTION_TOL

    def __post_init__(self):
        if not (self.delta > 0.0):
            raise ValueError("the shortfall budget must be strictly positive")

    @property
    def space(self):
        return self.market.space


class _InnerProblem:
    """Expected shortfall of ``c + hedge + x`` as a function of hedge weights."""

    def __init__(self, sm: ShortfallMeasure, x: Claim):
        self.p = sm.space.p
        self.g = sm.market.generator_matrix
        self.k = self.g.shape[0]
        self.x = x.values
        self.loss = sm.loss
        self.delta = sm.delta

    def value(self, c: float, lam: np.ndarray) -> float:
        y = c + (self.g.T @ lam if self.k else 0.0) + self.x
        return float(self.p @ self.loss.value(np.maximum(-y, 0.0)))

    def value_and_grad(self, c: float, lam: np.ndarray):
        y = c + (self.g.T @ lam if self.k else 0.0) + self.x
        neg = np.maximum(-y, 0.0)
        active = y < 0
        weights = self.p * self.loss.slope(neg) * active
        grad = -(self.g @ weights) if self.k else np.zeros(0)
        return float(self.p @ self.loss.value(neg)), grad

    def curvature(self, c: float, lam: np.ndarray) -> np.ndarray:
        """Hessian of the expected shortfall in the hedge weights (where smooth)."""
        y = c + (self.g.T @ lam if self.k else 0.0) + self.x
        neg = np.maximum(-y, 0.0)
        active = y < 0
        if self.loss.kind == "power":
            p_exp = self.loss.exponent
            if p_exp == 1.0:
                second = np.zeros_like(neg)
            else:
                second = p_exp * (p_exp - 1.0) * np.maximum(neg, 1e-12) ** (p_exp - 2.0)
        else:
            rate = self.loss.rate
            second = rate * rate * np.exp(np.minimum(rate * neg, _EXP_CLAMP))
        w = self.p * second * active
        return (self.g * w) @ self.g.T


def _feasible_by_lp(inner: _InnerProblem, c: float) -> bool:
    """Exact feasibility for the linear loss: one LP in (shortfall, hedge)."""
    n = inner.p.shape[0]
    k = inner.k
    # variables (u, lam): minimize p.u  s.t.  -u - lam.g <= c + x, u >= 0, lam >= 0
    a_ub = np.hstack([-np.eye(n), -inner.g.T]) if k else -np.eye(n)
    lp = LinearProgram.build(
        np.concatenate([-inner.p, np.zeros(k)]),
        a_ub=a_ub,
        b_ub=c + inner.x,
    )
    out = solve_lp(lp)
    if out.status != "optimal":
        raise SolverError(f"linear shortfall LP returned {out.status}")
    return -out.value <= inner.delta


def _steepest_feasible_direction(inner: _InnerProblem, c: float, lam: np.ndarray, zone_scale: float = 1e-11):
    """Minimize the exact directional derivative over the feasible direction box.

    Losses with ``l'(0) > 0`` put the hedging optimum on a kink (an atom's
    payoff exactly zero), where smooth gradients cannot certify stationarity.
    The one-sided derivative along ``d`` is linear in ``d`` apart from
    positive-part terms on the kink atoms, so its minimum over the box
    ``d in [-1, 1]^k`` (nonnegative on active bounds) is a small LP.  A
    nonnegative optimum certifies the global minimum; a negative one returns
    a strict descent direction.
    """
    k = inner.k
    y = c + inner.g.T @ lam + inner.x
    zone = zone_scale * (1.0 + abs(c) + np.abs(lam).max(initial=0.0))
    shorted = y < -zone
    kink = np.abs(y) <= zone
    slope_smooth = -(inner.g[:, shorted] @ (inner.p[shorted] * inner.loss.slope(-y[shorted])))
    kink_idx = np.nonzero(kink)[0]
    n_kink = kink_idx.size
    kink_weight = inner.p[kink_idx] * inner.loss.slope(np.zeros(n_kink))
    active = lam <= 1e-12
    # variables (d, w): minimize slope.d + weight.w
    #   s.t. -(g.T d)_kink - w <= 0, d <= 1, w free-scale; d >= -1 (0 if active)
    objective = -np.concatenate([slope_smooth, kink_weight])
    rows_link = np.hstack([-inner.g.T[kink_idx], -np.eye(n_kink)]) if n_kink else None
    rows_cap = np.hstack([np.eye(k), np.zeros((k, n_kink))])
    a_ub = np.vstack([rows_link, rows_cap]) if rows_link is not None else rows_cap
    b_ub = np.concatenate([np.zeros(n_kink), np.ones(k)])
    lower = [0.0 if active[i] else -1.0 for i in range(k)] + [0.0] * n_kink
    lp = LinearProgram.build(objective, a_ub=a_ub, b_ub=b_ub, lower=lower)
    out = solve_lp(lp)
    if out.status != "optimal":
        raise SolverError(f"directional-derivative LP returned {out.status}")
    return -out.value, out.x[:k]


def _loss_conjugate(loss: LossFunction, s: np.ndarray) -> np.ndarray:
    """``sup over t >= 0 of s t - l(t)`` elementwise (the Fenchel conjugate)."""
    s = np.maximum(np.asarray(s, dtype=float), 0.0)
    if loss.kind == "power":
        p = loss.exponent
        if p == 1.0:
            return np.where(s <= 1.0, 0.0, np.inf)
        return (p - 1.0) * (s / p) ** (p / (p - 1.0))
    a = loss.rate
    ratio = np.maximum(s / a, 1.0)  # below the kink slope the supremum sits at zero
    return ratio * np.log(ratio) - ratio + 1.0


def _dual_lower_bound(inner: _InnerProblem, c: float, lam: np.ndarray) -> float:
    """Certified lower bound on the hedging infimum over the declared box.

    The inner problem's Fenchel dual is closed-form: a weight vector ``mu``
    with ``G mu <= 0`` bounds the infimum by ``mu.(-c-x) - sum p l*(mu/p)``.
    Strictly shorted atoms pin their weight at ``p l'(shortfall)``; atoms
    sitting exactly on the kink may take any weight up to ``p l'(0)``, and a
    small LP picks the selection minimizing the cone violation.  Whatever
    violation remains is charged against the declared hedge box, keeping the
    bound valid for every hedge inside it.
    """
    y = c + (inner.g.T @ lam if inner.k else 0.0) + inner.x
    zone = 1e-9 * (1.0 + abs(c))
    shorted = y < -zone
    kink = np.abs(y) <= zone
    base = np.where(shorted, inner.p * inner.loss.slope(np.maximum(-y, 0.0)), 0.0)
    kink_full = np.where(kink, inner.p * inner.loss.slope(np.zeros_like(y)), 0.0)

    candidates = [base]
    if kink.any():
        candidates.append(base + kink_full)
        repaired = _repair_kink_weights(inner, base, kink, kink_full)
        if repaired is not None:
            candidates.append(repaired)

    best_bound = -np.inf
    for mu in candidates:
        with np.errstate(over="ignore"):
            conj = _loss_conjugate(inner.loss, mu / inner.p)
        if not np.all(np.isfinite(conj)):
            continue
        violation = 0.0
        if inner.k:
            violation = float(np.maximum(inner.g @ mu, 0.0).sum())
        bound = float(mu @ (-c - inner.x) - inner.p @ conj) - _KINKED_HEDGE_BOX * violation
        best_bound = max(best_bound, bound)
    return best_bound


def _repair_kink_weights(inner: _InnerProblem, base, kink, kink_full):
    """Kink-atom dual weights minimizing the cone violation (LP selection)."""
    if inner.k == 0:
        return None
    kink_idx = np.nonzero(kink)[0]
    n_kink = kink_idx.size
    g_kink = inner.g[:, kink_idx]
    v_base = inner.g @ base
    w_max = kink_full[kink_idx]
    k = inner.k
    # variables (w, t): minimize sum t  s.t.  (g_kink w)_j - t_j <= -v_base_j,
    # w <= w_max, t >= 0, w >= 0
    rows = np.hstack([g_kink, -np.eye(k)])
    cap = np.hstack([np.eye(n_kink), np.zeros((n_kink, k))])
    lp = LinearProgram.build(
        np.concatenate([np.zeros(n_kink), -np.ones(k)]),
        a_ub=np.vstack([rows, cap]),
        b_ub=np.concatenate([-v_base, w_max]),
    )
    try:
        out = solve_lp(lp)
    except SolverError:
        return None
    if out.status != "optimal":
        return None
    mu = base.copy()
    mu[kink_idx] += np.minimum(np.maximum(out.x[:n_kink], 0.0), w_max)
    return mu


def _exact_line_min(inner: _InnerProblem, c: float, lam: np.ndarray, d: np.ndarray, s_cap: float) -> float:
    """Exact minimizer of the shortfall along ``lam + s d`` on ``[0, s_cap]``.

    The section is piecewise smooth convex with breakpoints where atoms cross
    zero payoff; between breakpoints the derivative is monotone, so the
    minimum is located by a breakpoint sweep plus derivative bisection.
    """
    y = c + inner.g.T @ lam + inner.x
    v = inner.g.T @ d

    def derivative(s):
        ys = y + s * v
        mask = ys < 0
        return float(np.sum(inner.p[mask] * inner.loss.slope(-ys[mask]) * (-v[mask])))

    if derivative(0.0) >= 0.0:
        return 0.0
    crossings = [0.0]
    for yi, vi in zip(y, v):
        if abs(vi) > 1e-15:
            s = -yi / vi
            if 1e-15 < s < s_cap:
                crossings.append(float(s))
    crossings.append(s_cap)
    crossings.sort()
    for left, right in zip(crossings, crossings[1:]):
        if right - left < 1e-15:
            continue
        if derivative(right) < 0.0:
            continue
        lo, hi = left, right
        for _ in range(70):
            mid = 0.5 * (lo + hi)
            if derivative(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
    return s_cap


def _feasible_by_descent(inner: _InnerProblem, c: float, warm: dict) -> bool:
    """Convex feasibility of the hedged shortfall via descent to stationarity."""
    delta = inner.delta
    k = inner.k

    candidates = [np.zeros(k)]
    for key in ("lam", "superhedge"):
        lam = warm.get(key)
        if lam is not None and lam.shape == (k,):
            candidates.append(np.asarray(lam, dtype=float))

    best_lam, best = None, np.inf
    for lam in candidates:
        value = inner.value(c, lam)
        if value < best:
            best, best_lam = value, lam
        if value <= delta:
            warm["lam"] = lam
            return True

    # spec'd warm start: projected subgradient with diminishing steps
    lam = best_lam.copy()
    for step in range(1, _SUBGRADIENT_STEPS + 1):
        value, grad = inner.value_and_grad(c, lam)
        norm = np.linalg.norm(grad)
        if norm < 1e-14:
            break
        lam = np.clip(lam - grad / (norm * step), 0.0, _HEDGE_BOX)
        value = inner.value(c, lam)
        if value < best:
            best, best_lam = value, lam
        if value <= delta:
            warm["lam"] = lam
            return True

    # Projected Newton polish (active-set split, steepest-descent fallback).
    # Kinked losses stall at kinks; the directional-derivative LP then either
    # escapes or confirms there is nothing usable left in double precision.
    lam = best_lam.copy()
    stationary = False
    stall = 0
    previous = np.inf
    kinked = inner.loss.kinked_at_zero
    for iteration in range(_NEWTON_STEPS):
        value, grad = inner.value_and_grad(c, lam)
        if value < best:
            best, best_lam = value, lam
            if value <= delta:
                warm["lam"] = lam
                return True
        stall = stall + 1 if value >= previous - 1e-13 * (1.0 + abs(value)) else 0
        previous = value
        if stall >= 12:
            stationary = True
            break
        kkt = np.where(lam > 1e-12, np.abs(grad), np.maximum(-grad, 0.0))
        if kkt.max(initial=0.0) <= _KKT_TOL * (1.0 + abs(value)):
            stationary = True
            break
        if iteration % 10 == 9 and _dual_lower_bound(inner, c, lam) > delta:
            # infeasibility certified before full convergence
            warm["lam"] = best_lam
            return False

        if kinked:
            # kink-aware steepest direction with exact line minimization;
            # smooth curvature misleads at the kinks where optima sit
            slope, direction = _steepest_feasible_direction(inner, c, lam, zone_scale=1e-9)
            if slope >= -_STATIONARY_SLOPE * (1.0 + abs(value)):
                stationary = True
                break
            step = _exact_line_min(inner, c, lam, direction, _HEDGE_BOX)
            trial = np.clip(lam + step * direction, 0.0, _HEDGE_BOX)
            accepted = inner.value(c, trial) < value - 1e-14
        else:
            free = ~((lam <= 1e-12) & (grad > 0.0))
            direction = np.zeros(k)
            if free.any():
                g_free = grad[free]
                hess = inner.curvature(c, lam)[np.ix_(free, free)]
                reg = 1e-10 * (1.0 + float(np.trace(hess)))
                try:
                    d_free = -np.linalg.solve(hess + reg * np.eye(hess.shape[0]), g_free)
                except np.linalg.LinAlgError:
                    d_free = -g_free
                if d_free @ g_free >= 0.0:
                    d_free = -g_free
                direction[free] = d_free
            trial, accepted = lam, False
            for candidate_dir in (direction, -grad):
                step_size = 1.0
                for _ in range(55):
                    probe = np.clip(lam + step_size * candidate_dir, 0.0, _HEDGE_BOX)
                    if inner.value(c, probe) < value - 1e-12:
                        trial, accepted = probe, True
                        break
                    step_size *= 0.5
                if accepted:
                    break
            if not accepted:
                slope, kink_dir = _steepest_feasible_direction(inner, c, lam)
                if slope >= -_STATIONARY_SLOPE * (1.0 + abs(value)):
                    stationary = True
                    break
                step = _exact_line_min(inner, c, lam, kink_dir, _HEDGE_BOX)
                trial = np.clip(lam + step * kink_dir, 0.0, _HEDGE_BOX)
                accepted = inner.value(c, trial) < value - 1e-14
        if not accepted:
            # descent exists on paper but not in double precision
            stationary = True
            break
        lam = trial

    # Certify the verdict through the closed-form dual bound.
    lower = _dual_lower_bound(inner, c, best_lam)
    if lower > delta:
        warm["lam"] = best_lam
        return False
    if best <= delta:
        warm["lam"] = best_lam
        return True
    if best - max(lower, 0.0) <= 1e-8 * (1.0 + delta) or stationary:
        # within certification resolution of the boundary: decide by the value
        warm["lam"] = best_lam
        return best <= delta
    raise SolverError(
        f"shortfall inner solver could not certify c={c!r}: "
        f"best {best!r} vs dual bound {lower!r}",
        best=best,
    )


def shortfall_price(sm: ShortfallMeasure, x: Claim) -> float:
    """The raw shortfall price of holding ``x`` (no normalization applied)."""
    if x.space != sm.space:
        raise GoodDealError("claim lives on a different space")
    cost_x, hedge = superhedging_witness(sm.market, x)
    if cost_x is MINUS_INF:
        raise GoodDealError(
            "shortfall price is unbounded below: cash is attainable at zero cost"
        )
    cost_neg = superhedging_witness(sm.market, -x)[0]
    if not is_finite(cost_neg):
        raise GoodDealError("superhedging certificates unavailable for the bracket")
    inner = _InnerProblem(sm, x)
    linear = sm.loss.kind == "power" and sm.loss.exponent == 1.0
    warm: dict = {"superhedge": hedge}

    def predicate(c: float) -> bool:
        if inner.k == 0:
            return inner.value(c, np.zeros(0)) <= sm.delta
        if linear:
            return _feasible_by_lp(inner, c)
        return _feasible_by_descent(inner, c, warm)

    lo = -cost_neg - sm.loss.inverse(sm.delta) - 1.0
    hi = cost_x + 1.0
    return bisect(predicate, lo, hi, tol=sm.tol, expand=True)


@dataclass(frozen=True)
class NormalizedShortfall:
    """Shortfall prices shifted to price the zero claim at zero.

    Quacks like a risk measure (``space`` + ``evaluate``), so it feeds the
    same containment and certification harnesses as the penalty families.
    """

    sm: ShortfallMeasure
    price_at_zero: float

    @property
    def space(self):
        return self.sm.space

    def evaluate(self, x: Claim) -> float:
        return shortfall_price(self.sm, x) - self.price_at_zero


def normalized_shortfall(sm: ShortfallMeasure) -> NormalizedShortfall:
    zero = Claim(sm.space, np.zeros(sm.space.n_atoms))
    return NormalizedShortfall(sm=sm, price_at_zero=shortfall_price(sm, zero))
