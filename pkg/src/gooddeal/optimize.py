"""Concave maximization over measure polytopes, and scalar bisection.

The Frank-Wolfe engine evaluates suprema of concave objectives (dual risk
representations with nonlinear penalties) using only linear maximization over
the polytope.  When the vertex list is available it runs the away-step
variant over the vertex mixture, which converges linearly and leaves no
zigzag tail; above the vertex-enumeration cap it falls back to the classic
iteration with an LP oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BracketError, ConvergenceError, GoodDealError
from .market import MeasurePolytope, VertexCapError, vertices

DEFAULT_GAP_TOL = 1e-6
_LINESEARCH_ITERS = 70
_AWAY_MAX_ITER = 10_000
_ORACLE_MAX_ITER = 50_000


@dataclass(frozen=True)
class FrankWolfeResult:
    point: np.ndarray
    value: float
    gap: float
    iterations: int


def _line_search(gradient: Callable, q: np.ndarray, d: np.ndarray, gamma_max: float) -> float:
    """Maximize the concave section ``g(t) = f(q + t d)`` on ``[0, gamma_max]``.

    Uses bisection on the monotone derivative ``grad(q + t d) . d``.
    """
    if gradient(q + gamma_max * d) @ d >= 0.0:
        return gamma_max
    lo, hi = 0.0, gamma_max
    for _ in range(_LINESEARCH_ITERS):
        mid = 0.5 * (lo + hi)
        if gradient(q + mid * d) @ d > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _away_step_fw(value, gradient, vert_matrix, tol, max_iter, start):
    n_verts = vert_matrix.shape[0]
    weights = np.full(n_verts, 1.0 / n_verts)
    q = weights @ vert_matrix
    if start is not None:
        # A caller-provided point only short-circuits; mixture weights stay internal.
        g0 = gradient(start)
        gap0 = float((vert_matrix @ g0).max() - g0 @ start)
        if gap0 <= tol:
            return FrankWolfeResult(start, float(value(start)), gap0, 0)
    best_q, best_v = q, float(value(q))
    for iteration in range(max_iter):
        grad = gradient(q)
        scores = vert_matrix @ grad
        fw_idx = int(np.argmax(scores))
        gap = float(scores[fw_idx] - grad @ q)
        if gap <= tol:
            return FrankWolfeResult(q, float(value(q)), gap, iteration)
        active = np.nonzero(weights > 1e-15)[0]
        away_idx = int(active[np.argmin(scores[active])])

        d_fw = vert_matrix[fw_idx] - q
        d_away = q - vert_matrix[away_idx]
        if grad @ d_fw >= grad @ d_away or weights[away_idx] >= 1.0 - 1e-12:
            d, gamma_max, kind = d_fw, 1.0, "fw"
        else:
            w = weights[away_idx]
            d, gamma_max, kind = d_away, w / (1.0 - w), "away"
        if np.abs(d).max() <= 1e-16:
            return FrankWolfeResult(q, float(value(q)), gap, iteration)
        gamma = _line_search(gradient, q, d, gamma_max)
        if kind == "fw":
            weights *= 1.0 - gamma
            weights[fw_idx] += gamma
        else:
            weights *= 1.0 + gamma
            weights[away_idx] -= gamma
        weights = np.maximum(weights, 0.0)
        weights /= weights.sum()
        q = weights @ vert_matrix
        v = float(value(q))
        if v > best_v:
            best_q, best_v = q, v
    raise ConvergenceError(
        f"away-step iteration budget ({max_iter}) exceeded",
        best=FrankWolfeResult(best_q, best_v, np.inf, max_iter),
    )


def _oracle_fw(value, gradient, polytope, tol, max_iter, start):
    q = start if start is not None else polytope.witness.q.copy()
    best_q, best_v = q, float(value(q))
    for iteration in range(max_iter):
        grad = gradient(q)
        _, s = polytope.linear_maximum(grad)
        d = s.q - q
        gap = float(grad @ d)
        if gap <= tol:
            return FrankWolfeResult(q, float(value(q)), gap, iteration)
        gamma = _line_search(gradient, q, d, 1.0)
        q = q + gamma * d
        v = float(value(q))
        if v > best_v:
            best_q, best_v = q, v
    raise ConvergenceError(
        f"Frank-Wolfe iteration budget ({max_iter}) exceeded",
        best=FrankWolfeResult(best_q, best_v, np.inf, max_iter),
    )


def maximize_concave_over_polytope(
    value: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    polytope: MeasurePolytope,
    tol: float = DEFAULT_GAP_TOL,
    max_iter: Optional[int] = None,
    start: Optional[np.ndarray] = None,
) -> FrankWolfeResult:
    """Maximize a concave function over a measure polytope.

    ``value`` and ``gradient`` evaluate the objective and a supergradient at a
    weight vector.  The returned point carries a duality-gap bound ``gap <=
    tol``: the true supremum exceeds ``result.value`` by at most ``gap``.

    Raises ``GoodDealError`` on an empty polytope and ``ConvergenceError``
    (with the best iterate attached) if the iteration budget runs out.
    """
    if polytope.is_empty:
        raise GoodDealError("cannot maximize over an empty measure polytope")
    if start is not None and not polytope.contains(start, tol=1e-7):
        start = None
    try:
        verts = vertices(polytope)
    except VertexCapError:
        return _oracle_fw(value, gradient, polytope, tol, max_iter or _ORACLE_MAX_ITER, start)
    vert_matrix = np.vstack([v.q for v in verts])
    if vert_matrix.shape[0] == 1:
        q = vert_matrix[0]
        return FrankWolfeResult(q, float(value(q)), 0.0, 0)
    return _away_step_fw(value, gradient, vert_matrix, tol, max_iter or _AWAY_MAX_ITER, start)


def bisect(
    predicate: Callable[[float], bool],
    lo: float,
    hi: float,
    tol: float = 1e-8,
    expand: bool = False,
    max_expand: int = 60,
) -> float:
    """Locate the flip point of a monotone boolean predicate.

    The predicate must be false at ``lo`` and true at ``hi`` (monotone in
    between).  With ``expand=True`` a failing endpoint is pushed outward
    geometrically until the bracket holds; without it, a predicate already
    true at ``lo`` returns ``lo`` (boundary convention) and a predicate false
    at ``hi`` raises :class:`BracketError`.
    """
    if hi < lo:
        raise ValueError("bisect needs lo <= hi")
    span = max(hi - lo, 1.0)
    if predicate(lo):
        if not expand:
            return lo
        step, found = span, False
        for _ in range(max_expand):
            candidate = lo - step
            if not predicate(candidate):
                hi, lo, found = lo, candidate, True
                break
            lo, step = candidate, step * 2.0
        if not found:
            raise BracketError("no false endpoint found while expanding downward")
    if not predicate(hi):
        if not expand:
            raise BracketError("predicate is false at the upper endpoint")
        step, found = span, False
        for _ in range(max_expand):
            candidate = hi + step
            if predicate(candidate):
                lo, hi, found = hi, candidate, True
                break
            hi, step = candidate, step * 2.0
        if not found:
            raise BracketError("no true endpoint found while expanding upward")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
