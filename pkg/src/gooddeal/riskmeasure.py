"""Normalized convex risk measures in dual (penalty) form.

A risk measure here is the supremum of ``E_Q[-x] - penalty(Q)`` over
probability measures ``Q``.  Four penalty families are supported:

``FiniteListPenalty``
    finitely many support measures with nonnegative penalties, the smallest
    of which is zero (normalization).  Off the stored points the penalty is
    extended by its lower convex envelope, computed by LP, which is the
    unique extension consistent with biconjugation.
``WorstCasePenalty``
    zero penalty on a measure polytope, infinite off it (coherent case).
``QuadraticPenalty``
    the two-atom family with penalty equal to the squared weight of the
    first atom; the canonical smooth noncoherent example.
``EntropicPenalty``
    relative entropy to the reference measure scaled by ``1/gamma``; the
    dual form of the exponential-utility certainty equivalent.

All measures here are finite on finite spaces; evaluation closed forms are
used where they exist and LPs otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import GoodDealError
from .lp import LinearProgram, solve_lp
from .market import Claim, Measure, MeasurePolytope, Space, VertexCapError, vertices
from .sentinels import PLUS_INF

NORMALIZATION_TOL = 1e-12
MEMBERSHIP_TOL = 1e-9


@dataclass(frozen=True)
class FiniteListPenalty:
    measures: tuple
    penalties: np.ndarray

    def __post_init__(self):
        penalties = np.atleast_1d(np.asarray(self.penalties, dtype=float))
        if len(self.measures) == 0:
            raise ValueError("finite-list penalty needs at least one measure")
        if penalties.shape[0] != len(self.measures):
            raise ValueError("penalty count does not match measure count")
        if penalties.min() < -NORMALIZATION_TOL:
            raise ValueError("penalties must be nonnegative")
        if penalties.min() > NORMALIZATION_TOL:
            raise ValueError(
                f"smallest penalty is {penalties.min()!r}; normalization requires a zero penalty"
            )
        object.__setattr__(self, "penalties", np.maximum(penalties, 0.0))
        object.__setattr__(self, "measures", tuple(self.measures))


@dataclass(frozen=True)
class WorstCasePenalty:
    polytope: MeasurePolytope

    def __post_init__(self):
        if self.polytope.is_empty:
            raise ValueError("worst-case penalty needs a nonempty measure polytope")


@dataclass(frozen=True)
class QuadraticPenalty:
    """Penalty ``c(Q) = Q(first atom)^2`` on a two-atom space."""


@dataclass(frozen=True)
class EntropicPenalty:
    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0):
            raise ValueError("entropic risk aversion must be strictly positive")


PenaltySpec = Union[FiniteListPenalty, WorstCasePenalty, QuadraticPenalty, EntropicPenalty]


def relative_entropy(q: np.ndarray, p: np.ndarray) -> float:
    """``sum q log(q/p)`` with the ``0 log 0 = 0`` convention."""
    q = np.asarray(q, dtype=float)
    mask = q > 0
    return float(np.sum(q[mask] * np.log(q[mask] / p[mask])))


@dataclass(frozen=True, eq=False)
class RiskMeasure:
    """A normalized convex risk measure on a finite space, given by its penalty."""

    space: Space
    penalty: PenaltySpec
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        pen = self.penalty
        if isinstance(pen, FiniteListPenalty):
            for m in pen.measures:
                if m.space != self.space:
                    raise GoodDealError("penalty support measure lives on a different space")
        elif isinstance(pen, WorstCasePenalty):
            if pen.polytope.space != self.space:
                raise GoodDealError("worst-case polytope lives on a different space")
        elif isinstance(pen, QuadraticPenalty):
            if self.space.n_atoms != 2:
                raise ValueError("the quadratic penalty family is defined on two-atom spaces")

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x: Claim) -> float:
        """The capital requirement ``sup_Q { E_Q[-x] - penalty(Q) }``."""
        if x.space != self.space:
            raise GoodDealError("claim lives on a different space")
        v = x.values
        pen = self.penalty
        if isinstance(pen, FiniteListPenalty):
            return float((self._support_matrix() @ (-v) - pen.penalties).max())
        if isinstance(pen, WorstCasePenalty):
            verts = self._worst_case_vertices()
            if verts is not None:
                return float((verts @ (-v)).max())
            value, _ = pen.polytope.linear_maximum(-v)
            return float(value)
        if isinstance(pen, QuadraticPenalty):
            a, b = -v[0], -v[1]
            t = min(max((a - b) / 2.0, 0.0), 1.0)
            return float(b + t * (a - b) - t * t)
        gamma = pen.gamma
        return float(np.logaddexp.reduce(np.log(self.space.p) - gamma * v) / gamma)

    def argmax_measure(self, x: Claim) -> Measure:
        """A measure attaining the defining supremum at ``x``."""
        v = x.values
        pen = self.penalty
        if isinstance(pen, FiniteListPenalty):
            idx = int(np.argmax(self._support_matrix() @ (-v) - pen.penalties))
            return pen.measures[idx]
        if isinstance(pen, WorstCasePenalty):
            _, q = pen.polytope.linear_maximum(-v)
            return q
        if isinstance(pen, QuadraticPenalty):
            a, b = -v[0], -v[1]
            t = min(max((a - b) / 2.0, 0.0), 1.0)
            return Measure(self.space, [t, 1.0 - t])
        w = np.log(self.space.p) - pen.gamma * v
        w = np.exp(w - w.max())
        return Measure(self.space, w / w.sum())

    # -- conjugate ----------------------------------------------------------

    def conjugate(self, q, tol: float = MEMBERSHIP_TOL):
        """The penalty value of a measure (``PLUS_INF`` off the effective domain)."""
        qvec = q.q if isinstance(q, Measure) else np.asarray(q, dtype=float)
        pen = self.penalty
        if isinstance(pen, FiniteListPenalty):
            return self._envelope_penalty(qvec, tol)
        if isinstance(pen, WorstCasePenalty):
            return 0.0 if pen.polytope.contains(qvec, tol) else PLUS_INF
        if isinstance(pen, QuadraticPenalty):
            return float(qvec[0] ** 2)
        return relative_entropy(qvec, self.space.p) / pen.gamma

    def penalty_gradient(self, qvec: np.ndarray) -> np.ndarray:
        """Gradient of the penalty for the smooth families (quadratic, entropic)."""
        pen = self.penalty
        if isinstance(pen, QuadraticPenalty):
            g = np.zeros_like(qvec)
            g[0] = 2.0 * qvec[0]
            return g
        if isinstance(pen, EntropicPenalty):
            safe = np.maximum(qvec, 1e-16)
            return (np.log(safe / self.space.p) + 1.0) / pen.gamma
        raise GoodDealError("penalty gradient defined only for smooth penalty families")

    @property
    def has_smooth_penalty(self) -> bool:
        return isinstance(self.penalty, (QuadraticPenalty, EntropicPenalty))

    @property
    def penalty_is_finite_everywhere(self) -> bool:
        """True when every probability measure carries finite penalty."""
        return self.has_smooth_penalty

    def _support_matrix(self) -> np.ndarray:
        m = self._cache.get("support")
        if m is None:
            m = np.vstack([meas.q for meas in self.penalty.measures])
            self._cache["support"] = m
        return m

    def _worst_case_vertices(self) -> Optional[np.ndarray]:
        if "wc_vertices" not in self._cache:
            try:
                verts = vertices(self.penalty.polytope)
                self._cache["wc_vertices"] = np.vstack([v.q for v in verts])
            except VertexCapError:
                self._cache["wc_vertices"] = None
        return self._cache["wc_vertices"]

    def _envelope_penalty(self, qvec: np.ndarray, tol: float):
        """Lower convex envelope of the point penalties at ``qvec`` (LP)."""
        pen = self.penalty
        k = len(pen.measures)
        support = self._support_matrix()
        lp = LinearProgram.build(
            -pen.penalties,
            a_eq=np.vstack([support.T, np.ones(k)]),
            b_eq=np.concatenate([qvec, [1.0]]),
        )
        out = solve_lp(lp)
        if out.status == "infeasible":
            return PLUS_INF
        if out.status != "optimal":
            raise GoodDealError(f"envelope LP returned {out.status}")
        return float(-out.value)


@dataclass(frozen=True)
class AxiomsReport:
    passed: bool
    n_samples: int
    violations: tuple


def axioms_check(rho, samples: int, seed: int, scale: float = 3.0, tol: float = 1e-8) -> AxiomsReport:
    """Randomized verification of the convex-risk-measure axioms.

    Draws claim pairs and asserts normalization, monotonicity, cash
    invariance and convexity; any violating sample is recorded in the report.
    Works for any object exposing ``space`` and ``evaluate``.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    space = rho.space
    n = space.n_atoms
    violations = []

    zero = rho.evaluate(Claim(space, np.zeros(n)))
    if abs(zero) > 1e-9:
        violations.append({"axiom": "normalization", "value": zero})

    for _ in range(samples):
        x = Claim(space, rng.uniform(-scale, scale, size=n))
        y = Claim(space, rng.uniform(-scale, scale, size=n))
        rx, ry = rho.evaluate(x), rho.evaluate(y)

        bigger = x + Claim(space, rng.uniform(0.0, scale, size=n))
        if rho.evaluate(bigger) > rx + tol:
            violations.append({"axiom": "monotonicity", "x": x.values, "y": bigger.values})

        c = float(rng.uniform(-scale, scale))
        if abs(rho.evaluate(x + c) - rx + c) > tol:
            violations.append({"axiom": "cash-invariance", "x": x.values, "c": c})

        lam = float(rng.uniform())
        mix = x * lam + y * (1.0 - lam)
        if rho.evaluate(mix) > lam * rx + (1.0 - lam) * ry + tol:
            violations.append({"axiom": "convexity", "x": x.values, "y": y.values, "lam": lam})

    return AxiomsReport(passed=not violations, n_samples=samples, violations=tuple(violations))


def entropic(space: Space, gamma: float) -> RiskMeasure:
    return RiskMeasure(space, EntropicPenalty(gamma))


def worst_case(polytope: MeasurePolytope) -> RiskMeasure:
    return RiskMeasure(polytope.space, WorstCasePenalty(polytope))


def quadratic_two_atom(space: Space) -> RiskMeasure:
    return RiskMeasure(space, QuadraticPenalty())


def finite_list(space: Space, measures, penalties) -> RiskMeasure:
    measures = tuple(m if isinstance(m, Measure) else Measure(space, m) for m in measures)
    return RiskMeasure(space, FiniteListPenalty(measures, penalties))
