"""Domain types for finite-state markets.

A market lives on a finite probability space whose reference measure charges
every atom.  Traded opportunities form a polyhedral cone of claims attainable
at zero cost (finitely many generators plus free disposal), and the pricing
side is the polytope of consistent measures: probabilities assigning
nonpositive value to every zero-cost claim.

All types are immutable after construction and all operations are pure, so
everything here is safe to evaluate concurrently.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, GoodDealError
from .lp import LinearProgram, solve_lp

PROBABILITY_TOL = 1e-12
FEASIBILITY_TOL = 1e-9
EQUIVALENCE_TOL = 1e-11
VERTEX_ATOM_CAP = 12
_VERTEX_COMBINATION_CAP = 300_000


class VertexCapError(GoodDealError):
    """Vertex enumeration was refused; callers should fall back to LP oracles."""


@dataclass(frozen=True, eq=False)
class Space:
    """Finite probability space: ordered atom labels plus reference weights."""

    atoms: tuple
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(str(a) for a in self.atoms))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if len(self.atoms) != p.shape[0]:
            raise ValueError("atom labels and probabilities differ in length")
        if len(self.atoms) == 0:
            raise ValueError("space needs at least one atom")
        if len(set(self.atoms)) != len(self.atoms):
            raise ValueError("atom labels must be distinct")
        if not np.all(np.isfinite(p)) or (p <= 0).any():
            raise ValueError("reference probabilities must be finite and strictly positive")
        if abs(p.sum() - 1.0) > PROBABILITY_TOL:
            raise ValueError(f"reference probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "p", p)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Space)
            and self.atoms == other.atoms
            and np.array_equal(self.p, other.p)
        )

    def __hash__(self) -> int:
        return hash((self.atoms, self.p.tobytes()))


def _check_same_space(a: Space, b: Space, what: str) -> None:
    if a != b:
        raise DimensionMismatchError(f"{what} built on a different space")


@dataclass(frozen=True, eq=False)
class Claim:
    """Payoff vector indexed by the atoms of a space (currency at horizon)."""

    space: Space
    values: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.values, dtype=float))
        if v.shape[0] != self.space.n_atoms:
            raise DimensionMismatchError(
                f"claim has {v.shape[0]} entries for a {self.space.n_atoms}-atom space"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("claim entries must be finite")
        object.__setattr__(self, "values", v)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Claim)
            and self.space == other.space
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.space, self.values.tobytes()))

    def __add__(self, other):
        if isinstance(other, Claim):
            _check_same_space(self.space, other.space, "claim")
            return Claim(self.space, self.values + other.values)
        return Claim(self.space, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Claim):
            _check_same_space(self.space, other.space, "claim")
            return Claim(self.space, self.values - other.values)
        return Claim(self.space, self.values - float(other))

    def __neg__(self):
        return Claim(self.space, -self.values)

    def __mul__(self, scalar):
        return Claim(self.space, self.values * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class Measure:
    """Probability weights on the atoms; the pricing-measure counterpart of P.

    Construction snaps components within ``1e-9`` of feasibility (tiny
    negative entries from LP output are clipped, the vector renormalized);
    anything further off is rejected.
    """

    space: Space
    q: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if q.shape[0] != self.space.n_atoms:
            raise DimensionMismatchError("measure dimension does not match space")
        if not np.all(np.isfinite(q)):
            raise ValueError("measure weights must be finite")
        if q.min() < -FEASIBILITY_TOL:
            raise ValueError(f"measure has negative weight {q.min()!r}")
        q = np.maximum(q, 0.0)
        total = q.sum()
        if abs(total - 1.0) > FEASIBILITY_TOL:
            raise ValueError(f"measure weights sum to {total!r}, not 1")
        if abs(total - 1.0) > PROBABILITY_TOL:
            q = q / total
        object.__setattr__(self, "q", q)

    @property
    def is_equivalent(self) -> bool:
        """True iff the measure charges every atom (equivalent to the reference)."""
        return bool(self.q.min() > 0.0)

    def expectation(self, x: Claim) -> float:
        _check_same_space(self.space, x.space, "claim")
        return float(self.q @ x.values)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Measure)
            and self.space == other.space
            and np.array_equal(self.q, other.q)
        )

    def __hash__(self) -> int:
        return hash((self.space, self.q.tobytes()))


@dataclass(frozen=True, eq=False)
class MarketCone:
    """Zero-cost attainable claims: cone of the generators minus free disposal.

    The represented set is ``cone(generators) - L_+``; it always contains the
    nonpositive orthant and the origin.  Zero generators are dropped and exact
    duplicates deduplicated at construction.
    """

    space: Space
    generators: tuple = ()

    def __post_init__(self):
        seen = []
        for g in self.generators:
            if not isinstance(g, Claim):
                g = Claim(self.space, g)
            _check_same_space(self.space, g.space, "generator")
            if not g.values.any():
                continue
            if any(np.array_equal(g.values, h.values) for h in seen):
                continue
            seen.append(g)
        object.__setattr__(self, "generators", tuple(seen))

    @property
    def generator_matrix(self) -> np.ndarray:
        """Generators stacked as rows, shape ``(k, n_atoms)``."""
        if not self.generators:
            return np.zeros((0, self.space.n_atoms))
        return np.vstack([g.values for g in self.generators])

    def containment_witness(self, x: Claim, tol: float = FEASIBILITY_TOL) -> Optional[np.ndarray]:
        """Weights ``lam >= 0`` with ``sum(lam_j g_j) >= x`` componentwise, or None."""
        _check_same_space(self.space, x.space, "claim")
        n = self.space.n_atoms
        g = self.generator_matrix
        if g.shape[0] == 0:
            return np.zeros(0) if (x.values <= tol).all() else None
        lp = LinearProgram.build(
            -np.ones(g.shape[0]),
            a_ub=-g.T,
            b_ub=-(x.values - tol),
        )
        out = solve_lp(lp)
        if out.status == "optimal":
            return out.x
        return None


def cone_contains(market: MarketCone, x: Claim, tol: float = FEASIBILITY_TOL) -> bool:
    """Membership oracle for the market cone (LP feasibility)."""
    return market.containment_witness(x, tol) is not None


@dataclass(frozen=True, eq=False)
class MeasurePolytope:
    """Consistent pricing measures in H-representation.

    The set ``{q >= 0, sum(q) = 1, q . g <= 0 for each constraint row g}``.
    ``is_empty`` is certified by an LP feasibility solve at construction time
    (see :func:`consistent_set`); ``witness`` is a feasible point when one
    exists.
    """

    space: Space
    constraints: np.ndarray
    is_empty: bool
    witness: Optional[Measure]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def contains(self, q: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        q = np.asarray(q, dtype=float)
        if q.shape[0] != self.space.n_atoms:
            raise DimensionMismatchError("weight vector does not match space")
        if q.min() < -tol or abs(q.sum() - 1.0) > tol:
            return False
        if self.constraints.size and (self.constraints @ q).max() > tol:
            return False
        return True

    def violation(self, q: np.ndarray) -> float:
        """Largest constraint violation of ``q`` (negative means strictly inside)."""
        q = np.asarray(q, dtype=float)
        worst = max(float(-q.min()), abs(float(q.sum()) - 1.0))
        if self.constraints.size:
            worst = max(worst, float((self.constraints @ q).max()))
        return worst

    def linear_maximum(self, direction: np.ndarray):
        """Maximize ``direction . q`` over the polytope; ``(value, argmax)``."""
        if self.is_empty:
            raise GoodDealError("cannot optimize over an empty measure polytope")
        direction = np.asarray(direction, dtype=float)
        n = self.space.n_atoms
        lp = LinearProgram.build(
            direction,
            a_ub=self.constraints if self.constraints.size else None,
            b_ub=np.zeros(self.constraints.shape[0]) if self.constraints.size else None,
            a_eq=np.ones((1, n)),
            b_eq=[1.0],
        )
        out = solve_lp(lp)
        if out.status != "optimal":
            raise GoodDealError(f"linear maximization over polytope returned {out.status}")
        return out.value, Measure(self.space, out.x)


def consistent_set(market: MarketCone) -> MeasurePolytope:
    """H-representation of the consistent pricing measures of a market.

    Emptiness is decided by a single LP feasibility solve; an empty polytope
    is a valid result (it certifies that cash is super-replicable from zero).
    """
    n = market.space.n_atoms
    g = market.generator_matrix
    lp = LinearProgram.build(
        np.zeros(n),
        a_ub=g if g.size else None,
        b_ub=np.zeros(g.shape[0]) if g.size else None,
        a_eq=np.ones((1, n)),
        b_eq=[1.0],
    )
    out = solve_lp(lp)
    if out.status == "optimal":
        return MeasurePolytope(market.space, g, False, Measure(market.space, out.x))
    return MeasurePolytope(market.space, g, True, None)


def vertices(polytope: MeasurePolytope, atom_cap: int = VERTEX_ATOM_CAP) -> list:
    """Exact vertex list of the polytope; empty list iff the polytope is empty.

    Enumerates active-constraint subsets, which is exponential in the worst
    case; refuses spaces above ``atom_cap`` atoms so callers fall back to the
    LP oracle instead.
    """
    if polytope.is_empty:
        return []
    cached = polytope._cache.get("vertices")
    if cached is not None:
        return list(cached)
    n = polytope.space.n_atoms
    if n > atom_cap:
        raise VertexCapError(f"vertex enumeration capped at {atom_cap} atoms (space has {n})")
    rows = [np.eye(n)[i] * -1.0 for i in range(n)]  # -q_i <= 0
    rows += [polytope.constraints[r] for r in range(polytope.constraints.shape[0])]
    if math.comb(len(rows), n - 1) > _VERTEX_COMBINATION_CAP:
        raise VertexCapError("active-set enumeration would exceed the combination budget")
    ones = np.ones(n)
    found: list[np.ndarray] = []
    for combo in itertools.combinations(range(len(rows)), n - 1):
        a = np.vstack([ones] + [rows[k] for k in combo]) if combo else ones.reshape(1, n)
        b = np.zeros(n)
        b[0] = 1.0
        try:
            q = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            continue
        if polytope.violation(q) > FEASIBILITY_TOL:
            continue
        if any(np.abs(q - v).max() <= 1e-9 for v in found):
            continue
        found.append(q)
    result = [Measure(polytope.space, q) for q in found]
    polytope._cache["vertices"] = tuple(result)
    return result


def has_equivalent_measure(polytope: MeasurePolytope) -> Optional[Measure]:
    """A consistent measure of maximal minimum weight, when one charges every atom.

    Solves ``max t  s.t.  q(w) >= t for all atoms, q in the polytope`` and
    returns the maximizer iff the optimum is strictly positive.
    """
    if polytope.is_empty:
        return None
    n = polytope.space.n_atoms
    k = polytope.constraints.shape[0]
    # variables: (q_1..q_n, t); rows: t - q_i <= 0, then generator rows.
    a_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
    if k:
        a_ub = np.vstack([a_ub, np.hstack([polytope.constraints, np.zeros((k, 1))])])
    b_ub = np.zeros(n + k)
    objective = np.zeros(n + 1)
    objective[-1] = 1.0
    a_eq = np.concatenate([np.ones(n), [0.0]]).reshape(1, -1)
    lp = LinearProgram.build(
        objective, a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=[1.0], lower=[0.0] * n + [None]
    )
    out = solve_lp(lp)
    if out.status != "optimal":
        raise GoodDealError(f"max-min LP over nonempty polytope returned {out.status}")
    if out.value <= EQUIVALENCE_TOL:
        return None
    return Measure(polytope.space, out.x[:n])


def full_simplex(space: Space) -> MeasurePolytope:
    """The unconstrained measure polytope (every probability measure)."""
    witness = Measure(space, space.p.copy())
    return MeasurePolytope(space, np.zeros((0, space.n_atoms)), False, witness)
