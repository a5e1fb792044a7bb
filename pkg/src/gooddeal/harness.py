"""Randomized theorem-equivalence harness.

Generates seeded random markets and penalty specifications and replays the
certified equivalences on them: valuations supported on consistent-measure
vertices must pass every exact condition and sit at a fixed point of the
indifference operator; penalties deliberately pushed outside the consistent
set must fail every exact condition.  Any disagreement between exactly
decided conditions is a bug, not a tolerance artifact, so generated
violations carry a margin well above the decision tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gdv import check_gdv, check_relevance
from .indifference import IndifferencePricer
from .market import Claim, MarketCone, Measure, Space, consistent_set, vertices
from .riskmeasure import FiniteListPenalty, RiskMeasure

OUTSIDE_MARGIN = 1e-3
FIXED_POINT_THRESHOLD = 1e-6


def random_space(rng: np.random.Generator, n_atoms: int) -> Space:
    p = rng.dirichlet(np.full(n_atoms, 2.0))
    p = np.maximum(p, 1e-3)
    p = p / p.sum()
    return Space(tuple(f"s{i}" for i in range(n_atoms)), p)


def random_market(rng: np.random.Generator, n_atoms: int, n_generators: int) -> MarketCone:
    space = random_space(rng, n_atoms)
    gens = tuple(Claim(space, rng.normal(size=n_atoms)) for _ in range(n_generators))
    return MarketCone(space, gens)


def random_consistent_market(rng: np.random.Generator, n_atoms: int, n_generators: int):
    """A random market whose consistent set is certified nonempty, with that set."""
    for _ in range(200):
        market = random_market(rng, n_atoms, n_generators)
        poly = consistent_set(market)
        if not poly.is_empty:
            return market, poly
    raise RuntimeError("failed to draw a market with consistent measures")


def random_claims(rng: np.random.Generator, space: Space, count: int, scale: float = 2.0):
    return [Claim(space, rng.normal(scale=scale, size=space.n_atoms)) for _ in range(count)]


def random_vertex_valuation(rng: np.random.Generator, poly) -> RiskMeasure:
    """Finite-list measure supported on consistent vertices: a valuation by construction."""
    verts = vertices(poly)
    count = int(rng.integers(1, len(verts) + 1))
    chosen = [verts[i] for i in rng.choice(len(verts), size=count, replace=False)]
    penalties = np.abs(rng.normal(scale=0.3, size=count))
    penalties[int(rng.integers(count))] = 0.0
    return RiskMeasure(poly.space, FiniteListPenalty(tuple(chosen), penalties))


def push_outside(rng: np.random.Generator, market: MarketCone, poly):
    """A simplex measure violating some market constraint by a safe margin, or None."""
    g = market.generator_matrix
    if g.size == 0 or g.max() < OUTSIDE_MARGIN:
        return None
    row, atom = np.unravel_index(np.argmax(g), g.shape)
    e = np.zeros(market.space.n_atoms)
    e[atom] = 1.0
    assert poly.violation(e) >= OUTSIDE_MARGIN
    return Measure(market.space, e)


def random_outside_valuation(rng: np.random.Generator, market: MarketCone, poly):
    """A finite-list spec with one support measure outside the consistent set."""
    outside = push_outside(rng, market, poly)
    if outside is None:
        return None
    verts = vertices(poly)
    keep = int(rng.integers(0, len(verts) + 1))
    chosen = [verts[i] for i in rng.choice(len(verts), size=keep, replace=False)] if keep else []
    measures = tuple(chosen) + (outside,)
    penalties = np.abs(rng.normal(scale=0.3, size=len(measures)))
    penalties[int(rng.integers(len(measures)))] = 0.0
    return RiskMeasure(market.space, FiniteListPenalty(measures, penalties))


@dataclass(frozen=True)
class FuzzReport:
    """Aggregate result of the equivalence harness; ``failures`` lists any break."""

    cases: int
    valuation_cases: int
    outside_cases: int
    relevance_checked: int
    failures: tuple

    @property
    def passed(self) -> bool:
        return not self.failures


def equivalence_fuzz(
    atoms: int = 4,
    generators: int = 3,
    seed: int = 0,
    iters: int = 50,
    fixed_point_claims: int = 100,
    check_relevance_consistency: bool = True,
) -> FuzzReport:
    """Replay the exact-condition equivalences on seeded random instances.

    Each iteration draws a market with consistent measures (atom and
    generator counts are drawn up to the given maxima), one valuation
    supported on its vertices and, where the market permits, one spec pushed
    outside the consistent set.  Exact conditions must unanimously pass for
    the former (with the indifference fixed point holding at ``1e-6``) and
    unanimously fail for the latter.
    """
    rng = np.random.default_rng(seed)
    failures = []
    valuation_cases = 0
    outside_cases = 0
    relevance_checked = 0
    for case in range(iters):
        n_atoms = int(rng.integers(2, max(atoms, 2) + 1))
        n_gens = int(rng.integers(0, max(generators, 0) + 1))
        market, poly = random_consistent_market(rng, n_atoms, n_gens)

        rho = random_vertex_valuation(rng, poly)
        cert = check_gdv(market, rho, trials=0, seed=seed + case)
        exact_ok = all(cert.condition_results[c] == "pass" for c in ("2", "3", "7"))
        pricer = IndifferencePricer.build(market, rho)
        claims = random_claims(rng, market.space, fixed_point_claims)
        residual = max(abs(pricer.price(x) - rho.evaluate(x)) for x in claims)
        if not (cert.verdict and exact_ok and residual <= FIXED_POINT_THRESHOLD):
            failures.append(
                {
                    "case": case,
                    "kind": "valuation",
                    "conditions": cert.condition_results,
                    "residual": residual,
                }
            )
        valuation_cases += 1

        if check_relevance_consistency:
            relevance = check_relevance(market, rho)
            if relevance.verdict == "not-relevant":
                z = relevance.witness_claim
                if z is None or rho.evaluate(-z) > 1e-9 or z.values.max() <= 0:
                    failures.append({"case": case, "kind": "relevance-witness"})
            relevance_checked += 1

        bad = random_outside_valuation(rng, market, poly)
        if bad is not None:
            cert_bad = check_gdv(market, bad, trials=0, seed=seed + case)
            statuses = [cert_bad.condition_results[c] for c in ("2", "3", "7")]
            if cert_bad.verdict or any(s == "pass" for s in statuses) or not any(
                s == "fail" for s in statuses
            ):
                failures.append(
                    {"case": case, "kind": "outside", "conditions": cert_bad.condition_results}
                )
            outside_cases += 1
    return FuzzReport(
        cases=iters,
        valuation_cases=valuation_cases,
        outside_cases=outside_cases,
        relevance_checked=relevance_checked,
        failures=tuple(failures),
    )
