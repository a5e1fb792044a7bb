"""Good-deal-valuation certification and relevance analysis.

A normalized convex risk measure prices claims inside the no-arbitrage
interval exactly when its penalty charges only consistent measures; this
module certifies that property together with relevance (strictly positive
ask for every nonzero nonnegative claim) and the market-level question of
whether every such measure is automatically relevant.

The exactness boundary is explicit.  Finite-support penalties (finite list,
worst case) receive LP certificates; smooth penalties receive a grid verdict
at a declared resolution together with a pricing-kernel search, and the
certificate's ``method`` field records which route decided.  A found witness
is always exact: it replays against the stated tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GoodDealError, SolverError
from .indifference import IndifferencePricer
from .lp import LinearProgram, solve_lp
from .market import (
    Claim,
    MarketCone,
    Measure,
    MeasurePolytope,
    consistent_set,
    has_equivalent_measure,
    vertices,
)
from .riskmeasure import (
    EntropicPenalty,
    FiniteListPenalty,
    QuadraticPenalty,
    RiskMeasure,
    WorstCasePenalty,
)
from .superhedge import dual_superhedge, superhedging_cost
from .sentinels import is_finite

MEMBERSHIP_TOL = 1e-9
CONTAINMENT_SLACK = 1e-8
FIXED_POINT_THRESHOLD = 1e-6
SCALE_GRID = np.logspace(-6.0, 6.0, 49)
DIRECTION_STEP = 1e-2

CONDITION_IDS = ("1", "2", "3", "4'", "5", "6", "7", "8")


@dataclass(frozen=True)
class GdvCertificate:
    """Outcome of :func:`check_gdv`.

    ``condition_results`` maps each equivalence-condition id to ``pass``,
    ``fail`` or ``not-decidable-exactly``; ids in ``exact`` were decided by a
    certificate rather than sampling, and all of those agree with ``verdict``.
    """

    verdict: bool
    condition_results: dict
    exact: tuple
    witness: Optional[dict] = None

    def __post_init__(self):
        exact_verdicts = {self.condition_results[c] for c in self.exact}
        if len(exact_verdicts) > 1:
            raise RuntimeError(
                f"exactly-decided conditions disagree: { {c: self.condition_results[c] for c in self.exact} }"
            )


@dataclass(frozen=True)
class RelevanceCertificate:
    """Outcome of :func:`check_relevance`.

    ``verdict`` is ``relevant``, ``not-relevant`` or ``undecided``.  A
    not-relevant verdict carries a replaying witness claim; a relevant one
    carries either a full-support zero-penalty kernel or the declared grid
    resolution.  ``method`` names the deciding route (``exact-lp``,
    ``kernel-certificate`` or ``grid``).
    """

    verdict: str
    method: str
    witness_claim: Optional[Claim] = None
    kernel: Optional[Measure] = None
    margin: Optional[float] = None


@dataclass(frozen=True)
class AllGdvsRelevantReport:
    """Whether every good-deal valuation of the market is relevant.

    True exactly when every atom carries strictly positive mass under every
    consistent measure (``margin`` is the smallest such mass); equivalently,
    every vertex of the consistent polytope has full support.  When false,
    ``witness_measure`` is a valuation that prices the claim paying on
    ``witness_atom`` at zero, hence is not relevant.
    """

    all_relevant: bool
    margin: float
    atom_floor: dict
    consistent_equals_equivalent: bool
    witness_atom: Optional[str] = None
    witness_measure: Optional[RiskMeasure] = None


# ---------------------------------------------------------------------------
# check_gdv
# ---------------------------------------------------------------------------


def _sup_over_cone(market: MarketCone, qvec: np.ndarray) -> bool:
    """True iff ``sup over zero-cost m of E_q[m]`` is zero (bounded)."""
    g = market.generator_matrix
    if g.shape[0] == 0:
        return True
    lp = LinearProgram.build(g @ qvec)
    out = solve_lp(lp)
    if out.status == "unbounded":
        return False
    if out.status != "optimal":
        raise SolverError(f"cone-supremum LP returned {out.status}")
    return out.value <= MEMBERSHIP_TOL


def _exact_conditions(market, rho, poly):
    """Exactly decidable equivalence conditions, with a witness on failure."""
    results: dict = {}
    witness = None
    pen = rho.penalty if isinstance(rho, RiskMeasure) else None

    if isinstance(rho, IndifferencePricer):
        # Output of the indifference operator: its dual representation is
        # supported inside the consistent set by construction, so the
        # representation conditions hold structurally once the offset is finite.
        ok = is_finite(rho.offset) and not poly.is_empty
        for c in ("2", "3", "4'", "7"):
            results[c] = "pass" if ok else "fail"
        if not ok:
            witness = {"reason": "degenerate offset or empty consistent set"}
        return results, tuple(results), witness

    if isinstance(pen, FiniteListPenalty):
        offending = None
        for m in pen.measures:
            if poly.violation(m.q) > MEMBERSHIP_TOL or not _sup_over_cone(market, m.q):
                offending = m
                break
        ok = offending is None
        for c in ("2", "3", "7"):
            results[c] = "pass" if ok else "fail"
        if offending is not None:
            witness = {"measure": offending, "reason": "support measure outside the consistent set"}
        return results, tuple(results), witness

    if isinstance(pen, WorstCasePenalty):
        offending = None
        for row in market.generator_matrix:
            value, arg = pen.polytope.linear_maximum(row)
            if value > MEMBERSHIP_TOL:
                offending = arg
                break
        ok = offending is None
        for c in ("2", "3", "7"):
            results[c] = "pass" if ok else "fail"
        if offending is not None:
            witness = {"measure": offending, "reason": "penalty polytope leaves the consistent set"}
        return results, tuple(results), witness

    if isinstance(pen, (QuadraticPenalty, EntropicPenalty)):
        # Finite penalty everywhere: the representation can only be supported
        # inside the consistent set when that set is the whole simplex.
        g = market.generator_matrix
        ok = g.size == 0 or g.max() <= 1e-12
        for c in ("2", "7"):
            results[c] = "pass" if ok else "fail"
        results["3"] = results["7"]
        if not ok:
            atom = int(np.unravel_index(np.argmax(g), g.shape)[1])
            e = np.zeros(market.space.n_atoms)
            e[atom] = 1.0
            witness = {
                "measure": Measure(market.space, e),
                "reason": "finite penalty on a measure outside the consistent set",
            }
        return results, tuple(results), witness

    return results, (), None


def check_gdv(market: MarketCone, rho, trials: int = 100, seed: int = 0) -> GdvCertificate:
    """Certify whether ``rho`` prices every claim inside the no-arbitrage bounds.

    ``rho`` may be a :class:`RiskMeasure`, an :class:`IndifferencePricer`, or
    any object with ``space``/``evaluate`` (sampling-only certification).
    ``trials`` controls the randomized corroboration of the conditions that
    have no finite certificate; ``trials=0`` skips sampling entirely.
    """
    if rho.space != market.space:
        raise GoodDealError("risk measure and market live on different spaces")
    poly = consistent_set(market)
    space = market.space
    n = space.n_atoms

    results = {c: "not-decidable-exactly" for c in CONDITION_IDS}
    zero = Claim(space, np.zeros(n))
    normalization = rho.evaluate(zero)
    if abs(normalization) > 1e-9:
        results["1"] = "fail"
        return GdvCertificate(
            verdict=False,
            condition_results=results,
            exact=("1",),
            witness={"claim": zero, "reason": f"not normalized: value at zero is {normalization!r}"},
        )

    exact_results, exact_ids, witness = _exact_conditions(market, rho, poly)
    results.update(exact_results)

    sampled_witness = None
    if trials > 0:
        rng = np.random.default_rng(seed)
        g = market.generator_matrix
        k = g.shape[0]
        for _ in range(trials):
            x = Claim(space, rng.normal(scale=2.0, size=n))
            ask, bid = rho.evaluate(-x), -rho.evaluate(x)
            upper = superhedging_cost(market, -x)
            lower_cost = superhedging_cost(market, x)
            if is_finite(upper) and is_finite(lower_cost):
                lo = -lower_cost
                if not (lo - CONTAINMENT_SLACK <= ask <= upper + CONTAINMENT_SLACK) or not (
                    lo - CONTAINMENT_SLACK <= bid <= upper + CONTAINMENT_SLACK
                ):
                    results["1"] = "fail"
                    sampled_witness = {"claim": x, "reason": "price escapes the no-arbitrage interval"}
                    break
            if not poly.is_empty:
                dual_upper = dual_superhedge(poly, -x)
                dual_lower = -dual_superhedge(poly, x)
                if not (dual_lower - CONTAINMENT_SLACK <= ask <= dual_upper + CONTAINMENT_SLACK):
                    results["5"] = "fail"
                    sampled_witness = {"claim": x, "reason": "price escapes the dual interval"}
                    break
            # condition 6 / 2 corroboration: zero-cost claims must price nonpositive
            lam = rng.uniform(0.0, 2.0, size=k)
            disposal = rng.uniform(0.0, 1.0, size=n)
            m = Claim(space, (g.T @ lam if k else np.zeros(n)) - disposal)
            if rho.evaluate(-m) > CONTAINMENT_SLACK:
                results["6"] = "fail"
                if "2" not in exact_ids:
                    results["2"] = "fail"
                sampled_witness = {"claim": m, "reason": "zero-cost claim priced positive"}
                break

    if isinstance(rho, RiskMeasure) and trials > 0 and not poly.is_empty:
        rng = np.random.default_rng(seed + 1)
        claims = [Claim(space, rng.normal(scale=2.0, size=n)) for _ in range(min(trials, 100))]
        try:
            pricer = IndifferencePricer.build(market, rho)
            if pricer.is_degenerate:
                results["4'"] = "fail"
            else:
                residual = max(abs(pricer.price(x) - rho.evaluate(x)) for x in claims)
                if residual > FIXED_POINT_THRESHOLD:
                    results["4'"] = "fail"
                # acceptance-set form: the measure must equal its hedged infimum
                shifted = max(
                    abs((pricer.price(x) + pricer.offset) - rho.evaluate(x)) for x in claims
                )
                if shifted > FIXED_POINT_THRESHOLD:
                    results["8"] = "fail"
        except GoodDealError:
            results["4'"] = "fail"

    if exact_ids:
        verdict = all(results[c] == "pass" for c in exact_ids)
        sampled_failed = any(
            results[c] == "fail" for c in CONDITION_IDS if c not in exact_ids
        )
        if verdict and sampled_failed:
            raise RuntimeError(
                "sampled corroboration contradicts exact certificates: "
                f"{results} (witness: {sampled_witness})"
            )
    else:
        verdict = not any(results[c] == "fail" for c in CONDITION_IDS)
    return GdvCertificate(
        verdict=verdict,
        condition_results=results,
        exact=exact_ids,
        witness=witness or sampled_witness,
    )


# ---------------------------------------------------------------------------
# extended market
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtendedMarket:
    """Membership oracles for the market extended by a pricing functional.

    ``contains`` tests the zero-cost set of the extended market (claims the
    functional prices at or below zero).  ``cone_contains`` tests the cone
    generated by that set, scanned over a logarithmic scale grid; the two can
    genuinely differ for non-homogeneous measures, which is why cone-based
    free-lunch notions are exposed read-only and never feed the relevance
    verdict.
    """

    market: MarketCone
    rho: object
    warning: Optional[str] = None

    def contains(self, x: Claim, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.rho.evaluate(-x) <= tol

    def cone_contains(self, x: Claim, tol: float = MEMBERSHIP_TOL) -> bool:
        return any(self.rho.evaluate(-(x * (1.0 / lam))) <= tol for lam in SCALE_GRID)


def extended_market(market: MarketCone, rho, precheck_trials: int = 20) -> ExtendedMarket:
    """Oracle handle for the market extended by ``rho``; warns if it is no GDV."""
    warning = None
    cert = check_gdv(market, rho, trials=precheck_trials, seed=0)
    if not cert.verdict:
        warning = "pricing functional is not a certified good-deal valuation; the extension may admit arbitrage"
    return ExtendedMarket(market=market, rho=rho, warning=warning)


# ---------------------------------------------------------------------------
# relevance
# ---------------------------------------------------------------------------


def _zero_penalty_kernel(rho, poly: MeasurePolytope) -> Optional[Measure]:
    """Full-support consistent measure with zero penalty, when one exists."""
    pen = rho.penalty if isinstance(rho, RiskMeasure) else None
    if isinstance(pen, WorstCasePenalty):
        return has_equivalent_measure(pen.polytope)
    if isinstance(pen, FiniteListPenalty):
        zero_idx = [i for i, c in enumerate(pen.penalties) if c <= 1e-12]
        if not zero_idx:
            return None
        support = np.vstack([pen.measures[i].q for i in zero_idx])
        # max-min over the hull of zero-penalty support measures
        k = len(zero_idx)
        n = rho.space.n_atoms
        a_ub = np.hstack([-support.T, np.ones((n, 1))])  # t <= (mu @ support)_w
        lp = LinearProgram.build(
            np.concatenate([np.zeros(k), [1.0]]),
            a_ub=a_ub,
            b_ub=np.zeros(n),
            a_eq=np.concatenate([np.ones(k), [0.0]]).reshape(1, -1),
            b_eq=[1.0],
            lower=[0.0] * k + [None],
        )
        out = solve_lp(lp)
        if out.status != "optimal" or out.value <= 1e-11:
            return None
        return Measure(rho.space, out.x[:k] @ support)
    if isinstance(pen, EntropicPenalty):
        reference = Measure(rho.space, rho.space.p.copy())
        return reference if poly.contains(reference.q) else None
    if isinstance(pen, QuadraticPenalty):
        candidate = np.array([0.0, 1.0])  # unique zero of the penalty
        if poly.contains(candidate) and candidate.min() > 0:
            return Measure(rho.space, candidate)
        return None
    return None


def _relevance_finite_list(rho) -> RelevanceCertificate:
    pen = rho.penalty
    support = np.vstack([m.q for m in pen.measures])
    n = rho.space.n_atoms
    lp = LinearProgram.build(
        np.ones(n), a_ub=support, b_ub=pen.penalties
    )
    out = solve_lp(lp)
    if out.status == "unbounded":
        z = np.maximum(out.ray, 0.0)
        witness = Claim(rho.space, z / max(z.max(), 1e-12))
    elif out.status == "optimal" and out.value > MEMBERSHIP_TOL:
        witness = Claim(rho.space, np.maximum(out.x, 0.0))
    else:
        kernel = _zero_penalty_kernel(rho, None)
        return RelevanceCertificate(
            verdict="relevant", method="exact-lp", kernel=kernel, margin=0.0
        )
    if rho.evaluate(-witness) > MEMBERSHIP_TOL:
        raise RuntimeError("relevance witness failed to replay; solver inconsistency")
    return RelevanceCertificate(verdict="not-relevant", method="exact-lp", witness_claim=witness)


def _relevance_worst_case(rho) -> RelevanceCertificate:
    poly = rho.penalty.polytope
    kernel = has_equivalent_measure(poly)
    if kernel is not None:
        return RelevanceCertificate(
            verdict="relevant",
            method="kernel-certificate",
            kernel=kernel,
            margin=float(kernel.q.min()),
        )
    # some atom carries zero mass under every measure of the polytope
    n = poly.space.n_atoms
    for atom in range(n):
        direction = np.zeros(n)
        direction[atom] = 1.0
        value, _ = poly.linear_maximum(direction)
        if value <= MEMBERSHIP_TOL:
            witness = Claim(poly.space, direction)
            if rho.evaluate(-witness) > MEMBERSHIP_TOL:
                raise RuntimeError("relevance witness failed to replay")
            return RelevanceCertificate(
                verdict="not-relevant", method="exact-lp", witness_claim=witness
            )
    raise RuntimeError(
        "no equivalent measure in the penalty polytope, yet every atom is chargeable; "
        "solver inconsistency"
    )


def _direction_grid(n: int, seed: int = 0):
    """Directions on the unit simplex: full mesh in low dimension, sampled above."""
    if n == 2:
        ts = np.arange(0.0, 1.0 + DIRECTION_STEP / 2, DIRECTION_STEP)
        return [np.array([t, 1.0 - t]) for t in ts]
    if n == 3:
        dirs = []
        ts = np.arange(0.0, 1.0 + DIRECTION_STEP / 2, DIRECTION_STEP)
        for a in ts:
            for b in np.arange(0.0, 1.0 - a + DIRECTION_STEP / 2, DIRECTION_STEP):
                dirs.append(np.array([a, b, max(1.0 - a - b, 0.0)]))
        return dirs
    rng = np.random.default_rng(seed)
    dirs = [np.eye(n)[i] for i in range(n)]
    dirs += list(rng.dirichlet(np.ones(n), size=2000))
    return dirs


def _relevance_grid(rho, poly: MeasurePolytope) -> RelevanceCertificate:
    """Declared-resolution scan over directions and scales for smooth measures.

    A scanned point with scale-relative value at most ``1e-9`` yields a
    not-relevant witness (rescaled into the absolute replay tolerance, which
    the convexity of the measure guarantees).  Otherwise a zero-penalty
    full-support kernel certifies relevance; failing both, the verdict is
    relevant at grid resolution with the smallest observed margin.
    """
    space = rho.space
    margin = np.inf
    for d in _direction_grid(space.n_atoms):
        if d.sum() <= 0:
            continue
        for s in SCALE_GRID:
            z = Claim(space, d * s)
            value = rho.evaluate(-z)
            if value <= MEMBERSHIP_TOL * min(s, 1.0):
                witness = z if s <= 1.0 else Claim(space, d * 1.0)
                if rho.evaluate(-witness) <= MEMBERSHIP_TOL:
                    return RelevanceCertificate(
                        verdict="not-relevant", method="grid", witness_claim=witness
                    )
                return RelevanceCertificate(verdict="undecided", method="grid")
            margin = min(margin, value / min(s, 1.0))
    kernel = _zero_penalty_kernel(rho, poly)
    if kernel is not None:
        return RelevanceCertificate(
            verdict="relevant",
            method="kernel-certificate",
            kernel=kernel,
            margin=float(kernel.q.min()),
        )
    return RelevanceCertificate(verdict="relevant", method="grid", margin=float(margin))


def check_relevance(market: MarketCone, rho) -> RelevanceCertificate:
    """Certify strict positivity of the ask price on nonzero nonnegative claims."""
    poly = consistent_set(market)
    pen = rho.penalty if isinstance(rho, RiskMeasure) else None
    if isinstance(pen, FiniteListPenalty):
        return _relevance_finite_list(rho)
    if isinstance(pen, WorstCasePenalty):
        return _relevance_worst_case(rho)
    return _relevance_grid(rho, poly)


# ---------------------------------------------------------------------------
# all GDVs relevant
# ---------------------------------------------------------------------------


def check_all_gdvs_relevant(market: MarketCone) -> AllGdvsRelevantReport:
    """Decide whether every good-deal valuation of this market is relevant.

    Requires an equivalent consistent measure to exist (otherwise no relevant
    valuation exists at all and the question is vacuous; an error names that
    failure).  On finite spaces the strict-positivity condition, the
    every-consistent-measure-is-equivalent condition and its compact variant
    coincide; both computations are performed and must agree.
    """
    poly = consistent_set(market)
    if has_equivalent_measure(poly) is None:
        raise GoodDealError(
            "no equivalent consistent pricing measure exists (the market admits a "
            "free lunch), so relevant valuations cannot exist at all"
        )
    space = market.space
    n = space.n_atoms
    atom_floor = {}
    for atom in range(n):
        direction = np.zeros(n)
        direction[atom] = -1.0
        value, _ = poly.linear_maximum(direction)
        atom_floor[space.atoms[atom]] = float(-value)
    margin = min(atom_floor.values())
    all_relevant = margin > 1e-11

    verts = vertices(poly)
    q_equals_qe = all(v.is_equivalent for v in verts)
    if q_equals_qe != all_relevant:
        raise RuntimeError(
            "atom-floor LPs and vertex supports disagree on the consistent set; "
            "solver inconsistency"
        )

    witness_atom = None
    witness_measure = None
    if not all_relevant:
        witness_atom = min(atom_floor, key=atom_floor.get)
        idx = space.atoms.index(witness_atom)
        penalties = np.array([v.q[idx] for v in verts])
        witness_measure = RiskMeasure(space, FiniteListPenalty(tuple(verts), penalties))
    return AllGdvsRelevantReport(
        all_relevant=all_relevant,
        margin=margin,
        atom_floor=atom_floor,
        consistent_equals_equivalent=q_equals_qe,
        witness_atom=witness_atom,
        witness_measure=witness_measure,
    )
