"""Market-core tests: spaces, cones, consistent measure polytopes."""

import numpy as np
import pytest

from gooddeal.errors import DimensionMismatchError
from gooddeal.market import (
    Claim,
    MarketCone,
    Measure,
    Space,
    cone_contains,
    consistent_set,
    full_simplex,
    has_equivalent_measure,
    vertices,
)


@pytest.fixture
def two_atoms():
    return Space(("w1", "w2"), [0.5, 0.5])


def frictionless(space):
    return MarketCone(space, ())


def test_space_validation():
    with pytest.raises(ValueError):
        Space(("a", "b"), [0.5, 0.6])
    with pytest.raises(ValueError):
        Space(("a", "b"), [1.0, 0.0])
    with pytest.raises(ValueError):
        Space(("a", "a"), [0.5, 0.5])


def test_claim_validation(two_atoms):
    with pytest.raises(ValueError):
        Claim(two_atoms, [np.nan, 0.0])
    with pytest.raises(DimensionMismatchError):
        Claim(two_atoms, [1.0, 2.0, 3.0])


def test_measure_snaps_lp_noise(two_atoms):
    m = Measure(two_atoms, [1.0 + 5e-10, -5e-10])
    assert m.q.min() >= 0.0
    assert m.q.sum() == pytest.approx(1.0, abs=1e-12)
    assert not m.is_equivalent
    assert Measure(two_atoms, [0.3, 0.7]).is_equivalent


def test_cone_membership_trivia(two_atoms):
    m = frictionless(two_atoms)
    assert cone_contains(m, Claim(two_atoms, [-1.0, -2.0]))
    assert not cone_contains(m, Claim(two_atoms, [1.0, 0.0]))
    assert cone_contains(m, Claim(two_atoms, [0.0, 0.0]))


def test_cone_membership_with_generator(two_atoms):
    m = MarketCone(two_atoms, (Claim(two_atoms, [1.0, 0.0]),))
    assert cone_contains(m, Claim(two_atoms, [3.0, -5.0]))  # lam = 3 dominates
    assert not cone_contains(m, Claim(two_atoms, [0.0, 1.0]))


def test_cone_positive_homogeneity_sampled(two_atoms):
    rng = np.random.default_rng(7)
    m = MarketCone(two_atoms, (Claim(two_atoms, [1.0, -0.5]),))
    for _ in range(25):
        lam = rng.uniform(0, 2, size=1)
        x = Claim(two_atoms, lam[0] * np.array([1.0, -0.5]) - rng.uniform(0, 1, size=2))
        assert cone_contains(m, x)
        for scale in rng.uniform(0.1, 10.0, size=3):
            assert cone_contains(m, x * scale)


def test_generator_normalization(two_atoms):
    m = MarketCone(
        two_atoms,
        (
            Claim(two_atoms, [0.0, 0.0]),
            Claim(two_atoms, [1.0, 0.0]),
            Claim(two_atoms, [1.0, 0.0]),
        ),
    )
    assert len(m.generators) == 1


def test_consistent_set_full_simplex(two_atoms):
    q = consistent_set(frictionless(two_atoms))
    assert not q.is_empty
    verts = sorted(v.q.tolist() for v in vertices(q))
    assert verts == [[0.0, 1.0], [1.0, 0.0]]


def test_consistent_set_single_point(two_atoms):
    # one generator paying 1 on the first atom: consistent measures put no mass there
    m = MarketCone(two_atoms, (Claim(two_atoms, [1.0, 0.0]),))
    q = consistent_set(m)
    assert not q.is_empty
    verts = vertices(q)
    assert len(verts) == 1
    np.testing.assert_allclose(verts[0].q, [0.0, 1.0], atol=1e-9)


def arrow_debreu_market(space=None):
    space = space or Space(("w0", "w1"), [0.5, 0.5])
    ask, bid = 0.6, 0.4
    unit = np.array([0.0, 1.0])
    return MarketCone(
        space,
        (Claim(space, unit - ask), Claim(space, bid - unit)),
    )


def test_consistent_set_arrow_debreu():
    q = consistent_set(arrow_debreu_market())
    verts = sorted((v.q.tolist() for v in vertices(q)))
    np.testing.assert_allclose(verts, [[0.4, 0.6], [0.6, 0.4]], atol=1e-9)


def test_vertices_satisfy_constraints_on_random_markets():
    rng = np.random.default_rng(11)
    for _ in range(40):
        n = int(rng.integers(2, 5))
        space = Space(tuple(f"s{i}" for i in range(n)), np.full(n, 1.0 / n))
        gens = tuple(
            Claim(space, rng.normal(size=n)) for _ in range(int(rng.integers(0, 4)))
        )
        poly = consistent_set(MarketCone(space, gens))
        for v in vertices(poly):
            assert poly.violation(v.q) <= 1e-9


def test_equivalent_measure_on_simplex(two_atoms):
    q = full_simplex(two_atoms)
    m = has_equivalent_measure(q)
    assert m is not None
    assert m.q.min() == pytest.approx(0.5, abs=1e-9)
    assert q.contains(m.q)


def test_equivalent_measure_absent(two_atoms):
    m = MarketCone(two_atoms, (Claim(two_atoms, [1.0, 0.0]),))
    assert has_equivalent_measure(consistent_set(m)) is None


def test_equivalent_measure_arrow_debreu():
    m = has_equivalent_measure(consistent_set(arrow_debreu_market()))
    assert m is not None
    assert m.q.min() > 0.0
    np.testing.assert_allclose(m.q, [0.5, 0.5], atol=1e-9)


def test_emptiness_duality_cross_check():
    """Consistent set is empty exactly when the cash claim is attainable at zero cost."""
    rng = np.random.default_rng(23)
    seen_empty = 0
    for _ in range(60):
        n = int(rng.integers(2, 5))
        space = Space(tuple(f"s{i}" for i in range(n)), np.full(n, 1.0 / n))
        gens = tuple(
            Claim(space, rng.normal(loc=rng.uniform(-0.3, 0.8), size=n))
            for _ in range(int(rng.integers(0, 4)))
        )
        market = MarketCone(space, gens)
        q_empty = consistent_set(market).is_empty
        one_in_m = cone_contains(market, Claim(space, np.ones(n)))
        assert q_empty == one_in_m
        seen_empty += q_empty
    assert seen_empty > 0  # the sample must exercise both branches


def test_empty_polytope_vertices(two_atoms):
    m = MarketCone(two_atoms, (Claim(two_atoms, [1.0, 1.0]),))
    poly = consistent_set(m)
    assert poly.is_empty
    assert vertices(poly) == []
