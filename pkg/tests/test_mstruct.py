import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forcelab.bases import FiniteTree, IndexedBase
from forcelab.errors import BudgetExceeded, InputError
from forcelab.gf2 import BitWord
from forcelab.mstruct import (
    Catalog,
    MTuple,
    NdrkEngine,
    all_extensions,
    cone,
    derivative_chain,
    enumerate_catalog,
    extends,
    ndrk,
    ndrk_from_chain,
    restrict_m,
    translate_m,
    validate_mtuple,
)


def full_tree(d):
    return FiniteTree.from_bits(d, range(1 << d))


def small_catalog(seed=0, depth=4, nodes=4, iota=1, max_u=4):
    rng = random.Random(seed)
    return Catalog((FiniteTree.from_bits(depth, rng.sample(range(1 << depth), nodes)),),
                   IndexedBase.copies(iota), max_u=max_u, max_g=2)


@pytest.fixture(scope="module")
def enumerated():
    cat = small_catalog(1)
    members = enumerate_catalog(cat)
    return cat, members, derivative_chain(cat, members=members)


def two_node(ell=1, sigma=0, h=0, iota=1):
    return MTuple.make(ell, iota, [0, 1], {(0, 1): [(h, [sigma])] * iota})


def test_validate_pass_and_planted_defects():
    cat = Catalog((full_tree(3),), IndexedBase.copies(2), max_u=3, max_g=2)
    good = MTuple.make(2, 2, [0, 3], {(0, 3): [(0, [1]), (0, [2])]})
    assert validate_mtuple(good, cat).ok
    overlap = MTuple.make(2, 2, [0, 3], {(0, 3): [(0, [1]), (0, [1])]})
    assert [v["clause"] for v in validate_mtuple(overlap, cat).violations] == ["c"]
    sparse = Catalog((FiniteTree.from_bits(3, [0]),), IndexedBase.copies(1))
    bad = MTuple.make(2, 1, [0, 3], {(0, 3): [(0, [1])]})
    assert "e" in {v["clause"] for v in validate_mtuple(bad, sparse).violations}
    deep = MTuple.make(4, 2, [0, 3], {(0, 3): [(0, [1]), (0, [2])]})
    assert "depth" in {v["clause"] for v in validate_mtuple(deep, cat).violations}
    out_of_range = MTuple.make(2, 2, [0, 3], {(0, 3): [(5, [1]), (0, [2])]})
    assert "range" in {v["clause"] for v in validate_mtuple(out_of_range, cat).violations}


def test_translation_basics(enumerated):
    cat, members, _ = enumerated
    rng = random.Random(2)
    for m in rng.sample(members, 50):
        zero = BitWord.zero(m.ell)
        assert translate_m(m, zero) == m
        rho = BitWord(m.ell, rng.getrandbits(m.ell))
        assert translate_m(translate_m(m, rho), rho) == m
        assert validate_mtuple(translate_m(m, rho), cat).violations == validate_mtuple(m, cat).violations
        # longer rho acts through its restriction
        longer = rho.concat(BitWord(2, 3))
        assert translate_m(m, longer) == translate_m(m, rho)


def test_translation_is_bijection_on_catalog(enumerated):
    _, members, _ = enumerated
    pool = set(members)
    level3 = [m for m in members if m.ell == 3]
    for r in range(8):
        rho = BitWord(3, r)
        image = {translate_m(m, rho) for m in level3}
        assert image == set(level3) and image <= pool


def test_extends_examples():
    cat = Catalog((full_tree(4),), IndexedBase.copies(1), max_u=4, max_g=1)
    m = two_node()
    assert not extends(m, m)
    n = MTuple.make(2, 1, [0, 1, 2], {(0, 1): [(0, [0])], (0, 2): [(0, [1])], (1, 2): [(0, [1])]})
    assert validate_mtuple(n, cat).ok and extends(m, n)
    k = next(all_extensions(n, cat))
    assert validate_mtuple(k, cat).ok
    assert extends(n, k) and extends(m, k)
    two = Catalog((full_tree(4), full_tree(4)), IndexedBase.copies(1))
    wrong_h = MTuple.make(2, 1, [0, 1, 2], {(0, 1): [(0, [0])], (0, 2): [(1, [1])], (1, 2): [(1, [1])]})
    assert validate_mtuple(wrong_h, two).ok and not extends(m, wrong_h)


def test_restrict_m():
    m = MTuple.make(2, 1, [0, 1, 2], {(0, 1): [(0, [0])], (0, 2): [(0, [1])], (1, 2): [(0, [1])]})
    assert restrict_m(m, m.u) == m
    with pytest.raises(InputError):
        restrict_m(m, [0])
    with pytest.raises(InputError):
        restrict_m(m, [0, 3])
    sub = restrict_m(m, [0, 2])
    assert validate_mtuple(sub, Catalog((full_tree(3),), IndexedBase.copies(1))).ok
    assert sub.u == frozenset({0, 2})


def test_json_roundtrip():
    m = MTuple.make(3, 2, [0, 5], {(5, 0): [(1, [2, 3]), (0, [4])]})
    assert MTuple.from_json(m.to_json()) == m
    with pytest.raises(InputError):
        MTuple.from_json({"ell": 2, "iota": 1, "u": ["000"], "pairs": {}})


def test_ndrk_at_full_depth_is_zero():
    cat = Catalog((full_tree(3),), IndexedBase.copies(1), max_u=4)
    m = MTuple.make(3, 1, [0, 1], {(0, 1): [(0, [0])]})
    assert ndrk(m, cat) == 0


def test_ndrk_full_binary_matches_frozen_oracle():
    # value frozen from the cone oracle below
    cat = Catalog((full_tree(3),), IndexedBase.copies(1), max_u=3, max_g=1)
    m = two_node()
    assert ndrk(m, cat) == 1
    members = cone(m, cat)
    chain = derivative_chain(cat, members=members)
    assert ndrk_from_chain(m, chain) == 1
    eng = NdrkEngine(cat)
    for n in members[:400]:
        assert eng.ndrk(n) == ndrk_from_chain(n, chain)


def test_engine_agrees_with_derivative_chain(enumerated):
    cat, members, chain = enumerated
    eng = NdrkEngine(cat)
    for m in members:
        assert eng.ndrk(m) == ndrk_from_chain(m, chain)


def test_chain_shape(enumerated):
    cat, _, chain = enumerated
    for a, b in zip(chain, chain[1:]):
        assert b <= a
    assert len(chain) <= cat.depth + 1


def test_depth_one_chain():
    cat = Catalog((full_tree(1),), IndexedBase.copies(1), max_u=2)
    chain = derivative_chain(cat)
    assert len(chain[0]) > 0 and chain[1:] == [frozenset()]


def test_downward_closure(enumerated):
    cat, members, chain = enumerated
    for m in members:
        for n in all_extensions(m, cat):
            for k, stage in enumerate(chain):
                if n in stage:
                    assert m in stage, (m, n, k)


def test_restriction_never_lowers_rank(enumerated):
    cat, members, chain = enumerated
    for m in members:
        if len(m.u) < 3:
            continue
        r = ndrk_from_chain(m, chain)
        for k in range(2, len(m.u)):
            for sub in itertools.combinations(sorted(m.u), k):
                assert r <= ndrk_from_chain(restrict_m(m, sub), chain)


def test_translation_invariance_exhaustive(enumerated):
    cat, members, _ = enumerated
    eng = NdrkEngine(cat)
    rng = random.Random(4)
    for m in rng.sample(members, 40):
        r = eng.ndrk(m)
        for x in range(1 << m.ell):
            assert eng.ndrk(translate_m(m, BitWord(m.ell, x))) == r


def test_budget():
    cat = Catalog((full_tree(5),), IndexedBase.copies(1), max_u=4)
    with pytest.raises(BudgetExceeded):
        enumerate_catalog(cat, budget=1000)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_extends_is_strict_partial_order(seed):
    cat = small_catalog(seed % 7, depth=4, nodes=4, max_u=3)
    rng = random.Random(seed)
    low = [m for m in enumerate_catalog(cat, levels=[1, 2])]
    if not low:
        return
    m = rng.choice(low)
    above = list(itertools.islice(all_extensions(m, cat), 200))
    for n in above:
        assert extends(m, n) and not extends(n, m) and not extends(n, n)
        for k in itertools.islice(all_extensions(n, cat), 20):
            assert extends(m, k)
