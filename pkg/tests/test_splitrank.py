import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forcelab.errors import InputError, ModelInconsistency
from forcelab.splitrank import (
    INF,
    FiniteModel,
    Relation,
    RankEngine,
    bundled_model,
    block_of,
    default_blocks,
    rank_at_least,
    reference_rank,
    substitutes,
    validate_model,
)


def model(size, theta, *rels):
    return FiniteModel(size, theta, tuple(Relation(z, len(next(iter(ts))), frozenset(ts)) for z, ts in rels))


def random_model(rng, max_size=6):
    size = rng.randint(2, max_size)
    rels = []
    for z in range(rng.randint(0, 3)):
        arity = rng.randint(1, min(3, size))
        pool = list(itertools.combinations(range(size), arity))
        rels.append(Relation(z, arity, frozenset(rng.sample(pool, rng.randint(0, len(pool))))))
    return FiniteModel(size, rng.choice([2, 3]), tuple(rels))


def check_witness(eng, w):
    # re-verify the selected (zeta, k) by enumeration
    m = eng.model
    wt = eng.witness(w)
    a = wt.v
    rel = next(r for r in m.relations_of_arity(len(a)) if r.zeta == wt.zeta)
    assert a in rel.tuples
    subs = [x for x in range(m.size) if a[: wt.k] + (x,) + a[wt.k + 1:] in rel.tuples]
    if wt.rk == -1:
        assert len(subs) < m.theta
    else:
        for x in subs:
            if x not in a:
                assert not rank_at_least(eng.rank(set(a) | {x}), wt.rk)


def test_vacuous_rank_is_infinite():
    m = model(4, 2, (0, {(0, 1)}))
    assert RankEngine(m).rank({2, 3}) is INF
    with pytest.raises(ModelInconsistency):
        RankEngine(m).witness({2, 3})


def test_small_binary_example():
    m = model(3, 2, (0, {(0, 1)}))
    eng = RankEngine(m)
    assert eng.rank({0, 1}) == -1
    wt = eng.witness({0, 1})
    # both positions have one substitute; the least position is chosen
    assert (wt.zeta, wt.k) == (0, 0)


def test_rank_zero_and_higher():
    # every increasing pair holds on 4 points: substitutes are plentiful
    pairs = set(itertools.combinations(range(4), 2))
    m = model(4, 2, (0, pairs))
    eng = RankEngine(m)
    assert eng.rank({1, 2}) == reference_rank({1, 2}, m)
    assert eng.rank({0, 3}) is INF  # triples are vacuous


def test_empty_set_rejected():
    with pytest.raises(InputError):
        RankEngine(model(3, 2, (0, {(0, 1)}))).rank(set())


def test_validate_model():
    assert validate_model(model(3, 2, (0, {(0, 1), (1, 2)}))).ok
    bad = FiniteModel(3, 2, (Relation(4, 2, frozenset({(1, 0)})),))
    rep = validate_model(bad)
    assert not rep.ok and "zeta=4" in rep.violations[0]
    assert validate_model(FiniteModel(3, 2, ())).ok


def test_model_json_roundtrip():
    m = model(5, 3, (0, {(0, 1), (2, 4)}), (1, {(0, 1, 2)}))
    back = FiniteModel.from_json(m.to_json())
    assert back == m


def test_reference_agreement_random_models():
    rng = random.Random(11)
    for _ in range(300):
        m = random_model(rng)
        eng = RankEngine(m)
        w = rng.sample(range(m.size), rng.randint(1, m.size))
        r = eng.rank(w)
        assert r == reference_rank(w, m) or (r is INF and reference_rank(w, m) is INF)
        if r is not INF:
            check_witness(eng, w)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_raising_theta_never_raises_rank(seed):
    rng = random.Random(seed)
    m2 = random_model(rng, max_size=5)
    m3 = FiniteModel(m2.size, m2.theta + 1, m2.relations)
    w = rng.sample(range(m2.size), rng.randint(1, m2.size))
    lo, hi = RankEngine(m3).rank(w), RankEngine(m2).rank(w)
    if hi is not INF:
        assert lo is not INF and lo <= hi


def test_bundled_model_relabel_invariance():
    m = bundled_model()
    assert validate_model(m).ok
    blocks = default_blocks()
    where = block_of(blocks)
    eng = RankEngine(m)
    rng = random.Random(5)
    seen = set()
    for _ in range(60):
        bs = sorted(rng.sample(range(len(blocks)), rng.choice([5, 6])))
        v = [rng.choice(blocks[b]) for b in bs]
        u = [rng.choice(blocks[where[x]]) for x in v]
        r = eng.rank(v)
        seen.add(repr(r))
        assert r == eng.rank(u) or (r is INF and eng.rank(u) is INF)
        if r is not INF:
            a, b = eng.witness(v), eng.witness(u)
            assert (a.zeta, a.k) == (b.zeta, b.k)
    assert len(seen) >= 2


def test_substitutes_include_self():
    m = model(3, 2, (0, {(0, 1), (0, 2)}))
    assert substitutes((0, 1), 1, m.relations[0], m) == [1, 2]
