import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forcelab.bases import (
    OMEGA,
    FiniteTree,
    IndexedBase,
    TowerTrunc,
    base_member,
    base_prec,
    canonical_member,
    canonical_successor,
    check_nice,
    check_simple_base,
    enumerate_members,
    get_base,
    large_certificate,
    resync_towers,
    tower_cover,
)
from forcelab.errors import CapacityError, InputError
from forcelab.gf2 import BitWord

W = BitWord.parse


def S(*digits):
    return frozenset(W(d) for d in digits)


def test_membership_examples():
    assert base_member("0", S("101"))
    assert base_member("per", S("00", "01", "11"))
    assert not base_member("per", S("00", "01"))
    assert not base_member("0", S("00", "01"))


def test_order_examples():
    assert base_prec("0", S("10"), S("101"))
    assert not base_prec("0", S("10"), S("111"))
    assert not base_prec("per", S("0", "1"), S("00", "01", "10", "11"))
    u = S("00", "01", "10")
    v = S("000", "001", "010", "011", "100", "101")
    # each node of u has both children in v
    for x in u:
        assert sum(1 for y in v if y.restrict(2) == x) >= 2
    assert {y.restrict(2) for y in v} == set(u)
    assert base_prec("per", u, v)
    assert not base_prec("per", u, v - {W("101")})


def test_canonical_helpers():
    assert canonical_member("0", 3) == S("000")
    assert canonical_member("per", 2) == S("00", "01", "10")
    succ = canonical_successor("per", S("00", "01", "10"), 3)
    assert base_prec("per", S("00", "01", "10"), succ)
    assert len(succ) == 6
    assert canonical_successor("0", S("1"), 3) == S("100")


def test_simple_base_checks_pass():
    assert check_simple_base("0", 5).ok
    assert check_simple_base("per", 5).ok


def test_planted_defect_fails_restriction_clause():
    rep = check_simple_base("defect", 4)
    assert not rep.ok
    assert {v["clause"] for v in rep.violations} >= {"a"}


def test_depth_cap():
    with pytest.raises(CapacityError):
        check_simple_base("0", 7)


def test_nice_examples():
    assert check_nice(IndexedBase.copies(6), 5).ok
    assert check_nice(IndexedBase.copies(OMEGA), 5).ok
    assert check_nice(IndexedBase.perfect(), 5).ok
    rep = check_nice(IndexedBase.copies(2), 5)
    assert [v["clause"] for v in rep.violations] == ["i"]


def test_indexed_base_parse_roundtrip():
    for spec in ["per", "omega", "6", "0,per", "omega:0,per"]:
        ib = IndexedBase.parse(spec)
        assert IndexedBase.from_json(ib.to_json()) == ib
    ib = IndexedBase.parse("omega:0,per")
    assert [ib.tag(i) for i in range(5)] == ["0", "per", "0", "per", "0"]
    with pytest.raises(InputError):
        IndexedBase(3, ("0",))


def test_per_successors_double_in_size():
    b = get_base("per")
    for ell in range(2, 5):
        for u in enumerate_members(b, ell, 4):
            for v in b.successors(u, ell + 1):
                assert b.prec_fn(u, v)
                assert len(v.nodes) >= 2 * len(u.nodes) >= 6


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.data())
def test_translation_equivariance(ell, data):
    b = get_base(data.draw(st.sampled_from(["0", "per"])))
    members = list(enumerate_members(b, ell, 3))
    u = data.draw(st.sampled_from(members))
    succ = list(b.successors(u, ell + 1))
    v = data.draw(st.sampled_from(succ))
    rho = data.draw(st.integers(0, (1 << (ell + 1)) - 1))
    assert b.prec_fn(u.translate(rho >> 1), v.translate(rho))


def test_finite_tree():
    t = FiniteTree(3, S("010", "011"))
    assert W("01") in t and W("0") in t and BitWord(0, 0) in t
    assert W("1") not in t
    assert t.level(2) == S("01")
    assert len(t.nodes()) == 5
    assert FiniteTree.from_json(t.to_json()) == t


def test_tower_cover_examples():
    tw = TowerTrunc("0", (S("01"),))
    assert tower_cover(tw, 3) == S("010", "011")
    tw = TowerTrunc("0", (S("0"), S("01"), S("011")))
    assert tower_cover(tw, 4) == S("0110", "0111")
    with pytest.raises(InputError):
        TowerTrunc("0", (S("0"), S("11")))
    with pytest.raises(InputError):
        tower_cover(tw, 2)


def _singleton_tower(word, lengths):
    return TowerTrunc("0", tuple(S(word[:l]) for l in lengths))


def test_resync_interleaved_singletons():
    a = _singleton_tower("101101", [1, 3, 5])
    b = _singleton_tower("011011", [2, 4, 6])
    out = resync_towers([a, b], 2)
    common = set(out[0].lengths) & set(out[1].lengths)
    assert len(common) >= 2
    for old, new in zip([a, b], out):
        assert new.levels[0] == old.levels[0]
        assert tower_cover(new, 6) == tower_cover(old, 6)
    with pytest.raises(CapacityError):
        resync_towers([a, b], 4)


def test_resync_identical_towers():
    a = _singleton_tower("1011", [1, 2, 3, 4])
    out = resync_towers([a, a], 2)
    assert out[0] == out[1]
    assert tower_cover(out[0], 4) == tower_cover(a, 4)


def test_resync_perfect_towers_keep_covers():
    u0 = S("00", "01", "10")
    u1 = canonical_successor("per", u0, 3)
    u2 = canonical_successor("per", u1, 5)
    v0 = S("000", "010", "100")
    v1 = canonical_successor("per", v0, 5)
    a = TowerTrunc("per", (u0, u1, u2))
    b = TowerTrunc("per", (v0, v1))
    out = resync_towers([a, b], 1)
    assert set(out[0].lengths) & set(out[1].lengths)
    assert tower_cover(out[0], 6) == tower_cover(a, 6)
    assert tower_cover(out[1], 6) == tower_cover(b, 6)


def test_certificate_identical_translates():
    t = FiniteTree(4, S(*[format(i, "04b") for i in range(0, 12)]))
    x = W("0110")
    cert = large_certificate([t], x, x, IndexedBase.copies(6), 4)
    assert cert is not None and len(cert.towers) == 6
    covers = [tower_cover(tw, 4) for tw in cert.towers]
    for c1, c2 in itertools.combinations(covers, 2):
        assert not c1 & c2
    tx = {w + x for w in t.level_n}
    for c in covers:
        assert c <= tx


def test_certificate_absent_when_disjoint():
    t = FiniteTree(3, S("000", "001"))
    assert large_certificate([t], W("000"), W("100"), IndexedBase.perfect(), 3) is None
