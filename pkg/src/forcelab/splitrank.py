"""Splitting rank on finite relational models.

"Uncountable" is replaced by "at least theta". Formulas are the relation
symbols applied to the increasing enumeration of a set, so a relation of
arity n only speaks about n-element sets.

rank(w) is -1 when stage 0 fails, otherwise the last stage before the first
failing one, or INF when no stage fails. Stages stop changing after
size - |w| + 1 steps because every successor stage adds a new element.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from forcelab.errors import InputError, ModelInconsistency


class _Infinity:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
Rank = Union[int, _Infinity]


def rank_at_least(r: Rank, d: int) -> bool:
    return r is INF or r >= d


def rank_to_json(r: Rank):
    return "inf" if r is INF else r


@dataclass(frozen=True)
class Relation:
    zeta: int
    arity: int
    tuples: frozenset


@dataclass(frozen=True)
class FiniteModel:
    size: int
    theta: int
    relations: tuple
    name: str = ""
    _by_arity: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.size < 1:
            raise InputError("model needs a nonempty universe")
        if self.theta < 2:
            raise InputError("theta must be at least 2")
        by = {}
        for rel in sorted(self.relations, key=lambda r: (r.arity, r.zeta)):
            by.setdefault(rel.arity, []).append(rel)
        self._by_arity.update(by)

    def relations_of_arity(self, n: int) -> list:
        return self._by_arity.get(n, [])

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "theta": self.theta,
            "relations": [
                {"zeta": r.zeta, "arity": r.arity, "tuples": [list(t) for t in sorted(r.tuples)]}
                for r in sorted(self.relations, key=lambda r: (r.arity, r.zeta))
            ],
        }

    @classmethod
    def from_json(cls, obj: dict, name: str = "") -> "FiniteModel":
        try:
            rels = tuple(
                Relation(int(r["zeta"]), int(r["arity"]), frozenset(tuple(int(x) for x in t) for t in r["tuples"]))
                for r in obj["relations"]
            )
            return cls(int(obj["size"]), int(obj.get("theta", 2)), rels, name)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad model file: {exc}") from None


@dataclass
class ModelReport:
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_model(model: FiniteModel) -> ModelReport:
    bad = []
    seen = set()
    for r in model.relations:
        key = (r.arity, r.zeta)
        if key in seen:
            bad.append(f"relation zeta={r.zeta} arity={r.arity} declared twice")
        seen.add(key)
        for t in sorted(r.tuples):
            if len(t) != r.arity:
                bad.append(f"relation zeta={r.zeta}: tuple {t} has length {len(t)} not {r.arity}")
            elif any(not 0 <= x < model.size for x in t):
                bad.append(f"relation zeta={r.zeta}: tuple {t} leaves the universe")
            elif any(t[j] >= t[j + 1] for j in range(len(t) - 1)):
                bad.append(f"relation zeta={r.zeta}: tuple {t} is not increasing")
    return ModelReport(bad)


def _norm(w: Iterable[int], model: FiniteModel) -> tuple:
    a = tuple(sorted(set(w)))
    if not a:
        raise InputError("rank needs a nonempty set")
    if a[0] < 0 or a[-1] >= model.size:
        raise InputError(f"set {list(a)} leaves the universe of size {model.size}")
    return a


def _holding(a: tuple, model: FiniteModel) -> list:
    return [r for r in model.relations_of_arity(len(a)) if a in r.tuples]


def _subst(a: tuple, k: int, x: int) -> tuple:
    return a[:k] + (x,) + a[k + 1:]


def substitutes(a: tuple, k: int, rel: Relation, model: FiniteModel) -> list:
    return [x for x in range(model.size) if _subst(a, k, x) in rel.tuples]


class RankEngine:
    """Memoized stage profiles; one engine per model."""

    def __init__(self, model: FiniteModel):
        self.model = model
        self._profile: dict = {}
        self.calls = 0

    def _stages(self, a: tuple) -> int:
        # number of leading stages that hold, capped at size - |a| + 2
        got = self._profile.get(a)
        if got is not None:
            return got
        self.calls += 1
        m = self.model
        top = m.size - len(a) + 2
        hold = _holding(a, m)
        if not hold:
            self._profile[a] = top
            return top
        for rel in hold:
            for k in range(len(a)):
                if len(substitutes(a, k, rel, m)) < m.theta:
                    self._profile[a] = 0
                    return 0
        inside = set(a)
        count = 1
        # stage d+1 needs, for each (rel, k), some new x with stage d for a + x
        while count < top:
            d = count - 1
            ok = True
            for rel in hold:
                for k in range(len(a)):
                    if not any(
                        x not in inside and self._stages(tuple(sorted(inside | {x}))) > d
                        for x in substitutes(a, k, rel, m)
                    ):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
            count += 1
        self._profile[a] = count
        return count

    def rank(self, w: Iterable[int]) -> Rank:
        a = _norm(w, self.model)
        s = self._stages(a)
        if s >= self.model.size - len(a) + 2:
            return INF
        return s - 1

    def witness(self, w: Iterable[int]) -> "RankWitness":
        a = _norm(w, self.model)
        r = self.rank(a)
        if r is INF:
            raise ModelInconsistency(f"rank of {list(a)} is INF; no witness exists")
        m = self.model
        inside = set(a)
        for rel in _holding(a, m):
            for k in range(len(a)):
                subs = substitutes(a, k, rel, m)
                if r == -1:
                    if len(subs) < m.theta:
                        return RankWitness(a, r, rel.zeta, k)
                elif not any(x not in inside and rank_at_least(self.rank(inside | {x}), r) for x in subs):
                    return RankWitness(a, r, rel.zeta, k)
        raise ModelInconsistency(f"no witness for {list(a)} at rank {r}")


@dataclass(frozen=True)
class RankWitness:
    v: tuple
    rk: Rank
    zeta: int
    k: int


_ENGINES: dict = {}


def engine_for(model: FiniteModel) -> RankEngine:
    eng = _ENGINES.get(id(model))
    if eng is None or eng.model is not model:
        eng = RankEngine(model)
        _ENGINES[id(model)] = eng
    return eng


def rank(w: Iterable[int], model: FiniteModel) -> Rank:
    return engine_for(model).rank(w)


def witness(w: Iterable[int], model: FiniteModel) -> RankWitness:
    return engine_for(model).witness(w)


def rank_info(w: Iterable[int], model: FiniteModel) -> tuple:
    """(rk, zeta, k) with zeta and k None when the rank is INF."""
    eng = engine_for(model)
    r = eng.rank(w)
    if r is INF:
        return (INF, None, None)
    wt = eng.witness(w)
    return (r, wt.zeta, wt.k)


# reference: the literal stage clauses, no memo

def reference_stage(a: tuple, d: int, model: FiniteModel) -> bool:
    hold = _holding(a, model)
    if d == 0:
        return all(len(substitutes(a, k, rel, model)) >= model.theta for rel in hold for k in range(len(a)))
    for rel in hold:
        for k in range(len(a)):
            if not any(
                x not in a and reference_stage(tuple(sorted(a + (x,))), d - 1, model)
                for x in substitutes(a, k, rel, model)
            ):
                return False
    return True


def reference_rank(w: Iterable[int], model: FiniteModel) -> Rank:
    a = _norm(w, model)
    top = model.size - len(a) + 2
    d = 0
    while d < top and reference_stage(a, d, model):
        d += 1
    if d == top:
        return INF
    return d - 1


# bundled synthetic model

THIN_BLOCKS = (2, 5, 9)
BLOCK_COUNT = 12
MODEL_ARITIES = (5, 6)


def default_blocks() -> list:
    """Universe layout: blocks of size 2 except a few singleton blocks."""
    blocks, nxt = [], 0
    for b in range(BLOCK_COUNT):
        width = 1 if b in THIN_BLOCKS else 2
        blocks.append(tuple(range(nxt, nxt + width)))
        nxt += width
    return blocks


def block_of(blocks: list) -> dict:
    return {x: b for b, xs in enumerate(blocks) for x in xs}


def default_model() -> FiniteModel:
    """Synthetic model: R_{n,0} holds on increasing n-tuples taking one element
    from each of n distinct blocks. Any relabelling that keeps every element
    in its block is an automorphism, so such relabellings preserve rank and
    witnesses. Thin blocks make rank -1 sets; others have rank 0 or INF."""
    blocks = default_blocks()
    rels = []
    for n in MODEL_ARITIES:
        tuples = set()
        for bs in itertools.combinations(range(len(blocks)), n):
            for pick in itertools.product(*(blocks[b] for b in bs)):
                tuples.add(pick)
        rels.append(Relation(0, n, frozenset(tuples)))
    return FiniteModel(sum(len(b) for b in blocks), 2, tuple(rels), name="synthetic-blocks")


_DEFAULT: Optional[FiniteModel] = None


def bundled_model() -> FiniteModel:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = default_model()
    return _DEFAULT


__all__ = [
    "INF",
    "Rank",
    "rank_at_least",
    "rank_to_json",
    "Relation",
    "FiniteModel",
    "ModelReport",
    "validate_model",
    "substitutes",
    "RankEngine",
    "RankWitness",
    "engine_for",
    "rank",
    "witness",
    "rank_info",
    "reference_stage",
    "reference_rank",
    "default_blocks",
    "block_of",
    "default_model",
    "bundled_model",
]
