"""Finite stages of the constructible hierarchy over a finite transitive u.

Stages are computed as closures of the atomically definable subsets under
the Boolean operations.  Over a finite transitive stage every subset is a
finite union of singletons ``{x | x = a}``, so the closure is the full
power set; the tests confirm this against a brute-force formula search.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .hfset import EMPTY, HFSet, OmegaSet, Symbolic, hf, set_to_sexpr
from .ordinal import Ord


class NotTransitive(ValueError):
    pass


class MissingMarkers(ValueError):
    pass


class NotInHierarchy(ValueError):
    pass


class EmptySet(ValueError):
    pass


ZERO_SET = EMPTY
ONE_SET = hf(EMPTY)


@dataclass(frozen=True)
class RankedElem:
    """An element together with its constructible rank."""

    stage: int
    set: HFSet

    def __repr__(self):
        return f"<{self.stage},{set_to_sexpr(self.set)}>"


def definable_subsets(stage: Sequence[HFSet]) -> list[int]:
    """Bitmasks (over ``stage``) of the subsets definable over (stage, in).

    The sets defined by the atoms ``x in p`` and ``x = p`` generate a
    Boolean algebra; its members are exactly the unions of the classes of
    elements that no generator separates.
    """
    index = {a: i for i, a in enumerate(stage)}
    gens = []
    for p in stage:
        gens.append(1 << index[p])
        gens.append(sum(1 << index[x] for x in p.elems if x in index))
    classes: dict[tuple, int] = {}
    for i in range(len(stage)):
        sig = tuple(g >> i & 1 for g in gens)
        classes[sig] = classes.get(sig, 0) | (1 << i)
    blocks = list(classes.values())
    out = []
    for choice in range(1 << len(blocks)):
        m = 0
        for j, b in enumerate(blocks):
            if choice >> j & 1:
                m |= b
        out.append(m)
    return sorted(out)


class StageUniverse:
    """The stages L_0 = u, L_1, ..., L_n together with ranks and the stage order."""

    def __init__(self, u: HFSet, enumeration: Sequence[HFSet], depth: int):
        if not u.is_transitive():
            raise NotTransitive(repr(u))
        if ZERO_SET not in u or ONE_SET not in u:
            raise MissingMarkers(repr(u))
        if sorted(enumeration) != sorted(u.elems) or len(set(enumeration)) != len(u):
            raise ValueError("enumeration must list u without repetition")
        self.u = u
        self.enumeration = tuple(enumeration)
        self.depth = depth
        self._enum_index = {a: i for i, a in enumerate(self.enumeration)}
        stages = [frozenset(u.elems)]
        for _ in range(depth):
            prev = sorted(stages[-1])
            subsets = definable_subsets(prev)
            stages.append(frozenset(
                HFSet(prev[i] for i in range(len(prev)) if m >> i & 1) for m in subsets))
        self.stages = tuple(stages)
        self._rank = lru_cache(maxsize=None)(self._rank_uncached)
        self._sorted = {}

    # ranks

    def _rank_uncached(self, a: HFSet) -> int:
        if a in self._enum_index:
            return 0
        need = 0
        for x in a.elems:
            need = max(need, 0 if x in self._enum_index else self._rank(x) + 1)
        return need

    def ext_rank(self, a: HFSet) -> int:
        """Rank of any hereditarily finite set: least m with a in L_(m+1).

        Defined beyond the computed stages; over finite u every stage is the
        power set of the previous one, so this is a closed recursion.
        """
        return self._rank(a)

    def in_stage(self, a: HFSet, m: int) -> bool:
        if m <= self.depth:
            return a in self.stages[m]
        return a in self._enum_index or self.ext_rank(a) < m

    def rank_of(self, a: HFSet) -> int:
        if a not in self.stages[self.depth]:
            raise NotInHierarchy(repr(a))
        return self.ext_rank(a)

    def ranked(self, a: HFSet) -> RankedElem:
        return RankedElem(self.ext_rank(a), a)

    # the stage order

    def order_key(self, a: RankedElem | HFSet):
        s = a.set if isinstance(a, RankedElem) else a
        r = self.ext_rank(s)
        if s in self._enum_index:
            return (r, 0, self._enum_index[s])
        return (r, 1, s.key)

    def stage_elems(self, m: int) -> list[RankedElem]:
        """The ranked stage 𝐋_m, sorted by the stage order."""
        if m not in self._sorted:
            if m > self.depth:
                raise NotInHierarchy(f"stage {m} beyond depth {self.depth}")
            elems = [self.ranked(a) for a in self.stages[m]]
            elems.sort(key=self.order_key)
            self._sorted[m] = elems
        return self._sorted[m]

    def element(self, a: HFSet) -> RankedElem:
        return self.ranked(a)

    @property
    def markers(self) -> tuple[RankedElem, RankedElem]:
        return self.ranked(ZERO_SET), self.ranked(ONE_SET)

    def dump(self) -> str:
        lines = []
        for m, st in enumerate(self.stages):
            body = " ".join(set_to_sexpr(a.set) for a in self.stage_elems(m))
            lines.append(f"(stage {m} {body})")
        return "\n".join(lines)


def build_stages(u: HFSet, enumeration: Sequence[HFSet] | None = None, n: int = 2) -> StageUniverse:
    if enumeration is None:
        enumeration = sorted(u.elems)
    return StageUniverse(u, enumeration, n)


def stage_order_compare(S: StageUniverse, a: RankedElem, b: RankedElem) -> int:
    ka, kb = S.order_key(a), S.order_key(b)
    return (ka > kb) - (ka < kb)


def min_choice(S: StageUniverse, a: Iterable[RankedElem]) -> RankedElem:
    items = list(a)
    if not items:
        raise EmptySet("min of empty set")
    return min(items, key=S.order_key)


class StageSet(Symbolic):
    """The stage 𝕃_β as a formula parameter (β may exceed the computed depth).

    Bounded quantifiers over it range over those elements of the top
    computed stage that it contains.
    """

    def __init__(self, beta, universe: StageUniverse):
        self.beta = Ord.coerce(beta)
        self.universe = universe
        self.key = ("stage", self.beta, universe.u.key)

    def contains(self, x) -> bool:
        if isinstance(x, HFSet):
            return x in self.universe._enum_index or Ord.nat(self.universe.ext_rank(x)) < self.beta
        if isinstance(x, StageSet):
            return x.beta < self.beta
        if isinstance(x, OmegaSet):
            from .ordinal import OMEGA
            return OMEGA < self.beta
        return False

    def members(self, universe, polarity):
        S = self.universe
        top = S.stages[S.depth]
        if self.beta.is_finite() and self.beta.to_int() <= S.depth:
            return sorted(S.stages[self.beta.to_int()])
        return sorted(x for x in top if self.contains(x))

    def rank(self):
        return self.beta

    def __repr__(self):
        return f"(stage {self.beta})"
