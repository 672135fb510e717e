"""Bachmann-Howard collapses over finite ranked orders, C-sets and control operators.

A collapse sends each element s to an ordinal with

    rank(s) < theta(s)                                       (domination)
    s < t and rank(s) < theta(t)  implies  theta(s) < theta(t)   (conditional order)

``synthesize_collapse`` computes the canonical collapse of a finite order
by the recursion a(0) = rank(s)+1, a(n+1) = sup{theta(t)+1 : t < s, rank(t) < a(n)}.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cmp_to_key
from typing import Callable, Hashable, Iterable, Sequence

from . import ordinal as O
from .epsterm import (OMEGA_T, ONE_T, ZERO_T, EpsTerm, RankedBase, below_omega,
                      embed_ord, eps_add, eps_compare, eps_star, unembed)
from .ordinal import ONE, ZERO, Ord


class DomainGap(KeyError):
    pass


class SearchSpaceTooLarge(ValueError):
    pass


class FuelExhausted(RuntimeError):
    pass


class OracleGap(KeyError):
    pass


class InconsistentExtension(ValueError):
    pass


class FiniteWop:
    """A finite order given by its elements in ascending order, with ranks."""

    def __init__(self, elements: Sequence[Hashable], ranks: Sequence):
        if len(elements) != len(ranks):
            raise ValueError("one rank per element")
        self.elements = tuple(elements)
        self._pos = {e: i for i, e in enumerate(self.elements)}
        self._rank = {e: Ord.coerce(r) for e, r in zip(self.elements, ranks)}

    @classmethod
    def from_terms(cls, terms: Iterable[EpsTerm], base: RankedBase) -> "FiniteWop":
        """Distinct eps-terms ordered by eps_compare and ranked by eps_star."""
        uniq = list(dict.fromkeys(terms))
        uniq.sort(key=cmp_to_key(lambda a, b: eps_compare(a, b, base)))
        return cls(uniq, [eps_star(t, base) for t in uniq])

    def compare(self, a, b) -> int:
        i, j = self._pos[a], self._pos[b]
        return (i > j) - (i < j)

    def rank(self, a) -> Ord:
        return self._rank[a]

    def below(self, s):
        return self.elements[:self._pos[s]]

    def __len__(self):
        return len(self.elements)

    def __repr__(self):
        body = " ".join(f"({e!r} {r})" for e, r in self._rank.items())
        return f"(wop {body})"


@dataclass
class CollapseMap:
    values: dict = field(default_factory=dict)
    bound: Ord | None = None

    def __getitem__(self, s) -> Ord:
        try:
            return self.values[s]
        except KeyError:
            raise DomainGap(repr(s)) from None

    def __contains__(self, s):
        return s in self.values

    def items(self):
        return self.values.items()

    def preimages(self, v: Ord):
        return [s for s, w in self.values.items() if w == v]


@dataclass(frozen=True)
class Violation:
    clause: str  # "rank", "order" or "bound"
    s: Hashable
    t: Hashable | None = None


def check_bh(T, theta: CollapseMap, alpha=None) -> list[Violation]:
    """All violations of the collapse conditions over the elements of T."""
    out = []
    elems = list(T.elements)
    vals = {s: theta[s] for s in elems}
    bound = Ord.coerce(alpha) if alpha is not None else theta.bound
    for s in elems:
        if not T.rank(s) < vals[s]:
            out.append(Violation("rank", s))
        if bound is not None and not vals[s] < bound:
            out.append(Violation("bound", s))
    for s, t in itertools.permutations(elems, 2):
        if T.compare(s, t) < 0 and T.rank(s) < vals[t] and not vals[s] < vals[t]:
            out.append(Violation("order", s, t))
    return out


def _sup_succ(values) -> Ord:
    return O.omax(*(v + ONE for v in values))


def synthesize_collapse(T: FiniteWop) -> CollapseMap:
    theta: dict = {}
    for s in T.elements:
        earlier = T.below(s)
        a = T.rank(s) + ONE
        best = a
        while True:
            nxt = _sup_succ(theta[t] for t in earlier if T.rank(t) < a)
            best = O.omax(best, nxt)
            if nxt == a:
                break
            a = nxt
            # a(1) below a(0) starts a descending run; it settles within |T| steps
        theta[s] = best
    return CollapseMap(theta)


def naive_fixpoint(T: FiniteWop) -> CollapseMap:
    """The same recursion without stabilisation detection: run |T|+2 rounds and take the max."""
    elems = list(T.elements)
    memo: dict[int, Ord] = {}

    def value(i: int) -> Ord:
        if i not in memo:
            seq = [T.rank(elems[i]) + ONE]
            for _ in range(len(elems) + 2):
                prev = seq[-1]
                cands = [value(j) + ONE for j in range(i) if T.rank(elems[j]) < prev]
                seq.append(max(cands) if cands else ZERO)
            memo[i] = max(seq)
        return memo[i]

    return CollapseMap({e: value(i) for i, e in enumerate(elems)})


def brute_force_collapse_exists(T: FiniteWop, alpha_bound, value_grid: Iterable, limit: int = 5):
    """Exhaustive backtracking over grid assignments; a witness map or None."""
    if len(T) > limit:
        raise SearchSpaceTooLarge(f"{len(T)} elements")
    bound = Ord.coerce(alpha_bound) if alpha_bound is not None else None
    grid = sorted({Ord.coerce(v) for v in value_grid})
    if bound is not None:
        grid = [v for v in grid if v < bound]
    elems = list(T.elements)
    chosen: list[Ord] = []

    def ok(k: int, v: Ord) -> bool:
        s = elems[k]
        if not T.rank(s) < v:
            return False
        for j in range(k):
            t, w = elems[j], chosen[j]
            # t < s in the order since elements are ascending
            if T.rank(t) < v and not w < v:
                return False
        return True

    def go(k: int):
        if k == len(elems):
            return True
        for v in grid:
            if ok(k, v):
                chosen.append(v)
                if go(k + 1):
                    return True
                chosen.pop()
        return False

    if go(0):
        return CollapseMap(dict(zip(elems, chosen)), bound)
    return None


# C-sets and operators

def _as_member_test(X) -> Callable[[Ord], bool]:
    """X is an ordinal (read as the set of smaller ordinals) or a finite set of ordinals."""
    if isinstance(X, Ord):
        return lambda b: b < X
    xs = frozenset(Ord.coerce(x) for x in X)
    return lambda b: b in xs


def _x_tops(X) -> list[Ord]:
    return [] if isinstance(X, Ord) else sorted({Ord.coerce(x) for x in X})


@dataclass
class _Search:
    theta: object
    t: EpsTerm
    X: object
    base: RankedBase
    fuel: int
    memo: dict = field(default_factory=dict)

    def tick(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExhausted("C-set search ran out of fuel")

    def member(self, s: EpsTerm, active: frozenset = frozenset()) -> bool:
        if s in self.memo:
            return self.memo[s]
        if s in active:
            return False
        self.tick()
        active = active | {s}
        found = self._decide(s, active)
        if found or not active - {s}:
            self.memo[s] = found
        return found

    def _decide(self, s, active) -> bool:
        inX = _as_member_test(self.X)
        low = below_omega(s)
        if s == ZERO_T or low and inX(unembed(s)):
            return True
        st = embed_ord(eps_star(s, self.base))
        if st != s and self.member(st, active):
            return True
        if not low:
            return False
        beta = unembed(s)
        for s0 in self._preimages(beta):
            if eps_compare(s0, self.t, self.base) < 0 and self.member(s0, active):
                return True
        for top in self._tops():
            if beta < top and self.member(embed_ord(top), active):
                return True
        return False

    def _preimages(self, beta):
        pre = getattr(self.theta, "preimages", None)
        return pre(beta) if pre else []

    def _tops(self):
        tops = set(_x_tops(self.X))
        vals = getattr(self.theta, "items", None)
        if vals:
            tops.update(v for k, v in vals() if eps_compare(k, self.t, self.base) < 0)
        tops.update(unembed(k) for k, v in self.memo.items() if v and below_omega(k))
        return sorted(tops, reverse=True)


def cset_member(theta, t: EpsTerm, X, s: EpsTerm, base: RankedBase, fuel: int = 10_000) -> bool:
    """Decide s in C(t, X) by goal-directed search over the closure clauses."""
    if eps_compare(t, OMEGA_T, base) < 0:
        raise ValueError("C-sets need t >= W")
    return _Search(theta, t, X, base, fuel).member(s)


@dataclass(frozen=True)
class ControlOperator:
    """The operator H_t[params] = C(t+1, params)."""

    t: EpsTerm
    params: frozenset = frozenset()

    def with_params(self, *more) -> "ControlOperator":
        return ControlOperator(self.t, self.params | {Ord.coerce(m) for m in more})


def h_member(op: ControlOperator, theta, s, base: RankedBase, fuel: int = 10_000) -> bool:
    if isinstance(s, (Ord, int)):
        s = embed_ord(s)
    return cset_member(theta, eps_add(op.t, ONE_T, base), op.params, s, base, fuel)


def h_check(op: ControlOperator, theta, s, base: RankedBase, fuel: int = 10_000) -> str:
    """'pass', 'fail' or 'unknown' (fuel ran out)."""
    try:
        return "pass" if h_member(op, theta, s, base, fuel) else "fail"
    except FuelExhausted:
        return "unknown"


def recover_report(theta: CollapseMap, t: EpsTerm, grid: Iterable[Ord], base: RankedBase,
                   fuel: int = 10_000) -> dict:
    """Compare C(t, theta(t)) below W with theta(t) over a finite grid of ordinals."""
    v = theta[t]
    missing, extra = [], []
    for beta in grid:
        beta = Ord.coerce(beta)
        member = cset_member(theta, t, v, embed_ord(beta), base, fuel)
        if beta < v and not member:
            missing.append(beta)
        if member and not beta < v:
            extra.append(beta)
    return {"value": v, "missing": missing, "extra": extra}


# the greedy collapse oracle

def least_principal_above_omega(v: Ord) -> Ord:
    """Least additively principal ordinal >= v that is > w."""
    lead = O.star(v)
    cand = v if v.is_additive_principal() else O.omega_pow(O.succ(lead))
    two = Ord.nat(2)
    return cand if O.compare(O.star(cand), two) >= 0 else O.omega_pow(two)


class GreedyTheta:
    """Extends a partial collapse on eps-terms one query at a time.

    Each new term gets the least value meeting both collapse conditions against
    every earlier assignment; terms >= W get additively principal values above
    w, and an embedded ordinal b gets a value >= b.
    """

    def __init__(self, base: RankedBase):
        self.base = base
        self.map = CollapseMap()
        self.log: list[EpsTerm] = []

    def items(self):
        return self.map.items()

    def preimages(self, v):
        return self.map.preimages(v)

    def __contains__(self, s):
        return s in self.map

    def __call__(self, s: EpsTerm) -> Ord:
        if s not in self.map:
            self.map.values[s] = self._choose(s)
            self.log.append(s)
        return self.map.values[s]

    def get(self, s: EpsTerm) -> Ord:
        if s not in self.map:
            raise OracleGap(repr(s))
        return self.map.values[s]

    def prime(self, queries: Iterable[EpsTerm]) -> None:
        """Assign a batch in ascending order, which never fails."""
        for s in sorted(set(queries), key=cmp_to_key(lambda a, b: eps_compare(a, b, self.base))):
            self(s)

    def _choose(self, s) -> Ord:
        base = self.base
        rank = eps_star(s, base)
        high = eps_compare(s, OMEGA_T, base) >= 0
        v = O.succ(rank)
        if below_omega(s):
            v = O.omax(v, unembed(s))
        earlier = [(t, w) for t, w in self.map.items() if eps_compare(t, s, base) < 0]
        later = [(t, w) for t, w in self.map.items() if eps_compare(t, s, base) > 0]
        while True:
            if high:
                v = least_principal_above_omega(v)
            bumped = False
            for t, w in earlier:
                if eps_star(t, base) < v and not w < v:
                    v, bumped = O.succ(w), True
            if not bumped:
                break
        for t, w in later:
            if rank < w and not v < w:
                raise InconsistentExtension(f"no value for {s!r} below {w} (assigned to {t!r})")
        return v

    def check(self) -> list[Violation]:
        T = FiniteWop.from_terms(self.map.values, self.base)
        return check_bh(T, self.map)
