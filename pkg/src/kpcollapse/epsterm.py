"""Terms built from a ranked base order: 0, eps(σ) and sums of powers of W.

A sum ``W^(s_0)*b_0 + ... + W^(s_n)*b_n`` has strictly descending exponents
and ordinal coefficients.  ``W`` is the term ``W^(W^(0)*1)*1``, the first
term above every embedded ordinal.

The module also carries a small symbolic ordinal type (``SymOrd``) with
opaque epsilon-number atoms, used by :func:`o_interpret` to give every term
an ordinal value.  Tests use it as an order and addition oracle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

from . import ordinal as O
from .ordinal import ONE, ZERO, Ord


class IndexZero(ValueError):
    pass


class NotEmbedding(ValueError):
    pass


class NoDifference(ValueError):
    """Raised when t = s + r has no solution r (that is, when s > t)."""


class TermSyntaxError(ValueError):
    pass


# bases

class RankedBase:
    """A strict total order on hashable elements, each carrying an ordinal rank."""

    def compare(self, a, b) -> int:
        raise NotImplementedError

    def rank(self, a) -> Ord:
        raise NotImplementedError

    def format(self, a) -> str:
        return str(a)

    def parse(self, text: str):
        raise NotImplementedError


class FiniteBase(RankedBase):
    """Elements listed in ascending order, with their ranks."""

    def __init__(self, elements: Sequence[Hashable], ranks: Sequence | None = None):
        self.elements = tuple(elements)
        self._pos = {e: i for i, e in enumerate(self.elements)}
        if len(self._pos) != len(self.elements):
            raise ValueError("repeated base element")
        if ranks is None:
            ranks = [0] * len(self.elements)
        self._rank = {e: Ord.coerce(r) for e, r in zip(self.elements, ranks)}

    def compare(self, a, b) -> int:
        i, j = self._pos[a], self._pos[b]
        return (i > j) - (i < j)

    def rank(self, a) -> Ord:
        return self._rank[a]

    def position(self, a) -> int:
        return self._pos[a]

    def parse(self, text: str):
        for e in self.elements:
            if str(e) == text:
                return e
        raise TermSyntaxError(f"unknown base element {text!r}")


class SearchTreeBase(RankedBase):
    """Search-tree nodes under the Kleene-Brouwer order, ranked by node_rank."""

    def __init__(self, tree):
        self.tree = tree

    def compare(self, a, b) -> int:
        from .searchtree import kb_compare
        return kb_compare(a, b, self.tree.S)

    def rank(self, a) -> Ord:
        from .searchtree import node_rank
        return Ord.nat(node_rank(a))

    def format(self, a) -> str:
        from .hfset import set_to_sexpr
        return "(path" + "".join(" " + set_to_sexpr(x.set) for x in a) + ")"

    def parse(self, text: str):
        from .hfset import parse_sexpr, tree_to_set
        tree = parse_sexpr(text)
        if not isinstance(tree, list) or not tree or tree[0] != "path":
            raise TermSyntaxError(f"not a path: {text!r}")
        S = self.tree.S
        return tuple(S.ranked(tree_to_set(x)) for x in tree[1:])


# terms

class EpsTerm:
    __slots__ = ()


@dataclass(frozen=True)
class Zero(EpsTerm):
    def __repr__(self):
        return "0"


@dataclass(frozen=True)
class Eps(EpsTerm):
    node: Hashable

    def __repr__(self):
        return f"eps({self.node!r})"


@dataclass(frozen=True)
class Sum(EpsTerm):
    terms: tuple  # ((exponent, coeff), ...)

    def __repr__(self):
        return " + ".join(f"W^({e!r})*{c}" for e, c in self.terms)


ZERO_T = Zero()


def embed_ord(beta) -> EpsTerm:
    beta = Ord.coerce(beta)
    return ZERO_T if beta.is_zero() else Sum(((ZERO_T, beta),))


ONE_T = embed_ord(1)
OMEGA_T = Sum(((ONE_T, ONE),))  # W itself


def below_omega(t: EpsTerm) -> bool:
    return isinstance(t, Zero) or (isinstance(t, Sum) and len(t.terms) == 1 and t.terms[0][0] == ZERO_T)


def unembed(t: EpsTerm) -> Ord:
    if isinstance(t, Zero):
        return ZERO
    if not below_omega(t):
        raise ValueError(f"{t!r} is not below W")
    return t.terms[0][1]


def _cmp_ord(a: Ord, b: Ord) -> int:
    return O.compare(a, b)


def eps_compare(s: EpsTerm, t: EpsTerm, base: RankedBase) -> int:
    sz, tz = isinstance(s, Zero), isinstance(t, Zero)
    if sz or tz:
        return tz - sz
    if isinstance(s, Eps) and isinstance(t, Eps):
        return base.compare(s.node, t.node)
    if isinstance(s, Eps):
        # s < t iff s <= the leading exponent of t
        return -1 if eps_compare(s, t.terms[0][0], base) <= 0 else 1
    if isinstance(t, Eps):
        return -eps_compare(t, s, base)
    for (e1, c1), (e2, c2) in zip(s.terms, t.terms):
        c = eps_compare(e1, e2, base)
        if c:
            return c
        c = _cmp_ord(c1, c2)
        if c:
            return c
    n, m = len(s.terms), len(t.terms)
    return (n > m) - (n < m)


def eps_lt(s, t, base) -> bool:
    return eps_compare(s, t, base) < 0


def eps_max(base, *xs) -> EpsTerm:
    best = ZERO_T
    for x in xs:
        if eps_compare(x, best, base) > 0:
            best = x
    return best


def _lt_power(b: Ord, alpha) -> bool:
    """b < w^alpha (alpha None means no bound)."""
    if alpha is None:
        return True
    return O.compare(b, O.omega_pow(Ord.coerce(alpha))) < 0


def eps_validate(s, alpha, base: RankedBase) -> bool:
    """Whether ``s`` is a well-formed term at index ``alpha`` (None: unbounded)."""
    if isinstance(s, Zero):
        return True
    if isinstance(s, Eps):
        try:
            return _lt_power(base.rank(s.node), alpha)
        except (KeyError, ValueError):
            return False
    if not isinstance(s, Sum) or not s.terms:
        return False
    if len(s.terms) == 1 and isinstance(s.terms[0][0], Eps) and s.terms[0][1] == ONE:
        return False
    prev = None
    for e, c in s.terms:
        if not isinstance(c, Ord) or c.is_zero() or not _lt_power(c, alpha):
            return False
        if not eps_validate(e, alpha, base):
            return False
        if prev is not None and eps_compare(e, prev, base) >= 0:
            return False
        prev = e
    return True


def _pairs(s: EpsTerm) -> list:
    """Summands of s, reading eps(σ) as W^(eps σ)*1."""
    if isinstance(s, Zero):
        return []
    if isinstance(s, Eps):
        return [(s, ONE)]
    return list(s.terms)


def _from_pairs(ps) -> EpsTerm:
    if not ps:
        return ZERO_T
    if len(ps) == 1 and isinstance(ps[0][0], Eps) and ps[0][1] == ONE:
        return ps[0][0]
    return Sum(tuple(ps))


def eps_add(s: EpsTerm, t: EpsTerm, base: RankedBase, alpha=None) -> EpsTerm:
    if alpha is not None and Ord.coerce(alpha).is_zero():
        raise IndexZero("addition needs a positive index")
    if isinstance(t, Zero):
        return s
    if isinstance(s, Zero):
        return t
    if isinstance(s, Eps) and isinstance(t, Eps):
        c = base.compare(s.node, t.node)
        if c < 0:
            return t
        if c == 0:
            return Sum(((s, Ord.nat(2)),))
        return Sum(((s, ONE), (t, ONE)))
    if isinstance(s, Eps):
        lead, g0 = t.terms[0]
        c = eps_compare(s, lead, base)
        if c < 0:
            return t
        if c == 0:
            return Sum(((lead, ONE + g0),) + t.terms[1:])
        return Sum(((s, ONE),) + t.terms)
    if isinstance(t, Eps):
        out = []
        for i, (e, b) in enumerate(s.terms):
            c = eps_compare(e, t, base)
            if c < 0:
                break
            if c == 0:
                return _from_pairs(out + [(e, b + ONE)])
            out.append((e, b))
        return _from_pairs(out + [(t, ONE)])
    lead, g0 = t.terms[0]
    out = []
    for e, b in s.terms:
        c = eps_compare(e, lead, base)
        if c < 0:
            break
        if c == 0:
            return Sum(tuple(out) + ((e, b + g0),) + t.terms[1:])
        out.append((e, b))
    return Sum(tuple(out) + t.terms)


def eps_sum(base, *xs, alpha=None) -> EpsTerm:
    out = ZERO_T
    for x in xs:
        out = eps_add(out, x, base, alpha)
    return out


def eps_omega_pow(s: EpsTerm) -> EpsTerm:
    return s if isinstance(s, Eps) else Sum(((s, ONE),))


def eps_tower(n: int, s: EpsTerm) -> EpsTerm:
    for _ in range(n):
        s = eps_omega_pow(s)
    return s


def eps_star(s: EpsTerm, base: RankedBase) -> Ord:
    if isinstance(s, Zero):
        return ZERO
    if isinstance(s, Eps):
        return O.star(base.rank(s.node))
    return O.omax(*(O.omax(eps_star(e, base), O.star(c)) for e, c in s.terms))


def ord_subtract(b: Ord, c: Ord) -> Ord:
    """The d with b + d = c, for b <= c."""
    for i, ((e1, c1), (e2, c2)) in enumerate(zip(b.terms, c.terms)):
        if e1 == e2 and c1 == c2:
            continue
        if e1 == e2 and c1 < c2:
            return Ord(((e2, c2 - c1),) + c.terms[i + 1:])
        if O.compare(e1, e2) < 0:
            return Ord(c.terms[i:])
        raise NoDifference(f"{b} > {c}")
    if len(b.terms) > len(c.terms):
        raise NoDifference(f"{b} > {c}")
    return Ord(c.terms[len(b.terms):])


def subtract(s: EpsTerm, t: EpsTerm, base: RankedBase) -> EpsTerm:
    """The r with t = s + r."""
    ps, pt = _pairs(s), _pairs(t)
    for i, ((e1, b1), (e2, b2)) in enumerate(zip(ps, pt)):
        c = eps_compare(e1, e2, base)
        if c == 0 and b1 == b2:
            continue
        if c == 0 and O.compare(b1, b2) < 0:
            return _from_pairs([(e2, ord_subtract(b1, b2))] + pt[i + 1:])
        if c < 0:
            return _from_pairs(pt[i:])
        raise NoDifference(f"{s!r} > {t!r}")
    if len(ps) > len(pt):
        raise NoDifference(f"{s!r} > {t!r}")
    return _from_pairs(pt[len(ps):])


# text syntax

def to_text(s: EpsTerm, base: RankedBase) -> str:
    if isinstance(s, Zero):
        return "0"
    if isinstance(s, Eps):
        return f"eps({base.format(s.node)})"
    parts = []
    for e, c in s.terms:
        coeff = O.to_str(c)
        if not c.is_finite():
            coeff = f"({coeff})"
        parts.append(f"W^({to_text(e, base)})*{coeff}")
    return " + ".join(parts)


def _balanced(text: str, pos: int) -> int:
    """Index just past the parenthesis group opening at text[pos]."""
    depth = 0
    for i in range(pos, len(text)):
        if text[i] == "(":
            depth += 1
        elif text[i] == ")":
            depth -= 1
            if depth == 0:
                return i + 1
    raise TermSyntaxError(f"unbalanced parentheses in {text!r}")


def parse_term(text: str, base: RankedBase) -> EpsTerm:
    text = text.strip()
    if text == "0":
        return ZERO_T
    if text.startswith("eps("):
        end = _balanced(text, 3)
        if end != len(text):
            raise TermSyntaxError(f"trailing input in {text!r}")
        return Eps(base.parse(text[4:end - 1].strip()))
    pairs = []
    pos = 0
    while True:
        if not text.startswith("W^(", pos):
            raise TermSyntaxError(f"expected W^( at {pos} in {text!r}")
        end = _balanced(text, pos + 2)
        exp = parse_term(text[pos + 3:end - 1], base)
        if not text.startswith("*", end):
            raise TermSyntaxError(f"expected * at {end} in {text!r}")
        pos = end + 1
        if text.startswith("(", pos):
            cend = _balanced(text, pos)
            coeff = O.parse(text[pos + 1:cend - 1])
        else:
            cend = pos
            while cend < len(text) and text[cend].isdigit():
                cend += 1
            if cend == pos:
                raise TermSyntaxError(f"missing coefficient at {pos} in {text!r}")
            coeff = Ord.nat(int(text[pos:cend]))
        pairs.append((exp, coeff))
        pos = cend
        while pos < len(text) and text[pos] == " ":
            pos += 1
        if pos == len(text):
            break
        if text[pos] != "+":
            raise TermSyntaxError(f"expected + at {pos} in {text!r}")
        pos += 1
        while pos < len(text) and text[pos] == " ":
            pos += 1
    return Sum(tuple(pairs))


# symbolic ordinals for the interpretation

@dataclass(frozen=True)
class EpsAtom:
    """An epsilon number, ordered by its subscript; above every atom-free value."""

    index: Ord


@dataclass(frozen=True)
class SymOrd:
    """Sum of w^(e)*c with descending exponents; an exponent is a SymOrd or an EpsAtom.

    The summand with exponent ``EpsAtom(g)`` and coefficient c stands for
    eps_g * c, since w^(eps_g) = eps_g.
    """

    terms: tuple = ()

    def __lt__(self, other):
        return sym_compare(self, other) < 0

    def __le__(self, other):
        return sym_compare(self, other) <= 0

    def __add__(self, other):
        return sym_add(self, other)


SYM_ZERO = SymOrd()


def _atom_value(a: EpsAtom) -> SymOrd:
    return SymOrd(((a, 1),))


def _cmp_exp(x, y) -> int:
    if isinstance(x, EpsAtom) and isinstance(y, EpsAtom):
        return O.compare(x.index, y.index)
    if isinstance(x, EpsAtom):
        return sym_compare(_atom_value(x), y) if _has_atom(y) else 1
    if isinstance(y, EpsAtom):
        return -_cmp_exp(y, x)
    return sym_compare(x, y)


def _has_atom(x: SymOrd) -> bool:
    return any(isinstance(e, EpsAtom) or _has_atom(e) for e, _ in x.terms)


def sym_compare(a: SymOrd, b: SymOrd) -> int:
    for (e1, c1), (e2, c2) in zip(a.terms, b.terms):
        c = _cmp_exp(e1, e2)
        if c:
            return c
        if c1 != c2:
            return -1 if c1 < c2 else 1
    n, m = len(a.terms), len(b.terms)
    return (n > m) - (n < m)


def _norm_exp(e):
    # w^(eps_g) is eps_g itself, so an exponent equal to a bare atom collapses
    if isinstance(e, SymOrd) and len(e.terms) == 1 and isinstance(e.terms[0][0], EpsAtom) and e.terms[0][1] == 1:
        return e.terms[0][0]
    return e


def sym_add(a: SymOrd, b: SymOrd) -> SymOrd:
    if not b.terms:
        return a
    lead = b.terms[0][0]
    keep = [t for t in a.terms if _cmp_exp(t[0], lead) > 0]
    same = [t for t in a.terms if _cmp_exp(t[0], lead) == 0]
    head = [(lead, b.terms[0][1] + (same[0][1] if same else 0))]
    return SymOrd(tuple(keep + head) + b.terms[1:])


def sym_omega_pow(e) -> SymOrd:
    """w^e, where e is a SymOrd."""
    e = _norm_exp(e)
    if isinstance(e, SymOrd) and not e.terms:
        return SymOrd(((SYM_ZERO, 1),))
    return SymOrd(((e, 1),))


def from_ord(a: Ord) -> SymOrd:
    return SymOrd(tuple((from_ord(e), c) for e, c in a.terms))


def _exp_add(x, y):
    """Sum of two exponents, as an exponent."""
    xs = _atom_value(x) if isinstance(x, EpsAtom) else x
    ys = _atom_value(y) if isinstance(y, EpsAtom) else y
    return _norm_exp(sym_add(xs, ys))


def sym_exp_mul(e, beta: Ord) -> SymOrd:
    """w^e * beta for an exponent e and an ordinal beta."""
    out = SYM_ZERO
    for b, c in beta.terms:
        out = sym_add(out, SymOrd(((_exp_add(e, from_ord(b)), c),)))
    return out


def sym_left_mul(a: Ord, x: SymOrd) -> SymOrd:
    """a * x for an atom-free ordinal a > 0."""
    lead, lead_c = a.terms[0]
    out = SYM_ZERO
    for e, c in x.terms:
        if isinstance(e, EpsAtom) or e.terms:
            out = sym_add(out, SymOrd(((_exp_add(from_ord(lead), e), c),)))
        else:
            out = sym_add(out, from_ord(O.omega_mul_nat(a, c)))
    return out


def o_interpret(s: EpsTerm, c: Callable[[Hashable], Ord], eta, alpha, base: RankedBase | None = None) -> SymOrd:
    """Ordinal value of s: eps(σ) is the atom eps_(eta+1+c(σ)) and W is w^(1+alpha)."""
    eta, alpha = Ord.coerce(eta), Ord.coerce(alpha)
    if base is not None and isinstance(base, FiniteBase):
        check_embedding(base, c)
    mult = ONE + alpha

    def go(t):
        if isinstance(t, Zero):
            return SYM_ZERO
        if isinstance(t, Eps):
            return _atom_value(EpsAtom(eta + ONE + Ord.coerce(c(t.node))))
        out = SYM_ZERO
        for e, b in t.terms:
            exponent = sym_left_mul(mult, go(e))
            out = sym_add(out, sym_exp_mul(_norm_exp(exponent), b))
        return out

    return go(s)


def check_embedding(base: FiniteBase, c) -> None:
    vals = [Ord.coerce(c(e)) for e in base.elements]
    for x, y in zip(vals, vals[1:]):
        if not x < y:
            raise NotEmbedding(f"{x} is not below {y}")
