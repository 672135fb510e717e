"""Ordinals below epsilon_0 in Cantor normal form.

An ordinal is stored as a tuple of ``(exponent, coefficient)`` pairs with
strictly descending exponents; the empty tuple is 0.  Values are hashable
and totally ordered, so they can be used as dict keys and sorted directly.
"""
from __future__ import annotations

import re
from functools import total_ordering
from typing import Iterable


@total_ordering
class Ord:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Iterable[tuple["Ord", int]] = ()):
        self.terms = _normalize(terms)
        self._hash = hash(self.terms)

    # construction helpers
    @staticmethod
    def nat(n: int) -> "Ord":
        if n < 0:
            raise ValueError("negative natural")
        return ZERO if n == 0 else Ord(((ZERO, n),))

    @staticmethod
    def coerce(x) -> "Ord":
        if isinstance(x, Ord):
            return x
        if isinstance(x, int):
            return Ord.nat(x)
        raise TypeError(f"cannot coerce {x!r} to Ord")

    # predicates
    def is_zero(self) -> bool:
        return not self.terms

    def is_finite(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and self.terms[0][0].is_zero())

    def to_int(self) -> int:
        if not self.is_finite():
            raise ValueError(f"{self} is infinite")
        return self.terms[0][1] if self.terms else 0

    def is_successor(self) -> bool:
        return bool(self.terms) and self.terms[-1][0].is_zero()

    def is_additive_principal(self) -> bool:
        return len(self.terms) == 1 and self.terms[0][1] == 1

    # order
    def __eq__(self, other):
        if isinstance(other, int):
            other = Ord.nat(other)
        return isinstance(other, Ord) and self.terms == other.terms

    def __hash__(self):
        return self._hash

    def __lt__(self, other):
        return compare(self, Ord.coerce(other)) < 0

    # arithmetic
    def __add__(self, other):
        return add(self, Ord.coerce(other))

    def __radd__(self, other):
        return add(Ord.coerce(other), self)

    def __repr__(self):
        return f"Ord({to_str(self)})"

    def __str__(self):
        return to_str(self)


def _normalize(terms) -> tuple:
    out: list[tuple[Ord, int]] = []
    for e, c in terms:
        e = Ord.coerce(e)
        if c < 0:
            raise ValueError("negative coefficient")
        if c == 0:
            continue
        # absorb earlier summands with smaller exponent; merge equal heads
        while out and compare(out[-1][0], e) < 0:
            out.pop()
        if out and out[-1][0] == e:
            out[-1] = (e, out[-1][1] + c)
        else:
            out.append((e, c))
    return tuple(out)


ZERO = Ord.__new__(Ord)
ZERO.terms = ()
ZERO._hash = hash(())
ONE = Ord(((ZERO, 1),))
OMEGA = Ord(((ONE, 1),))


def compare(a: Ord, b: Ord) -> int:
    """-1, 0 or 1 according to the CNF order."""
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        c = compare(ea, eb)
        if c:
            return c
        if ca != cb:
            return -1 if ca < cb else 1
    la, lb = len(a.terms), len(b.terms)
    return (la > lb) - (la < lb)


def add(a: Ord, b: Ord) -> Ord:
    if not b.terms:
        return a
    lead = b.terms[0][0]
    keep = [t for t in a.terms if compare(t[0], lead) >= 0]
    return Ord(keep + list(b.terms))


def omega_pow(a: Ord) -> Ord:
    return Ord(((a, 1),))


def star(a: Ord) -> Ord:
    """Least g with a < w^(g+1); the leading exponent for a > 0."""
    return a.terms[0][0] if a.terms else ZERO


def omega_mul_nat(a: Ord, n: int) -> Ord:
    """a * n for natural n (repeated addition)."""
    out = ZERO
    for _ in range(n):
        out = add(out, a)
    return out


def succ(a: Ord) -> Ord:
    return add(a, ONE)


def omax(*xs) -> Ord:
    best = ZERO
    for x in xs:
        x = Ord.coerce(x)
        if compare(x, best) > 0:
            best = x
    return best


# text syntax:  0 | n | w | w*c | w^(e) | w^(e)*c | a + b

def to_str(a: Ord) -> str:
    if not a.terms:
        return "0"
    parts = []
    for e, c in a.terms:
        if e.is_zero():
            parts.append(str(c))
            continue
        head = "w" if e == ONE else f"w^({to_str(e)})"
        parts.append(head if c == 1 else f"{head}*{c}")
    return " + ".join(parts)


_TOKEN = re.compile(r"\s*(\d+|w|\^|\*|\+|\(|\))")


class ParseError(ValueError):
    pass


def parse(text: str) -> Ord:
    toks = _tokenize(text)
    val, pos = _parse_sum(toks, 0)
    if pos != len(toks):
        raise ParseError(f"trailing input in {text!r}")
    return val


def _tokenize(text: str) -> list[str]:
    toks, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"bad character at {pos} in {text!r}")
        toks.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return toks


def _parse_sum(toks, pos):
    val, pos = _parse_term(toks, pos)
    while pos < len(toks) and toks[pos] == "+":
        rhs, pos = _parse_term(toks, pos + 1)
        val = add(val, rhs)
    return val, pos


def _parse_term(toks, pos):
    if pos >= len(toks):
        raise ParseError("unexpected end")
    t = toks[pos]
    if t.isdigit():
        return Ord.nat(int(t)), pos + 1
    if t == "(":
        val, pos = _parse_sum(toks, pos + 1)
        if pos >= len(toks) or toks[pos] != ")":
            raise ParseError("missing )")
        return val, pos + 1
    if t != "w":
        raise ParseError(f"unexpected {t!r}")
    pos += 1
    exp = ONE
    if pos < len(toks) and toks[pos] == "^":
        exp, pos = _parse_exponent(toks, pos + 1)
    coeff = 1
    if pos < len(toks) and toks[pos] == "*":
        if pos + 1 >= len(toks) or not toks[pos + 1].isdigit():
            raise ParseError("coefficient must be a natural")
        coeff, pos = int(toks[pos + 1]), pos + 2
    return Ord(((exp, coeff),)), pos


def _parse_exponent(toks, pos):
    if pos >= len(toks):
        raise ParseError("missing exponent")
    t = toks[pos]
    if t.isdigit():
        return Ord.nat(int(t)), pos + 1
    if t == "(":
        val, pos = _parse_sum(toks, pos + 1)
        if pos >= len(toks) or toks[pos] != ")":
            raise ParseError("missing )")
        return val, pos + 1
    if t == "w":
        pos += 1
        if pos < len(toks) and toks[pos] == "^":
            inner, pos = _parse_exponent(toks, pos + 1)
            return omega_pow(inner), pos
        return OMEGA, pos
    raise ParseError(f"unexpected {t!r} in exponent")
