"""Hereditarily finite sets and the set-theoretic formula language.

Formulas are in negation normal form.  Bound variables are de Bruijn
indices (``Var(0)`` is the innermost binder).  A quantifier is *bounded*
when its matrix has the shape ``x notin y or ...`` (universal) resp.
``x in y and ...`` (existential) with ``y`` different from ``x``; the
annotation is computed from the shape, so two formulas are equal exactly
when they are structurally equal.
"""
from __future__ import annotations

from typing import Callable, Iterable, Iterator


class NotDelta0(ValueError):
    pass


class UnboundVariable(ValueError):
    pass


class ArityMismatch(ValueError):
    pass


class HFSet:
    __slots__ = ("elems", "key", "_h", "rank")

    def __init__(self, elems: Iterable["HFSet"] = ()):
        uniq = {e.key: e for e in elems}
        ordered = sorted(uniq.values(), key=lambda e: e.key)
        self.elems: tuple[HFSet, ...] = tuple(ordered)
        self.rank = 1 + max((e.rank for e in ordered), default=-1)
        # code order: von Neumann rank first, then the descending element list
        self.key = (self.rank, tuple(e.key for e in reversed(ordered)))
        self._h = hash(self.key)

    def __eq__(self, other):
        return isinstance(other, HFSet) and self._h == other._h and self.key == other.key

    def __hash__(self):
        return self._h

    def __lt__(self, other: "HFSet"):
        return self.key < other.key

    def __contains__(self, x) -> bool:
        if not isinstance(x, HFSet):
            return False
        return any(e == x for e in self.elems)

    def __iter__(self) -> Iterator["HFSet"]:
        return iter(self.elems)

    def __len__(self):
        return len(self.elems)

    def issubset(self, other: "HFSet") -> bool:
        return all(e in other for e in self.elems)

    def is_transitive(self) -> bool:
        return all(z in self for y in self.elems for z in y.elems)

    def __repr__(self):
        return set_to_sexpr(self)


EMPTY = HFSet()


def hf(*elems: HFSet) -> HFSet:
    return HFSet(elems)


def nat(n: int) -> HFSet:
    """The von Neumann natural n."""
    x = EMPTY
    for _ in range(n):
        x = HFSet(x.elems + (x,))
    return x


def is_nat(x: HFSet) -> bool:
    return x == nat(len(x))


def union(x: HFSet) -> HFSet:
    return HFSet(z for y in x for z in y)


def transitive_closure(xs: Iterable[HFSet]) -> frozenset:
    seen: set[HFSet] = set()
    stack = list(xs)
    while stack:
        y = stack.pop()
        if y in seen:
            continue
        seen.add(y)
        stack.extend(y.elems)
    return frozenset(seen)


class Symbolic:
    """A parameter that is not a concrete hereditarily finite set.

    Subclasses decide membership themselves and list the members a bounded
    quantifier should range over.  ``polarity`` is ``"all"`` or ``"ex"``.
    """

    key: tuple = ()

    def contains(self, x) -> bool:
        raise NotImplementedError

    def members(self, universe, polarity: str) -> Iterable:
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self.key == other.key

    def __hash__(self):
        return hash((type(self).__name__, self.key))


class OmegaSet(Symbolic):
    """The set of natural numbers, as a formula parameter.

    Bounded quantifiers over it are decided on finite windows: universal
    ones check the first ``ALL_WINDOW`` naturals, existential ones search
    the first ``EX_WINDOW``.  This is exact for the limit-ordinal formula
    and its subformulas, which are the only places omega occurs.
    """

    ALL_WINDOW = 4
    EX_WINDOW = 8
    key = ("omega",)

    def contains(self, x) -> bool:
        return isinstance(x, HFSet) and is_nat(x)

    def members(self, universe, polarity):
        n = self.ALL_WINDOW if polarity == "all" else self.EX_WINDOW
        return [nat(k) for k in range(n)]

    def __repr__(self):
        return "omega"


OMEGA_SET = OmegaSet()


class Var:
    __slots__ = ("i",)

    def __init__(self, i: int):
        self.i = i

    def __eq__(self, other):
        return isinstance(other, Var) and other.i == self.i

    def __hash__(self):
        return hash(("var", self.i))

    def __repr__(self):
        return f"#{self.i}"


def _mix(*parts):
    return hash(parts)


class Formula:
    __slots__ = ("_h",)
    tag = "?"

    def fields(self) -> tuple:
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        return type(other) is type(self) and other._h == self._h and other.fields() == self.fields()

    def __hash__(self):
        return self._h

    def __repr__(self):
        return to_sexpr(self)


class Atom(Formula):
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a, self.b = a, b
        self._h = _mix(self.tag, a, b)

    def fields(self):
        return (self.a, self.b)


class In(Atom):
    tag = "in"


class Eq(Atom):
    tag = "eq"


class NotIn(Atom):
    tag = "nin"


class NotEq(Atom):
    tag = "neq"


PRIMES = (In, Eq, NotIn, NotEq)


class Bin(Formula):
    __slots__ = ("l", "r", "_d0")

    def __init__(self, l: Formula, r: Formula):
        self.l, self.r = l, r
        self._h = _mix(self.tag, l._h, r._h)
        self._d0 = is_delta0(l) and is_delta0(r)

    def fields(self):
        return (self.l, self.r)


class And(Bin):
    tag = "and"


class Or(Bin):
    tag = "or"


class Quant(Formula):
    __slots__ = ("body", "bound", "_d0")

    def __init__(self, body: Formula):
        self.body = body
        self._h = _mix(self.tag, body._h)
        self.bound = self._bound_term()
        self._d0 = self.bound is not None and is_delta0(body)

    def fields(self):
        return (self.body,)

    def _bound_term(self):
        raise NotImplementedError


class All(Quant):
    tag = "all"

    def _bound_term(self):
        b = self.body
        if isinstance(b, Or) and isinstance(b.l, NotIn) and b.l.a == Var(0) and b.l.b != Var(0):
            return b.l.b
        return None


class Ex(Quant):
    tag = "ex"

    def _bound_term(self):
        b = self.body
        if isinstance(b, And) and isinstance(b.l, In) and b.l.a == Var(0) and b.l.b != Var(0):
            return b.l.b
        return None


def is_prime(phi: Formula) -> bool:
    """True for prime and negated prime formulas."""
    return isinstance(phi, Atom)


def is_delta0(phi: Formula) -> bool:
    if isinstance(phi, Atom):
        return True
    return phi._d0


def is_bounded(q: Quant) -> bool:
    return q.bound is not None


def shift(t, by: int, cutoff: int = 0):
    if isinstance(t, Var) and t.i >= cutoff:
        return Var(t.i + by)
    return t


def shift_formula(phi: Formula, by: int, cutoff: int = 0) -> Formula:
    if isinstance(phi, Atom):
        return type(phi)(shift(phi.a, by, cutoff), shift(phi.b, by, cutoff))
    if isinstance(phi, Bin):
        return type(phi)(shift_formula(phi.l, by, cutoff), shift_formula(phi.r, by, cutoff))
    return type(phi)(shift_formula(phi.body, by, cutoff + 1))


def all_in(y, body: Formula) -> All:
    """The bounded universal ``forall x in y. body``; ``body`` sees x as Var(0)."""
    return All(Or(NotIn(Var(0), shift(y, 1)), body))


def ex_in(y, body: Formula) -> Ex:
    return Ex(And(In(Var(0), shift(y, 1)), body))


def negate(phi: Formula) -> Formula:
    if isinstance(phi, In):
        return NotIn(phi.a, phi.b)
    if isinstance(phi, NotIn):
        return In(phi.a, phi.b)
    if isinstance(phi, Eq):
        return NotEq(phi.a, phi.b)
    if isinstance(phi, NotEq):
        return Eq(phi.a, phi.b)
    if isinstance(phi, And):
        return Or(negate(phi.l), negate(phi.r))
    if isinstance(phi, Or):
        return And(negate(phi.l), negate(phi.r))
    if isinstance(phi, All):
        return Ex(negate(phi.body))
    return All(negate(phi.body))


def height(phi: Formula) -> int:
    if is_delta0(phi):
        return 0
    if isinstance(phi, Bin):
        return max(height(phi.l), height(phi.r)) + 1
    return height(phi.body) + 1


def _subst_term(t, depth: int, value):
    if isinstance(t, Var):
        if t.i == depth:
            return value
        if t.i > depth:
            return Var(t.i - 1)
    return t


def substitute(phi: Formula, value, depth: int = 0) -> Formula:
    """Replace the outermost free variable (index ``depth``) by ``value``."""
    if isinstance(value, Var):
        raise ArityMismatch("substitution value must be a parameter")
    if depth < 0:
        raise ArityMismatch("negative variable index")
    if isinstance(phi, Atom):
        return type(phi)(_subst_term(phi.a, depth, value), _subst_term(phi.b, depth, value))
    if isinstance(phi, Bin):
        return type(phi)(substitute(phi.l, value, depth), substitute(phi.r, value, depth))
    return type(phi)(substitute(phi.body, value, depth + 1))


def instance(q: Quant, value) -> Formula:
    """psi(a) for a quantifier ``Q x psi``."""
    return substitute(q.body, value)


def free_vars(phi: Formula, depth: int = 0) -> set[int]:
    """Free de Bruijn indices, relative to the outside of ``phi``."""
    if isinstance(phi, Atom):
        return {t.i - depth for t in (phi.a, phi.b) if isinstance(t, Var) and t.i >= depth}
    if isinstance(phi, Bin):
        return free_vars(phi.l, depth) | free_vars(phi.r, depth)
    return free_vars(phi.body, depth + 1)


def is_closed(phi: Formula) -> bool:
    return not free_vars(phi)


def params(phi: Formula) -> set:
    if isinstance(phi, Atom):
        return {t for t in (phi.a, phi.b) if not isinstance(t, Var)}
    if isinstance(phi, Bin):
        return params(phi.l) | params(phi.r)
    return params(phi.body)


def subformulas(phi: Formula) -> Iterator[Formula]:
    yield phi
    if isinstance(phi, Bin):
        yield from subformulas(phi.l)
        yield from subformulas(phi.r)
    elif isinstance(phi, Quant):
        yield from subformulas(phi.body)


# evaluation

def member(x, y) -> bool:
    """x in y for concrete or symbolic parameters."""
    if isinstance(y, Symbolic):
        return y.contains(x)
    if isinstance(y, HFSet):
        return x in y
    raise TypeError(f"not a parameter: {y!r}")


def members(y, universe, polarity: str):
    if isinstance(y, Symbolic):
        return y.members(universe, polarity)
    return y.elems


def eval_delta0(phi: Formula, universe=None) -> bool:
    """Truth of a closed Delta_0 formula.

    Bounded quantifiers range over the members of their bound; ``universe``
    is only consulted by symbolic bounds.
    """
    if not is_delta0(phi):
        raise NotDelta0(repr(phi))
    if not is_closed(phi):
        raise UnboundVariable(repr(phi))
    return _ev(phi, universe)


def _ev(phi, universe) -> bool:
    if isinstance(phi, In):
        return member(phi.a, phi.b)
    if isinstance(phi, NotIn):
        return not member(phi.a, phi.b)
    if isinstance(phi, Eq):
        return phi.a == phi.b
    if isinstance(phi, NotEq):
        return phi.a != phi.b
    if isinstance(phi, And):
        return _ev(phi.l, universe) and _ev(phi.r, universe)
    if isinstance(phi, Or):
        return _ev(phi.l, universe) or _ev(phi.r, universe)
    if isinstance(phi, All):
        dom = members(phi.bound, universe, "all")
        rest = phi.body.r
        return all(_ev(substitute(rest, a), universe) for a in dom)
    dom = members(phi.bound, universe, "ex")
    rest = phi.body.r
    return any(_ev(substitute(rest, a), universe) for a in dom)


# S-expressions

def set_to_sexpr(x: HFSet) -> str:
    return "(set" + "".join(" " + set_to_sexpr(e) for e in x.elems) + ")"


def term_to_sexpr(t) -> str:
    if isinstance(t, HFSet):
        return set_to_sexpr(t)
    return repr(t)


def to_sexpr(phi: Formula) -> str:
    if isinstance(phi, Atom):
        return f"({phi.tag} {term_to_sexpr(phi.a)} {term_to_sexpr(phi.b)})"
    if isinstance(phi, Bin):
        return f"({phi.tag} {to_sexpr(phi.l)} {to_sexpr(phi.r)})"
    return f"({phi.tag} {to_sexpr(phi.body)})"


def tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def read_tree(tokens: list[str], pos: int = 0):
    """Parse one s-expression into nested lists of atoms."""
    if tokens[pos] == "(":
        out, pos = [], pos + 1
        while tokens[pos] != ")":
            node, pos = read_tree(tokens, pos)
            out.append(node)
        return out, pos + 1
    return tokens[pos], pos + 1


def parse_sexpr(text: str):
    toks = tokenize(text)
    tree, pos = read_tree(toks)
    if pos != len(toks):
        raise ValueError("trailing tokens")
    return tree


SymbolReader = Callable[[list], object]


def tree_to_set(tree) -> HFSet:
    if not isinstance(tree, list) or not tree or tree[0] != "set":
        raise ValueError(f"not a set: {tree!r}")
    return HFSet(tree_to_set(t) for t in tree[1:])


def tree_to_term(tree, symbols: SymbolReader | None = None):
    if isinstance(tree, str):
        if tree.startswith("#"):
            return Var(int(tree[1:]))
        if tree == "omega":
            return OMEGA_SET
        raise ValueError(f"unknown atom {tree!r}")
    if tree[0] == "set":
        return tree_to_set(tree)
    if symbols is None:
        raise ValueError(f"unknown term {tree!r}")
    return symbols(tree)


_TAGS = {c.tag: c for c in (In, Eq, NotIn, NotEq, And, Or, All, Ex)}


def tree_to_formula(tree, symbols: SymbolReader | None = None) -> Formula:
    cls = _TAGS[tree[0]]
    if issubclass(cls, Atom):
        return cls(tree_to_term(tree[1], symbols), tree_to_term(tree[2], symbols))
    if issubclass(cls, Bin):
        return cls(tree_to_formula(tree[1], symbols), tree_to_formula(tree[2], symbols))
    return cls(tree_to_formula(tree[1], symbols))


def parse_set(text: str) -> HFSet:
    return tree_to_set(parse_sexpr(text))


def parse_formula(text: str, symbols: SymbolReader | None = None) -> Formula:
    return tree_to_formula(parse_sexpr(text), symbols)


# a few standard Delta_0 formulas, written with explicit de Bruijn indices

def transitive(x) -> Formula:
    """forall y in x. forall z in y. z in x"""
    return all_in(x, all_in(Var(0), In(Var(0), shift(x, 2))))


def limit_ordinal(x) -> Formula:
    """Nonempty, transitive, all elements transitive, and no largest element."""
    nonempty = ex_in(x, Eq(Var(0), Var(0)))
    elems_trans = all_in(x, transitive(Var(0)))
    no_max = all_in(x, ex_in(shift(x, 1), In(Var(1), Var(0))))
    return And(nonempty, And(transitive(x), And(elems_trans, no_max)))


# named construction: build with string variables, then bind them

def abstract(phi: Formula, name: str, depth: int = 0) -> Formula:
    """Turn the free name ``name`` into the de Bruijn index of a new binder."""
    def term(t):
        return Var(depth) if t == name else t
    if isinstance(phi, Atom):
        return type(phi)(term(phi.a), term(phi.b))
    if isinstance(phi, Bin):
        return type(phi)(abstract(phi.l, name, depth), abstract(phi.r, name, depth))
    return type(phi)(abstract(phi.body, name, depth + 1))


def forall(name: str, body: Formula) -> All:
    return All(abstract(body, name))


def exists(name: str, body: Formula) -> Ex:
    return Ex(abstract(body, name))


def forall_in(name: str, bound, body: Formula) -> All:
    return forall(name, Or(NotIn(name, bound), body))


def exists_in(name: str, bound, body: Formula) -> Ex:
    return exists(name, And(In(name, bound), body))


def disj(*parts: Formula) -> Formula:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def conj(*parts: Formula) -> Formula:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out
