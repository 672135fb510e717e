"""Search trees for Kripke-Platek set theory over finite constructible stages.

A node is a path of ranked elements; its label is recomputed by replaying
the construction along the path and memoized per tree.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import count
from typing import Iterator, Sequence

from .hfset import (
    All, And, Eq, Ex, Formula, HFSet, In, NotEq, NotIn, Or,
    disj, eval_delta0, exists, exists_in, forall, forall_in, instance,
    is_delta0, is_prime, limit_ordinal, negate, params, set_to_sexpr, to_sexpr,
)
from .lhier import RankedElem, StageUniverse, ZERO_SET

C0 = 2  # bound on schema parameters


class NotANode(ValueError):
    pass


class WitnessScanExhausted(RuntimeError):
    """No fresh existential witness among u and the path entries."""


class NotExtensional(ValueError):
    pass


class NotWellFounded(ValueError):
    pass


Path = tuple  # of RankedElem
Sequent = tuple  # of Formula


# the axiom list

def _equality():
    body = disj(NotEq("x", "x'"), NotEq("y", "y'"), NotIn("x", "y"), In("x'", "y'"))
    return forall("x", forall("x'", forall("y", forall("y'", body))))


def _extensionality():
    differ = Or(exists_in("z", "x", NotIn("z", "y")), exists_in("z", "y", NotIn("z", "x")))
    return forall("x", forall("y", Or(differ, Eq("x", "y"))))


def _pairing():
    return forall("x", forall("y", exists("z", And(In("x", "z"), In("y", "z")))))


def _union():
    return forall("x", exists("y", forall_in("z", "x", forall_in("z'", "z", In("z'", "y")))))


def _infinity():
    return exists("x", limit_ordinal("x"))


BASIC_AXIOMS = ("equality", "extensionality", "pairing", "union", "infinity")


def separation(theta: Formula, k: int) -> Formula:
    """Delta_0 separation for theta(x, z, v1..vk)."""
    vs = [f"v{i}" for i in range(1, k + 1)]
    out = forall("x", exists("y", And(
        forall_in("z", "x", Or(negate(theta), In("z", "y"))),
        forall_in("z", "y", And(In("z", "x"), theta)))))
    for v in reversed(vs):
        out = forall(v, out)
    return out


def collection(theta: Formula, k: int) -> Formula:
    """Delta_0 collection for the disjunction theta(x, y, z, v1..vk)."""
    if not isinstance(theta, Or):
        raise ValueError("collection matrix must be a disjunction")
    vs = [f"v{i}" for i in range(1, k + 1)]
    hyp = exists_in("y", "x", forall("z", negate(theta)))
    concl = exists("w", forall_in("y", "x", exists_in("z", "w", theta)))
    out = forall("x", Or(hyp, concl))
    for v in reversed(vs):
        out = forall(v, out)
    return out


def delta0_matrices(names: Sequence[str]) -> Iterator[Formula]:
    """All Delta_0 formulas in the given free names, by increasing size."""
    def atoms(ns):
        for a in ns:
            for b in ns:
                for cls in (In, NotIn, Eq, NotEq):
                    yield cls(a, b)

    @lru_cache(maxsize=None)
    def of_size(ns: tuple, s: int) -> tuple:
        if s == 1:
            return tuple(atoms(ns))
        out = []
        for a in range(1, s - 1):
            for l in of_size(ns, a):
                for r in of_size(ns, s - 1 - a):
                    out.append(And(l, r))
                    out.append(Or(l, r))
        if s >= 3:
            q = f"q{s}"
            for b in ns:
                for body in of_size(ns + (q,), s - 2):
                    out.append(forall_in(q, b, body))
                    out.append(exists_in(q, b, body))
        return tuple(out)

    ns = tuple(names)
    for s in count(1):
        yield from of_size(ns, s)


@lru_cache(maxsize=None)
def _matrix(nparams: int, scheme: str, m: int) -> Formula:
    if scheme == "sep":
        names = ["x", "z"] + [f"v{i}" for i in range(1, nparams + 1)]
    else:
        names = ["x", "y", "z"] + [f"v{i}" for i in range(1, nparams + 1)]
    for i, f in enumerate(delta0_matrices(names)):
        if i == m:
            return f if scheme == "sep" else Or(NotEq("z", "z"), f)
    raise AssertionError


def schema_index(k: int) -> tuple[str, int, int]:
    """(scheme, parameter count, matrix number) for an axiom index k >= 5."""
    j = k - 5
    scheme = "sep" if j % 2 == 0 else "coll"
    j //= 2
    return scheme, j % (C0 + 1), j // (C0 + 1)


@lru_cache(maxsize=None)
def kp_axiom(k: int) -> Formula:
    if k < 0:
        raise ValueError("axiom index must be >= 0")
    if k < 5:
        return (_equality, _extensionality, _pairing, _union, _infinity)[k]()
    scheme, p, m = schema_index(k)
    theta = _matrix(p, scheme, m)
    return separation(theta, p) if scheme == "sep" else collection(theta, p)


def axiom_name(k: int) -> str:
    if k < 5:
        return BASIC_AXIOMS[k]
    scheme, p, m = schema_index(k)
    return f"{'separation' if scheme == 'sep' else 'collection'}[{p},{m}]"


# the trees

def redex_index(label: Sequent) -> int | None:
    for i, phi in enumerate(label):
        if not is_prime(phi):
            return i
    return None


def has_true_delta0(label: Sequent) -> bool:
    return any(is_delta0(phi) and eval_delta0(phi) for phi in label)


@dataclass
class SearchNode:
    path: Path
    label: Sequent
    redex: int | None = None


class SearchTree:
    """The search tree over the ranked stage 𝐋_alpha of a stage universe."""

    def __init__(self, universe: StageUniverse, alpha: int):
        if alpha > universe.depth:
            raise ValueError(f"alpha={alpha} exceeds stage depth {universe.depth}")
        self.S = universe
        self.alpha = alpha
        self.alphabet = universe.stage_elems(alpha)
        self._alphabet_set = frozenset(self.alphabet)
        self._labels: dict[Path, Sequent] = {(): ()}
        self._children: dict[Path, tuple] = {}
        self.zero = universe.ranked(ZERO_SET)
        self.one = universe.ranked(universe.markers[1].set)

    # witnesses for the existential rule
    def witness_list(self, path: Path) -> list[RankedElem]:
        u = [self.S.ranked(a) for a in self.S.enumeration]
        out = []
        n = len(path)
        for i in range(n):
            if i < len(u):
                out.append(u[i])
            out.append(path[i])
        out.extend(u[n:])
        return out

    def _expand(self, path: Path) -> tuple:
        label = self.label(path)
        if len(path) % 2 == 0:
            k = len(path) // 2
            return ((self.zero, label + (negate(kp_axiom(k)),)),)
        if has_true_delta0(label):
            return ()
        r = redex_index(label)
        if r is None:
            return ((self.zero, label),)
        phi = label[r]
        rest = label[:r] + label[r + 1:]
        if isinstance(phi, And):
            return ((self.zero, rest + (phi, phi.l)), (self.one, rest + (phi, phi.r)))
        if isinstance(phi, Or):
            psi = phi.l if phi.l not in label else phi.r
            return ((self.zero, rest + (phi, psi)),)
        if isinstance(phi, All):
            return tuple((a, rest + (phi, instance(phi, a.set))) for a in self.alphabet)
        assert isinstance(phi, Ex)
        present = set(label)
        for b in self.witness_list(path):
            inst = instance(phi, b.set)
            if inst not in present:
                return ((self.zero, rest + (phi, inst)),)
        raise WitnessScanExhausted(f"no fresh witness for {to_sexpr(phi)} at {path!r}")

    def children(self, path: Path) -> tuple:
        """(element, label) pairs of the children of a node."""
        path = tuple(path)
        if path not in self._children:
            self.label(path)
            self._children[path] = self._expand(path)
        return self._children[path]

    def label(self, path: Path) -> Sequent:
        path = tuple(path)
        if path in self._labels:
            return self._labels[path]
        if path[-1] not in self._alphabet_set:
            raise NotANode(f"{path!r}: entry outside the alphabet")
        parent = path[:-1]
        for a, lab in self.children(parent):
            if a == path[-1]:
                self._labels[path] = lab
                return lab
        raise NotANode(f"{path!r} is not in the tree")

    def contains(self, path: Path) -> bool:
        try:
            self.label(path)
            return True
        except NotANode:
            return False

    def node(self, path: Path) -> SearchNode:
        path = tuple(path)
        lab = self.label(path)
        r = redex_index(lab) if len(path) % 2 == 1 else None
        return SearchNode(path, lab, r)

    def expand(self, node: SearchNode) -> tuple:
        if not self.contains(node.path):
            raise NotANode(repr(node.path))
        return self.children(node.path)

    def nodes(self, depth: int) -> list[Path]:
        """All nodes of length at most ``depth``, in breadth-first order."""
        out, frontier = [()], [()]
        for _ in range(depth):
            nxt = []
            for p in frontier:
                for a, _ in self.children(p):
                    nxt.append(p + (a,))
            out.extend(nxt)
            frontier = nxt
        return out

    def kb_compare(self, s: Path, t: Path) -> int:
        return kb_compare(s, t, self.S)

    def node_rank(self, path: Path) -> int:
        return node_rank(path)


def expand(node: SearchNode, tree: SearchTree) -> tuple:
    return tree.expand(node)


def kb_compare(s: Path, t: Path, S: StageUniverse) -> int:
    """Kleene-Brouwer order: proper extensions are smaller."""
    for a, b in zip(s, t):
        if a != b:
            ka, kb = S.order_key(a), S.order_key(b)
            return -1 if ka < kb else 1
    if len(s) == len(t):
        return 0
    return -1 if len(s) > len(t) else 1


def node_rank(path: Path) -> int:
    return max((a.stage for a in path), default=0)


# branch properties on finite fragments

@dataclass
class BranchReport:
    violations: list = field(default_factory=list)

    def clauses(self) -> set:
        return {v[0] for v in self.violations}

    def ok(self) -> bool:
        return not self.violations


def _formula_params(phi: Formula) -> set:
    return {p for p in params(phi) if isinstance(p, HFSet)}


def check_branch_properties(path: Path, labels: Sequence[Sequent], tree: SearchTree) -> BranchReport:
    """Check the branch clauses (a)-(f) on a finite labelled chain.

    ``labels[i]`` is the label of ``path[:i]``.  Clauses (c)-(f) only
    concern formulas that were the redex of an odd step inside the chain,
    since those are the ones whose witnesses the fragment already contains:
    after one step on a conjunction one conjunct is present, after two
    steps on a disjunction both disjuncts are, a universal redex gets an
    instance at some path entry, and an existential redex stepped r times
    has instances for the first r fresh entries of the witness list.
    """
    rep = BranchReport()
    universe_sets = {a.set for a in path} | set(tree.S.u.elems)
    occurring: set = set()
    for lab in labels:
        occurring.update(lab)
    for phi in occurring:
        for p in _formula_params(phi):
            if p not in universe_sets:
                rep.violations.append(("a", phi, p))
        if is_prime(phi) and eval_delta0(phi):
            rep.violations.append(("b", phi))
    steps: dict = {}
    for i in range(1, min(len(labels) - 1, len(path)) + 1, 2):
        lab = labels[i]
        r = redex_index(lab)
        if r is None or i + 1 >= len(labels):
            continue
        steps.setdefault(lab[r], []).append(i)
    for phi, idx in steps.items():
        if isinstance(phi, And):
            if phi.l not in occurring and phi.r not in occurring:
                rep.violations.append(("c", phi))
        elif isinstance(phi, Or):
            have = (phi.l in occurring) + (phi.r in occurring)
            if have < min(len(idx), 2):
                rep.violations.append(("d", phi))
        elif isinstance(phi, All):
            rng = {a.set for a in path}
            if not any(instance(phi, b) in occurring for b in rng):
                rep.violations.append(("e", phi))
        elif isinstance(phi, Ex):
            last = idx[-1]
            wl = tree.witness_list(path[:last])
            seen, need = [], len(idx)
            for b in wl:
                inst = instance(phi, b.set)
                if inst not in seen:
                    seen.append(inst)
                if len(seen) == need:
                    break
            for inst in seen:
                if inst not in occurring:
                    rep.violations.append(("f", phi, inst))
    return rep


# Mostowski collapse of finite structures

def mostowski_collapse(elements: Sequence, member: set) -> tuple[dict, HFSet]:
    """Collapse a finite extensional structure (``member`` holds pairs (x, y) for x E y).

    Returns the isomorphism as a dict and the transitive image.
    """
    elems = list(elements)
    ext = {e: frozenset(x for x in elems if (x, e) in member) for e in elems}
    seen = {}
    for e, m in ext.items():
        if m in seen:
            raise NotExtensional(f"{e!r} and {seen[m]!r} have the same members")
        seen[m] = e
    image: dict = {}
    visiting: set = set()

    def go(e):
        if e in image:
            return image[e]
        if e in visiting:
            raise NotWellFounded(repr(e))
        visiting.add(e)
        image[e] = HFSet(go(x) for x in ext[e])
        visiting.discard(e)
        return image[e]

    for e in elems:
        go(e)
    return image, HFSet(image.values())


def dump_node(tree: SearchTree, path: Path) -> str:
    node = tree.node(path)
    p = " ".join(f"({a.stage} {set_to_sexpr(a.set)})" for a in path)
    lab = " ".join(to_sexpr(f) for f in node.label)
    red = "" if node.redex is None else f" (redex {node.redex})"
    return f"(node (path {p}) (label {lab}){red})"
