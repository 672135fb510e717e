"""Proof codes: finite terms that denote infinitary preproofs.

Each code determines its end-sequent, last rule, height and immediate
subcodes by structural recursion, so the preproof it denotes can be
explored lazily node by node.  ``CodeSystem`` evaluates codes against one
search tree and one collapse oracle, memoizing per code.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, fields

from . import ordinal as O
from .collapse import ControlOperator, FuelExhausted, GreedyTheta, InconsistentExtension, h_member
from .epsterm import (OMEGA_T, ZERO_T, Eps, EpsTerm, SearchTreeBase, below_omega, embed_ord,
                      eps_add, eps_compare, eps_omega_pow, eps_star, to_text)
from .hfset import (EMPTY, OMEGA_SET, All, And, Atom, Eq, Ex, Formula, HFSet, In, NotIn, OmegaSet,
                    Or, Var, eval_delta0, free_vars, height, instance, is_bounded, is_closed,
                    is_delta0, members, negate, params, set_to_sexpr, substitute, to_sexpr, union)
from .lhier import RankedElem, StageSet, StageUniverse
from .ordinal import OMEGA, ZERO, Ord
from .searchtree import (SearchTree, WitnessScanExhausted, has_true_delta0, kp_axiom, node_rank,
                         redex_index, schema_index)

BASIC_CUT_RANK = 8  # C0 + 6 with C0 = 2
OMEGA_ORD_T = embed_ord(OMEGA)


class IrrelevantPremise(ValueError):
    pass


class PathNotInTree(ValueError):
    pass


class StageUnavailable(ValueError):
    pass


class EmptyEndSequent(ValueError):
    pass


class UnboundedBranching(ValueError):
    pass


# rules

@dataclass(frozen=True)
class AxRule:
    def __repr__(self):
        return "ax"


@dataclass(frozen=True)
class AndRule:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class OrRule:
    i: int
    left: Formula
    right: Formula


@dataclass(frozen=True)
class AllRule:
    formula: All


@dataclass(frozen=True)
class ExRule:
    witness: object
    formula: Ex


@dataclass(frozen=True)
class CutRule:
    formula: Formula


@dataclass(frozen=True)
class RefRule:
    formula: Ex


@dataclass(frozen=True)
class RepRule:
    index: object


AX = AxRule()


# formula classes used by the transformations

def is_sigma(phi: Formula) -> bool:
    """No unbounded universal quantifier anywhere."""
    if isinstance(phi, Atom):
        return True
    if isinstance(phi, (And, Or)):
        return is_sigma(phi.l) and is_sigma(phi.r)
    if isinstance(phi, All) and not is_bounded(phi):
        return False
    return is_sigma(phi.body)


def is_unbounded_pi1(phi: Formula) -> bool:
    return isinstance(phi, All) and not is_bounded(phi) and is_delta0(phi.body)


def is_ref_formula(phi: Formula) -> bool:
    """exists z. forall x in a. exists y in z. theta, with theta a bounded disjunction."""
    if not isinstance(phi, Ex) or is_bounded(phi):
        return False
    inner = phi.body
    if not isinstance(inner, All) or not is_bounded(inner):
        return False
    ex = inner.body.r
    if not isinstance(ex, Ex) or ex.bound != Var(2):
        return False
    theta = ex.body.r
    return isinstance(theta, Or) and is_delta0(theta) and 2 not in free_vars(theta)


def ref_premise(phi: Ex) -> All:
    """forall x in a. exists y. theta, from exists z. forall x in a. exists y in z. theta."""
    inner = phi.body
    return substitute(All(Or(inner.body.l, Ex(inner.body.r.body.r))), EMPTY)


def relativize(phi: Formula, beta, S: StageUniverse) -> Formula:
    """Bound every unbounded quantifier of phi by the stage of index beta."""
    if S is None:
        raise StageUnavailable("no stage universe")
    try:
        beta = Ord.coerce(beta)
    except (TypeError, ValueError) as exc:
        raise StageUnavailable(repr(beta)) from exc
    stage = StageSet(beta, S)

    def rel(f):
        if is_delta0(f):
            return f
        if isinstance(f, (And, Or)):
            return type(f)(rel(f.l), rel(f.r))
        if is_bounded(f):
            return type(f)(type(f.body)(f.body.l, rel(f.body.r)))
        if isinstance(f, All):
            return All(Or(NotIn(Var(0), stage), rel(f.body)))
        return Ex(And(In(Var(0), stage), rel(f.body)))

    return rel(phi)


# codes

class Code:
    """Base class: structural equality with a cached hash."""

    def _key(self):
        return tuple(getattr(self, f.name) for f in fields(self))

    def __hash__(self):
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other):
        if self is other:
            return True
        return type(self) is type(other) and hash(self) == hash(other) and self._key() == other._key()


@dataclass(frozen=True, eq=False)
class Basic(Code):
    path: tuple = ()


@dataclass(frozen=True, eq=False)
class IAll(Code):
    formula: All
    witness: object
    proof: Code


@dataclass(frozen=True, eq=False)
class IAnd(Code):
    formula: And
    i: int
    proof: Code


@dataclass(frozen=True, eq=False)
class REx(Code):
    formula: Ex
    left: Code
    right: Code

    def __post_init__(self):
        if height(self.formula) <= 1:
            raise ValueError("reduction needs a formula of height > 1")


@dataclass(frozen=True, eq=False)
class ROr(Code):
    formula: Or
    left: Code
    right: Code

    def __post_init__(self):
        if height(self.formula) <= 1:
            raise ValueError("reduction needs a formula of height > 1")


@dataclass(frozen=True, eq=False)
class E(Code):
    proof: Code


@dataclass(frozen=True, eq=False)
class AxCode(Code):
    formulas: frozenset

    def __post_init__(self):
        if not any(is_delta0(f) and is_closed(f) and eval_delta0(f) for f in self.formulas):
            raise ValueError("axiom code needs a true bounded formula")


@dataclass(frozen=True, eq=False)
class AndIntro(Code):
    left: Formula
    right: Formula
    p0: Code
    p1: Code


@dataclass(frozen=True, eq=False)
class OrIntro(Code):
    i: int
    left: Formula
    right: Formula
    proof: Code


@dataclass(frozen=True, eq=False)
class BEx(Code):
    formula: Formula
    beta: Ord
    proof: Code

    def __post_init__(self):
        if not is_sigma(self.formula):
            raise ValueError("existential boundedness needs a Sigma formula")


@dataclass(frozen=True, eq=False)
class BAll(Code):
    formula: All
    beta: Ord
    proof: Code

    def __post_init__(self):
        if not is_unbounded_pi1(self.formula):
            raise ValueError("universal boundedness needs an unbounded Pi_1 formula")


@dataclass(frozen=True, eq=False)
class C(Code):
    t: EpsTerm
    proof: Code


# explicit-height combinators for the axiom proofs

@dataclass(frozen=True, eq=False)
class ExIntro(Code):
    formula: Ex
    witness: object
    proof: Code
    height: EpsTerm


@dataclass(frozen=True, eq=False)
class AllIntro(Code):
    """A universal rule whose premises come from a named family of codes."""

    formula: All
    side: frozenset
    family: str
    args: tuple
    height: EpsTerm


@dataclass(frozen=True, eq=False)
class RefIntro(Code):
    formula: Ex
    proof: Code
    height: EpsTerm


# proofs of the axioms

def _omega_times(n: int) -> EpsTerm:
    return embed_ord(O.omega_mul_nat(OMEGA, n)) if n else ZERO_T


def _plus(*xs) -> EpsTerm:
    out = ZERO_T
    for x in xs:
        if isinstance(x, int):
            x = embed_ord(x)
        out = _add_plain(out, x)
    return out


def _add_plain(s, t):
    # heights of axiom proofs never mention eps-constants, so any base works
    return eps_add(s, t, _NO_BASE)


class _NoBase:
    def compare(self, a, b):
        raise AssertionError("axiom-proof heights have no eps-constants")

    def rank(self, a):
        raise AssertionError


_NO_BASE = _NoBase()


def _axiom_scheme(k: int) -> str:
    if k < 5:
        return ("equality", "extensionality", "pairing", "union", "infinity")[k]
    return "separation" if schema_index(k)[0] == "sep" else "collection"


def _core_height(scheme: str) -> EpsTerm:
    if scheme in ("equality", "extensionality"):
        return ZERO_T
    if scheme == "collection":
        return _plus(OMEGA_T, _omega_times(3), 3)
    return OMEGA_T


def _leading_foralls(phi: Formula) -> int:
    n = 0
    while isinstance(phi, All) and not is_bounded(phi):
        n += 1
        phi = phi.body
    return n


def _existential_witness(scheme: str, phi: Ex):
    if scheme == "pairing":
        return HFSet(p for p in params(phi) if isinstance(p, HFSet))
    if scheme == "union":
        (x,) = [p for p in params(phi) if isinstance(p, HFSet)]
        return union(x)
    if scheme == "infinity":
        return OMEGA_SET
    # separation: keep the z in x for which the negated matrix fails
    first = phi.body.l
    x = first.bound
    neg = first.body.r.l
    return HFSet(z for z in x.elems if not eval_delta0(substitute(neg, z)))


def _kp_proof(k: int, phi: Formula) -> Code:
    scheme = _axiom_scheme(k)
    n = _leading_foralls(phi)
    if n:
        h = _plus(_core_height(scheme), _omega_times(n))
        return AllIntro(phi, frozenset(), "axiom", (k,), h)
    if scheme in ("equality", "extensionality"):
        return AxCode(frozenset({phi}))
    if scheme == "collection":
        return _collection_core(phi)
    b = _existential_witness(scheme, phi)
    return ExIntro(phi, b, AxCode(frozenset({instance(phi, b)})), OMEGA_T)


def _collection_core(phi: Or) -> Code:
    hyp, concl = phi.l, phi.r
    premise = ref_premise(concl)
    body = AllIntro(premise, frozenset({hyp}), "collection-y", (hyp,),
                    _plus(OMEGA_T, _omega_times(3)))
    ref = RefIntro(concl, body, _plus(OMEGA_T, _omega_times(3), 1))
    return OrIntro(0, hyp, concl, OrIntro(1, hyp, concl, ref))


def _collection_instance(premise: All, a, hyp: Ex) -> Code:
    d = instance(premise, a)            # a notin d  or  exists z. theta(a, z)
    outside, reach = d.l, d.r
    conj = instance(hyp, a)             # a in d  and  forall z. not theta(a, z)
    refute = AllIntro(conj.r, frozenset({reach}), "collection-z", (reach,),
                      _plus(OMEGA_T, _omega_times(1)))
    both = AndIntro(conj.l, conj.r, AxCode(frozenset({conj.l, outside})), refute)
    picked = ExIntro(hyp, a, both, _plus(OMEGA_T, _omega_times(2)))
    return OrIntro(0, outside, reach, OrIntro(1, outside, reach, picked))


def _collection_witness(refute: All, b, reach: Ex) -> Code:
    return ExIntro(reach, b, AxCode(frozenset({instance(refute, b), instance(reach, b)})), OMEGA_T)


def _structural_height(phi: Formula) -> EpsTerm:
    # a bound on the height of truth_proof that instantiation cannot change
    if isinstance(phi, Atom):
        return ZERO_T
    if isinstance(phi, (And, Or)):
        return _plus(_eps_max_plain(_structural_height(phi.l), _structural_height(phi.r)), 1)
    return _plus(_structural_height(phi.body), OMEGA_ORD_T)


def _eps_max_plain(a, b):
    return b if eps_compare(a, b, _NO_BASE) < 0 else a


def truth_proof(phi: Formula) -> Code:
    """A cut-free code of height below W for a true closed bounded formula."""
    if not eval_delta0(phi):
        raise ValueError(f"not true: {to_sexpr(phi)}")
    if isinstance(phi, Atom):
        return AxCode(frozenset({phi}))
    if isinstance(phi, And):
        return AndIntro(phi.l, phi.r, truth_proof(phi.l), truth_proof(phi.r))
    if isinstance(phi, Or):
        i = 0 if eval_delta0(phi.l) else 1
        return OrIntro(i, phi.l, phi.r, truth_proof(phi.r if i else phi.l))
    h = _structural_height(phi)
    if isinstance(phi, All):
        return AllIntro(phi, frozenset(), "truth", (), h)
    for b in members(phi.bound, None, "ex"):
        inst = instance(phi, b)
        if eval_delta0(inst):
            return ExIntro(phi, b, truth_proof(inst), h)
    raise AssertionError("true bounded existential without a witness")


FAMILIES = {
    "truth": lambda phi, a: truth_proof(instance(phi, a)),
    "axiom": lambda phi, a, k: _kp_proof(k, instance(phi, a)),
    "collection-y": lambda phi, a, hyp: _collection_instance(phi, a, hyp),
    "collection-z": lambda phi, a, reach: _collection_witness(phi, a, reach),
}

_KP_CACHE: dict = {}


def kp_axiom_proof(k: int) -> Code:
    """A cut-free code proving the k-th axiom, with height below W*2."""
    if k not in _KP_CACHE:
        _KP_CACHE[k] = _kp_proof(k, kp_axiom(k))
    return _KP_CACHE[k]


# nodes and reports

@dataclass
class PreproofNode:
    code: Code
    path: tuple
    label: frozenset
    rule: object
    height: EpsTerm


CONDITIONS = ("L", "C1", "C2", "H1", "H2", "H3")


@dataclass
class NodeReport:
    path: tuple
    verdicts: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)

    def fail(self, cond, why):
        self.verdicts[cond] = "fail"
        self.witnesses.setdefault(cond, why)

    def ok(self) -> bool:
        return "fail" not in self.verdicts.values()


@dataclass
class VerifyReport:
    nodes: int = 0
    counts: dict = field(default_factory=lambda: {c: {"pass": 0, "fail": 0, "unknown": 0, "n/a": 0}
                                                  for c in CONDITIONS})
    failures: list = field(default_factory=list)
    max_cut_height: int = -1
    has_ref: bool = False
    all_below_omega: bool = True
    restarts: int = 0
    truncated: int = 0  # nodes past the end of the finite witness supply

    def add(self, rep: NodeReport):
        self.nodes += 1
        for c in CONDITIONS:
            self.counts[c][rep.verdicts.get(c, "n/a")] += 1
        if not rep.ok():
            self.failures.append(rep)

    def unknown_rate(self, conds=("H1", "H2", "H3")) -> float:
        total = sum(self.counts[c][v] for c in conds for v in ("pass", "fail", "unknown"))
        unk = sum(self.counts[c]["unknown"] for c in conds)
        return unk / total if total else 0.0

    def fails(self, conds=CONDITIONS) -> int:
        return sum(self.counts[c]["fail"] for c in conds)


# the evaluator

class CodeSystem:
    """Evaluates codes against a search tree and a collapse oracle."""

    def __init__(self, tree: SearchTree, theta=None):
        self.tree = tree
        self.S = tree.S
        self.base = SearchTreeBase(tree)
        self.alphabet = tree.alphabet
        self._alphabet_set = frozenset(self.alphabet)
        self.zero, self.one = tree.zero, tree.one
        self.theta = theta if theta is not None else GreedyTheta(self.base)
        self.queries: list = []
        self._clear()

    def _clear(self):
        self._memo = {name: {} for name in ("l", "r", "o", "d", "h", "n", "c", "b", "basic", "node")}

    def restart_oracle(self):
        """Start over with a fresh oracle primed on every query seen so far."""
        theta = GreedyTheta(self.base)
        theta.prime(self.queries)
        self.theta = theta
        self._clear()

    def collapse(self, s: EpsTerm) -> Ord:
        self.queries.append(s)
        return self.theta(s)

    # parameter ranks

    def param_rank(self, x) -> Ord:
        if isinstance(x, RankedElem):
            return Ord.nat(x.stage)
        if isinstance(x, HFSet):
            return Ord.nat(self.S.ext_rank(x))
        if isinstance(x, OmegaSet):
            return OMEGA
        if isinstance(x, StageSet):
            return x.beta
        raise TypeError(f"not a parameter: {x!r}")

    def k_formula(self, phi: Formula) -> Ord:
        return O.omax(ZERO, *(self.param_rank(p) for p in params(phi)))

    def k_sequent(self, seq) -> Ord:
        return O.omax(ZERO, *(self.k_formula(f) for f in seq))

    def k_rule(self, r) -> Ord:
        if isinstance(r, ExRule):
            return self.param_rank(r.witness)
        if isinstance(r, RepRule):
            return self.param_rank(r.index)
        if isinstance(r, CutRule):
            return self.k_formula(r.formula)
        return ZERO

    def param_bound(self, P: Code) -> Ord:
        return O.omax(eps_star(self.height(P), self.base), self.k_sequent(self.label(P)),
                      self.k_rule(self.rule(P)))

    def relativize(self, phi, beta) -> Formula:
        return relativize(phi, beta, self.S)

    def index_of(self, x):
        """The premise index that a parameter selects."""
        if isinstance(x, HFSet):
            return RankedElem(self.S.ext_rank(x), x)
        return x

    def relevant(self, r) -> list:
        if isinstance(r, AxRule):
            return []
        if isinstance(r, (AndRule, CutRule)):
            return [self.zero, self.one]
        if isinstance(r, (OrRule, ExRule, RefRule)):
            return [self.zero]
        if isinstance(r, AllRule):
            return list(self.alphabet)
        return [r.index]

    def is_relevant(self, r, a) -> bool:
        if isinstance(r, AllRule):
            return a in self._alphabet_set
        return a in self.relevant(r)

    # memo helper

    def _cached(self, table, key, fn):
        m = self._memo[table]
        if key in m:
            return m[key]
        v = fn()
        m[key] = v
        return v

    # basic codes

    def _basic_info(self, path: tuple):
        """('tree', None), ('kp', code) or ('out', None)."""
        def go():
            if not path:
                return ("tree", None)
            kind, q = self._basic_info(path[:-1])
            a = path[-1]
            if kind == "tree":
                if self.tree.contains(path):
                    return ("tree", None)
                parent = path[:-1]
                if len(parent) % 2 == 0 and a == self.one:
                    return ("kp", kp_axiom_proof(len(parent) // 2))
                return ("out", None)
            if kind == "kp" and self.is_relevant(self.rule(q), a):
                return ("kp", self._n(q, a))
            return ("out", None)
        return self._cached("basic", path, go)

    def _tree_rule(self, path: tuple):
        lab = self.tree.label(path)
        if len(path) % 2 == 0:
            return CutRule(negate(kp_axiom(len(path) // 2)))
        if has_true_delta0(lab):
            return AX
        i = redex_index(lab)
        if i is None:
            return RepRule(self.zero)
        phi = lab[i]
        if isinstance(phi, And):
            return AndRule(phi.l, phi.r)
        if isinstance(phi, Or):
            return OrRule(0 if phi.l not in lab else 1, phi.l, phi.r)
        if isinstance(phi, All):
            return AllRule(phi)
        present = set(lab)
        for b in self.tree.witness_list(path):
            if instance(phi, b.set) not in present:
                return ExRule(b.set, phi)
        raise WitnessScanExhausted(f"no fresh witness at {path!r}")

    # intended cases

    def _bex_intended(self, P: BEx) -> bool:
        return self._cached("b", P, lambda: eps_compare(self.height(P.proof), embed_ord(P.beta), self.base) <= 0)

    def _c_intended(self, P: C) -> bool:
        def go():
            Q = P.proof
            return (all(is_sigma(f) for f in self.label(Q)) and self.cut_rank(Q) <= 2
                    and eps_compare(self.h_pair(Q)[0], P.t, self.base) <= 0)
        return self._cached("c", P, go)

    def _c_target(self, t, o) -> EpsTerm:
        return eps_add(t, eps_omega_pow(o), self.base)

    def _c_beta(self, P: C, i) -> Ord:
        return self.collapse(self._c_target(P.t, self.height(self._n(P.proof, i))))

    # end-sequents

    def label(self, P: Code) -> frozenset:
        return self._cached("l", P, lambda: self._label(P))

    def _label(self, P):
        if isinstance(P, Basic):
            kind, q = self._basic_info(P.path)
            if kind == "tree":
                return frozenset(self.tree.label(P.path))
            if kind == "kp":
                return self.label(q)
            return frozenset({Eq(EMPTY, EMPTY)})
        if isinstance(P, IAll):
            return (self.label(P.proof) - {P.formula}) | {instance(P.formula, P.witness)}
        if isinstance(P, IAnd):
            part = P.formula.l if P.i == 0 else P.formula.r
            return (self.label(P.proof) - {P.formula}) | {part}
        if isinstance(P, (REx, ROr)):
            return (self.label(P.left) - {P.formula}) | (self.label(P.right) - {negate(P.formula)})
        if isinstance(P, E):
            return self.label(P.proof)
        if isinstance(P, AxCode):
            return P.formulas
        if isinstance(P, AndIntro):
            return ((self.label(P.p0) - {P.left}) | (self.label(P.p1) - {P.right})
                    | {And(P.left, P.right)})
        if isinstance(P, OrIntro):
            part = P.left if P.i == 0 else P.right
            return (self.label(P.proof) - {part}) | {Or(P.left, P.right)}
        if isinstance(P, BEx):
            if not self._bex_intended(P):
                return self.label(P.proof)
            return (self.label(P.proof) - {P.formula}) | {self.relativize(P.formula, P.beta)}
        if isinstance(P, BAll):
            return (self.label(P.proof) - {P.formula}) | {self.relativize(P.formula, P.beta)}
        if isinstance(P, C):
            return self.label(P.proof)
        if isinstance(P, ExIntro):
            return (self.label(P.proof) - {instance(P.formula, P.witness)}) | {P.formula}
        if isinstance(P, AllIntro):
            return P.side | {P.formula}
        if isinstance(P, RefIntro):
            return (self.label(P.proof) - {ref_premise(P.formula)}) | {P.formula}
        raise TypeError(f"not a code: {P!r}")

    # last rules

    def rule(self, P: Code):
        return self._cached("r", P, lambda: self._rule(P))

    def _rule(self, P):
        if isinstance(P, Basic):
            kind, q = self._basic_info(P.path)
            if kind == "tree":
                return self._tree_rule(P.path)
            if kind == "kp":
                return self.rule(q)
            return AX
        if isinstance(P, IAll):
            r = self.rule(P.proof)
            return RepRule(self.index_of(P.witness)) if r == AllRule(P.formula) else r
        if isinstance(P, IAnd):
            r = self.rule(P.proof)
            return RepRule(self.zero if P.i == 0 else self.one) if r == AndRule(P.formula.l, P.formula.r) else r
        if isinstance(P, REx):
            r = self.rule(P.left)
            if isinstance(r, ExRule) and r.formula == P.formula:
                return CutRule(instance(P.formula, r.witness))
            return r
        if isinstance(P, ROr):
            r = self.rule(P.left)
            if isinstance(r, OrRule) and (r.left, r.right) == (P.formula.l, P.formula.r):
                return CutRule(r.left if r.i == 0 else r.right)
            return r
        if isinstance(P, E):
            r = self.rule(P.proof)
            if isinstance(r, CutRule) and height(r.formula) > 1:
                return RepRule(self.zero)
            return r
        if isinstance(P, AxCode):
            return AX
        if isinstance(P, AndIntro):
            return AndRule(P.left, P.right)
        if isinstance(P, OrIntro):
            return OrRule(P.i, P.left, P.right)
        if isinstance(P, BEx):
            return self._bex_rule(P)
        if isinstance(P, BAll):
            r = self.rule(P.proof)
            if r == AllRule(P.formula):
                return AllRule(self.relativize(P.formula, P.beta))
            return r
        if isinstance(P, C):
            return self._c_rule(P)
        if isinstance(P, ExIntro):
            return ExRule(P.witness, P.formula)
        if isinstance(P, AllIntro):
            return AllRule(P.formula)
        if isinstance(P, RefIntro):
            return RefRule(P.formula)
        raise TypeError(f"not a code: {P!r}")

    def _bex_rule(self, P: BEx):
        r = self.rule(P.proof)
        if not self._bex_intended(P):
            return r
        phi, rel = P.formula, (lambda f: self.relativize(f, P.beta))
        if isinstance(r, ExRule) and r.formula == phi:
            return ExRule(r.witness, rel(phi))
        if isinstance(r, AndRule) and And(r.left, r.right) == phi:
            return AndRule(rel(r.left), rel(r.right))
        if isinstance(r, OrRule) and Or(r.left, r.right) == phi:
            return OrRule(r.i, rel(r.left), rel(r.right))
        if isinstance(r, AllRule) and r.formula == phi:
            return AllRule(rel(phi))
        return r

    def _c_rule(self, P: C):
        r = self.rule(P.proof)
        if not self._c_intended(P):
            return r
        if isinstance(r, CutRule) and height(r.formula) == 1:
            psi = r.formula
            beta = self._c_beta(P, self.zero if isinstance(psi, Ex) else self.one)
            return CutRule(self.relativize(psi, beta))
        if isinstance(r, RefRule):
            beta = self._c_beta(P, self.zero)
            return ExRule(StageSet(beta, self.S), r.formula)
        return r

    # heights

    def height(self, P: Code) -> EpsTerm:
        return self._cached("o", P, lambda: self._height(P))

    def _height(self, P):
        if isinstance(P, Basic):
            kind, q = self._basic_info(P.path)
            if kind == "tree":
                return Eps(P.path)
            if kind == "kp":
                return self.height(q)
            return ZERO_T
        if isinstance(P, (IAll, IAnd, BEx, BAll)):
            return self.height(P.proof)
        if isinstance(P, (REx, ROr)):
            return eps_add(self.height(P.right), self.height(P.left), self.base)
        if isinstance(P, E):
            return eps_omega_pow(self.height(P.proof))
        if isinstance(P, AxCode):
            return ZERO_T
        if isinstance(P, AndIntro):
            top = self.height(P.p0)
            if eps_compare(top, self.height(P.p1), self.base) < 0:
                top = self.height(P.p1)
            return eps_add(top, embed_ord(1), self.base)
        if isinstance(P, OrIntro):
            return eps_add(self.height(P.proof), embed_ord(1), self.base)
        if isinstance(P, C):
            if not self._c_intended(P):
                return self.height(P.proof)
            return embed_ord(self.collapse(self._c_target(P.t, self.height(P.proof))))
        if isinstance(P, (ExIntro, AllIntro, RefIntro)):
            return P.height
        raise TypeError(f"not a code: {P!r}")

    # immediate subcodes

    def child(self, P: Code, a) -> Code:
        r = self.rule(P)
        if not self.is_relevant(r, a):
            raise IrrelevantPremise(f"{a!r} is not a premise of {r!r}")
        return self._n(P, a)

    def _n(self, P: Code, a) -> Code:
        return self._cached("n", (P, a), lambda: self._child(P, a))

    def _child(self, P, a):
        if isinstance(P, Basic):
            return Basic(P.path + (a,))
        if isinstance(P, IAll):
            return IAll(P.formula, P.witness, self._n(P.proof, a))
        if isinstance(P, IAnd):
            return IAnd(P.formula, P.i, self._n(P.proof, a))
        if isinstance(P, REx):
            r = self.rule(P.left)
            if isinstance(r, ExRule) and r.formula == P.formula and a == self.one:
                return IAll(negate(P.formula), r.witness, P.right)
            return REx(P.formula, self._n(P.left, a), P.right)
        if isinstance(P, ROr):
            r = self.rule(P.left)
            if isinstance(r, OrRule) and (r.left, r.right) == (P.formula.l, P.formula.r) and a == self.one:
                return IAnd(negate(P.formula), r.i, P.right)
            return ROr(P.formula, self._n(P.left, a), P.right)
        if isinstance(P, E):
            return self._e_child(P, a)
        if isinstance(P, AxCode):
            return P
        if isinstance(P, AndIntro):
            return P.p0 if a == self.zero else P.p1
        if isinstance(P, (OrIntro, ExIntro, RefIntro)):
            return P.proof
        if isinstance(P, BEx):
            return self._bex_child(P, a)
        if isinstance(P, BAll):
            inner = self._n(P.proof, a)
            if self.rule(P.proof) == AllRule(P.formula):
                param = a.set if isinstance(a, RankedElem) else a
                outside = NotIn(param, StageSet(P.beta, self.S))
                return OrIntro(1, outside, instance(P.formula, param), BAll(P.formula, P.beta, inner))
            return BAll(P.formula, P.beta, inner)
        if isinstance(P, C):
            return self._c_child(P, a)
        if isinstance(P, AllIntro):
            param = a.set if isinstance(a, RankedElem) else a
            return FAMILIES[P.family](P.formula, param, *P.args)
        raise TypeError(f"not a code: {P!r}")

    def _e_child(self, P: E, a):
        Q = P.proof
        r = self.rule(Q)
        if not (isinstance(r, CutRule) and height(r.formula) > 1):
            return E(self._n(Q, a))
        psi = r.formula
        left, right = E(self._n(Q, self.zero)), E(self._n(Q, self.one))
        if isinstance(psi, Ex):
            return REx(psi, left, right)
        if isinstance(psi, All):
            return REx(negate(psi), right, left)
        if isinstance(psi, Or):
            return ROr(psi, left, right)
        return ROr(negate(psi), right, left)

    def _bex_child(self, P: BEx, a):
        Q = P.proof
        if not self._bex_intended(P):
            return self._n(Q, a)
        phi, beta = P.formula, P.beta
        r = self.rule(Q)
        inner = BEx(phi, beta, self._n(Q, a))
        if isinstance(r, ExRule) and r.formula == phi:
            b = r.witness
            body = BEx(instance(phi, b), beta, inner)
            if is_bounded(phi):
                return body
            member = In(b, StageSet(beta, self.S))
            return AndIntro(member, self.relativize(instance(phi, b), beta), AxCode(frozenset({member})), body)
        if isinstance(r, AndRule) and And(r.left, r.right) == phi:
            return BEx(r.left if a == self.zero else r.right, beta, inner)
        if isinstance(r, OrRule) and Or(r.left, r.right) == phi:
            return BEx(r.left if r.i == 0 else r.right, beta, inner)
        if isinstance(r, AllRule) and r.formula == phi:
            return BEx(instance(phi, a.set if isinstance(a, RankedElem) else a), beta, inner)
        return inner

    def _c_child(self, P: C, a):
        Q, t = P.proof, P.t
        if not self._c_intended(P):
            return self._n(Q, a)
        r = self.rule(Q)
        if isinstance(r, AllRule) and is_bounded(r.formula):
            b = r.formula.bound
            param = a.set if isinstance(a, RankedElem) else a
            if O.compare(self.param_rank(a), self.param_rank(b)) <= 0:
                return C(t, self._n(Q, a))
            outside = NotIn(param, b)
            return OrIntro(0, outside, instance(r.formula, param).r, AxCode(frozenset({outside})))
        if isinstance(r, CutRule) and height(r.formula) == 1:
            psi = r.formula
            if isinstance(psi, Ex):
                s = self._c_target(t, self.height(self._n(Q, self.zero)))
                beta = self.collapse(s)
                if a == self.zero:
                    return BEx(psi, beta, C(t, self._n(Q, self.zero)))
                return C(s, BAll(negate(psi), beta, self._n(Q, self.one)))
            s = self._c_target(t, self.height(self._n(Q, self.one)))
            beta = self.collapse(s)
            if a == self.zero:
                return C(s, BAll(psi, beta, self._n(Q, self.zero)))
            return BEx(negate(psi), beta, C(t, self._n(Q, self.one)))
        if isinstance(r, RefRule):
            beta = self._c_beta(P, self.zero)
            return BEx(ref_premise(r.formula), beta, C(t, self._n(Q, self.zero)))
        return C(t, self._n(Q, a))

    # cut ranks and operators

    def cut_rank(self, P: Code) -> int:
        return self._cached("d", P, lambda: self._d(P))

    def _d(self, P):
        if isinstance(P, Basic):
            return BASIC_CUT_RANK
        if isinstance(P, (IAll, IAnd, OrIntro, BEx, BAll, ExIntro, RefIntro)):
            return self.cut_rank(P.proof)
        if isinstance(P, (REx, ROr)):
            return max(self.cut_rank(P.left), self.cut_rank(P.right), height(P.formula))
        if isinstance(P, E):
            return max(2, self.cut_rank(P.proof) - 1)
        if isinstance(P, (AxCode, AllIntro)):
            return 0
        if isinstance(P, AndIntro):
            return max(self.cut_rank(P.p0), self.cut_rank(P.p1))
        if isinstance(P, C):
            return 1 if self._c_intended(P) else self.cut_rank(P.proof)
        raise TypeError(f"not a code: {P!r}")

    def h_pair(self, P: Code) -> tuple:
        return self._cached("h", P, lambda: self._h(P))

    def _h(self, P):
        k = self.k_formula
        if isinstance(P, Basic):
            return (OMEGA_T, Ord.nat(node_rank(P.path)))
        if isinstance(P, IAll):
            h0, h1 = self.h_pair(P.proof)
            return (h0, O.omax(h1, k(P.formula), self.param_rank(P.witness)))
        if isinstance(P, IAnd):
            h0, h1 = self.h_pair(P.proof)
            return (h0, O.omax(h1, k(P.formula.l if P.i == 0 else P.formula.r)))
        if isinstance(P, (REx, ROr)):
            (a0, a1), (b0, b1) = self.h_pair(P.left), self.h_pair(P.right)
            return (self._eps_max(a0, b0), O.omax(a1, b1))
        if isinstance(P, E):
            return self.h_pair(P.proof)
        if isinstance(P, AxCode):
            return (OMEGA_T, self.k_sequent(P.formulas))
        if isinstance(P, AndIntro):
            (a0, a1), (b0, b1) = self.h_pair(P.p0), self.h_pair(P.p1)
            return (self._eps_max(a0, b0), O.omax(a1, b1, k(And(P.left, P.right))))
        if isinstance(P, OrIntro):
            h0, h1 = self.h_pair(P.proof)
            return (h0, O.omax(h1, k(Or(P.left, P.right))))
        if isinstance(P, (BEx, BAll)):
            if isinstance(P, BEx) and not self._bex_intended(P):
                return self.h_pair(P.proof)
            h0, h1 = self.h_pair(P.proof)
            return (h0, O.omax(h1, k(self.relativize(P.formula, P.beta))))
        if isinstance(P, C):
            if not self._c_intended(P):
                return self.h_pair(P.proof)
            return (self._c_target(P.t, self.height(P.proof)), ZERO)
        if isinstance(P, (ExIntro, AllIntro, RefIntro)):
            return (OMEGA_T, O.omax(self.k_sequent(self.label(P)), self.k_rule(self.rule(P))))
        raise TypeError(f"not a code: {P!r}")

    def _eps_max(self, a, b):
        return b if eps_compare(a, b, self.base) < 0 else a

    # interpretation

    def interpret(self, P: Code, path) -> PreproofNode:
        path = tuple(path)

        def go():
            if not path:
                Q = P
            else:
                parent = self.interpret(P, path[:-1]).code
                a = path[-1]
                if not self.is_relevant(self.rule(parent), a):
                    raise PathNotInTree(f"{a!r} is not a premise at {path[:-1]!r}")
                Q = self._n(parent, a)
            return PreproofNode(Q, path, self.label(Q), self.rule(Q), self.height(Q))
        return self._cached("node", (P, path), go)

    # local correctness

    def check_local(self, P: Code, fuel: int = 10_000, operators: bool = True) -> NodeReport:
        rep = NodeReport(())
        base = self.base
        l, r, o, d = self.label(P), self.rule(P), self.height(P), self.cut_rank(P)
        kids = [(a, self._n(P, a)) for a in self.relevant(r)]

        def lt(x, y):
            return eps_compare(x, y, base) < 0

        def le(x, y):
            return eps_compare(x, y, base) <= 0

        rep.verdicts["L"] = "pass"
        if isinstance(r, AxRule):
            if not any(is_delta0(f) and is_closed(f) and eval_delta0(f, self.S) for f in l):
                rep.fail("L", "no true bounded formula")
        else:
            side = self._side_formula
            for a, Q in kids:
                lq, oq = self.label(Q), self.height(Q)
                extra = side(r, a)
                if not lq <= l | extra:
                    rep.fail("L", ("label", a, sorted(map(to_sexpr, lq - l - extra))))
                if isinstance(r, (AllRule, ExRule)):
                    if not le(eps_add(oq, OMEGA_ORD_T, base), o):
                        rep.fail("L", ("height+w", a))
                elif not lt(oq, o):
                    rep.fail("L", ("height", a))
            if isinstance(r, (AndRule, OrRule)):
                main = And(r.left, r.right) if isinstance(r, AndRule) else Or(r.left, r.right)
                if main not in l:
                    rep.fail("L", ("principal", to_sexpr(main)))
            if isinstance(r, (AllRule, ExRule, RefRule)) and r.formula not in l:
                rep.fail("L", ("principal", to_sexpr(r.formula)))
            if isinstance(r, ExRule) and not lt(embed_ord(self.param_rank(r.witness)), o):
                rep.fail("L", ("witness rank", r.witness))
            if isinstance(r, RefRule) and (not le(OMEGA_T, o) or not is_ref_formula(r.formula)):
                rep.fail("L", ("reflection", to_sexpr(r.formula)))

        if isinstance(r, CutRule):
            rep.verdicts["C1"] = "pass" if height(r.formula) < d else "fail"
            if rep.verdicts["C1"] == "fail":
                rep.witnesses["C1"] = (height(r.formula), d)
        if kids:
            bad = [a for a, Q in kids if self.cut_rank(Q) > d]
            rep.verdicts["C2"] = "fail" if bad else "pass"
            if bad:
                rep.witnesses["C2"] = bad[0]

        if operators:
            self._check_operators(P, rep, kids, fuel)
        return rep

    def _side_formula(self, r, a) -> frozenset:
        if isinstance(r, (AndRule, OrRule)):
            i = (0 if a == self.zero else 1) if isinstance(r, AndRule) else r.i
            return frozenset({r.left if i == 0 else r.right})
        if isinstance(r, AllRule):
            return frozenset({instance(r.formula, a.set if isinstance(a, RankedElem) else a)})
        if isinstance(r, ExRule):
            return frozenset({instance(r.formula, r.witness)})
        if isinstance(r, CutRule):
            return frozenset({r.formula if a == self.zero else negate(r.formula)})
        if isinstance(r, RefRule):
            return frozenset({ref_premise(r.formula)})
        return frozenset()

    def _check_operators(self, P, rep, kids, fuel):
        h0, h1 = self.h_pair(P)
        op = ControlOperator(h0, frozenset({h1}))

        def member(o, s):
            try:
                return "pass" if h_member(o, self.theta, s, self.base, fuel) else "fail"
            except FuelExhausted:
                return "unknown"

        rep.verdicts["H1"] = member(op, self.param_bound(P))
        if rep.verdicts["H1"] == "fail":
            rep.witnesses["H1"] = self.param_bound(P)
        if not kids:
            return
        rep.verdicts["H2"] = "pass"
        rep.verdicts["H3"] = "pass"
        for a, Q in kids:
            q0, q1 = self.h_pair(Q)
            if eps_compare(q0, h0, self.base) > 0:
                rep.fail("H2", a)
            sub = op.with_params(self.param_rank(a))
            for s in (q1, self.height(Q)):
                v = member(sub, s)
                if v == "fail":
                    rep.fail("H3", (a, s))
                elif v == "unknown" and rep.verdicts["H3"] == "pass":
                    rep.verdicts["H3"] = "unknown"

    # sampling and verification

    def sample_paths(self, P: Code, depth: int = 3, walks: int = 200, walk_depth: int = 8,
                     seed: int = 0) -> list:
        """All paths up to ``depth`` plus seeded random walks, without repeats."""
        seen, out = set(), []

        def add(p):
            if p not in seen:
                seen.add(p)
                out.append(p)

        def premises(p):
            try:
                return self.relevant(self.interpret(P, p).rule)
            except WitnessScanExhausted:
                return []

        frontier = [()]
        add(())
        for _ in range(depth):
            nxt = []
            for p in frontier:
                for a in premises(p):
                    nxt.append(p + (a,))
                    add(p + (a,))
            frontier = nxt
        rng = random.Random(seed)
        for _ in range(walks):
            p = ()
            for _ in range(walk_depth):
                choices = premises(p)
                if not choices:
                    break
                p = p + (rng.choice(choices),)
                add(p)
        return out

    def verify(self, P: Code, depth: int = 3, walks: int = 200, walk_depth: int = 8, seed: int = 0,
               fuel: int = 10_000, operators: bool = True, max_restarts: int = 50) -> VerifyReport:
        restarts = 0
        while True:
            try:
                rep = self._verify_once(P, depth, walks, walk_depth, seed, fuel, operators)
                rep.restarts = restarts
                return rep
            except InconsistentExtension:
                restarts += 1
                if restarts > max_restarts:
                    raise
                self.restart_oracle()

    def _verify_once(self, P, depth, walks, walk_depth, seed, fuel, operators) -> VerifyReport:
        rep = VerifyReport()
        for path in self.sample_paths(P, depth, walks, walk_depth, seed):
            try:
                node = self.interpret(P, path)
                nr = self.check_local(node.code, fuel, operators)
            except WitnessScanExhausted:
                rep.truncated += 1
                continue
            nr.path = path
            rep.add(nr)
            if isinstance(node.rule, CutRule):
                rep.max_cut_height = max(rep.max_cut_height, height(node.rule.formula))
            if isinstance(node.rule, RefRule):
                rep.has_ref = True
            if not below_omega(node.height):
                rep.all_below_omega = False
        return rep

    # soundness below W

    def sound_eval(self, P: Code, max_depth: int = 200, max_branching: int = 64) -> Formula:
        """A formula of the end-sequent that the preproof makes true (height must be < W)."""
        if not self.label(P):
            raise EmptyEndSequent("a preproof of height below W cannot have an empty end-sequent")
        if not below_omega(self.height(P)):
            raise ValueError("soundness evaluation needs height below W")
        if len(self.alphabet) > max_branching:
            raise UnboundedBranching(f"{len(self.alphabet)} premises per universal rule")
        return self._sound(P, max_depth)

    def _sound(self, P, budget):
        if budget < 0:
            raise RecursionError("soundness evaluation did not bottom out")
        l, r = self.label(P), self.rule(P)
        if isinstance(r, AxRule):
            for f in sorted(l, key=to_sexpr):
                if is_delta0(f) and is_closed(f) and eval_delta0(f, self.S):
                    return f
            raise AssertionError("axiom without a true bounded formula")
        if isinstance(r, RefRule):
            raise AssertionError("reflection cannot occur below W")
        if isinstance(r, RepRule):
            return self._sound(self._n(P, r.index), budget - 1)
        if isinstance(r, CutRule):
            f = self._sound(self._n(P, self.zero), budget - 1)
            if f != r.formula:
                return f
            g = self._sound(self._n(P, self.one), budget - 1)
            if g != negate(r.formula):
                return g
            raise AssertionError("both cut premises evaluate to the cut formulas")
        if isinstance(r, AndRule):
            for a, part in ((self.zero, r.left), (self.one, r.right)):
                f = self._sound(self._n(P, a), budget - 1)
                if f != part or f in l:
                    return f
            return And(r.left, r.right)
        if isinstance(r, OrRule):
            f = self._sound(self._n(P, self.zero), budget - 1)
            return f if f in l else Or(r.left, r.right)
        if isinstance(r, ExRule):
            f = self._sound(self._n(P, self.zero), budget - 1)
            return f if f in l else r.formula
        for a in self.alphabet:
            f = self._sound(self._n(P, a), budget - 1)
            if f in l:
                return f
        return r.formula


# text form

def _param_sexpr(x) -> str:
    if isinstance(x, RankedElem):
        return set_to_sexpr(x.set)
    if isinstance(x, HFSet):
        return set_to_sexpr(x)
    return repr(x)


def rule_to_sexpr(r) -> str:
    if isinstance(r, AxRule):
        return "(ax)"
    if isinstance(r, AndRule):
        return f"(and {to_sexpr(r.left)} {to_sexpr(r.right)})"
    if isinstance(r, OrRule):
        return f"(or{r.i} {to_sexpr(r.left)} {to_sexpr(r.right)})"
    if isinstance(r, AllRule):
        return f"(all {to_sexpr(r.formula)})"
    if isinstance(r, ExRule):
        return f"(ex {_param_sexpr(r.witness)} {to_sexpr(r.formula)})"
    if isinstance(r, CutRule):
        return f"(cut {to_sexpr(r.formula)})"
    if isinstance(r, RefRule):
        return f"(ref {to_sexpr(r.formula)})"
    return f"(rep {_param_sexpr(r.index)})"


def code_to_sexpr(P: Code) -> str:
    name = type(P).__name__
    if isinstance(P, Basic):
        return "(Basic" + "".join(" " + _param_sexpr(a) for a in P.path) + ")"
    parts = []
    for f in fields(P):
        v = getattr(P, f.name)
        if isinstance(v, Code):
            parts.append(code_to_sexpr(v))
        elif isinstance(v, Formula):
            parts.append(to_sexpr(v))
        elif isinstance(v, frozenset):
            parts.append("(" + " ".join(sorted(to_sexpr(x) for x in v)) + ")")
        elif isinstance(v, (HFSet, RankedElem)):
            parts.append(_param_sexpr(v))
        else:
            parts.append(repr(v))
    return f"({name} " + " ".join(parts) + ")"


def node_summary(system: CodeSystem, node: PreproofNode) -> dict:
    return {
        "path": [_param_sexpr(a) for a in node.path],
        "sequent": sorted(to_sexpr(f) for f in node.label),
        "rule": rule_to_sexpr(node.rule),
        "height": to_text(node.height, system.base),
        "d": system.cut_rank(node.code),
    }


def pipeline_codes(iterations: int = 6) -> tuple:
    """Basic at the root, its E-iterate, and the collapsed E-iterate."""
    b = Basic(())
    e = b
    for _ in range(iterations):
        e = E(e)
    return b, e, C(OMEGA_T, e)
