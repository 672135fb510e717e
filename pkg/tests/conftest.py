import functools

import pytest
from hypothesis import strategies as st

from kpcollapse.hfset import EMPTY, And, Eq, HFSet, In, NotEq, NotIn, Or, Var, all_in, ex_in, hf
from kpcollapse.lhier import build_stages
from kpcollapse.ordinal import ZERO, Ord
from kpcollapse.proofcode import CodeSystem
from kpcollapse.searchtree import SearchTree

U01 = hf(EMPTY, hf(EMPTY))


def cnf(*pairs):
    """cnf((e, c), ...) with exponents given as ints or Ords."""
    return Ord(tuple((Ord.coerce(e), c) for e, c in pairs))


@st.composite
def ordinals(draw, depth=2):
    if depth == 0:
        return Ord.nat(draw(st.integers(0, 4)))
    n = draw(st.integers(0, 3))
    exps = draw(st.lists(ordinals(depth=depth - 1), min_size=n, max_size=n))
    out = ZERO
    for e in exps:
        out = out + Ord(((e, draw(st.integers(1, 3))),))
    return out


hfsets = st.recursive(st.just(EMPTY), lambda kids: st.frozensets(kids, max_size=3).map(HFSet), max_leaves=8)


@st.composite
def delta0(draw, sets=None, free=0, depth=3):
    """A bounded formula whose free variables are below ``free``."""
    sets = sets or [EMPTY, hf(EMPTY), U01]
    terms = [st.sampled_from(sets)] + ([st.sampled_from([Var(i) for i in range(free)])] if free else [])
    term = st.one_of(*terms)
    if depth == 0 or draw(st.integers(0, 3)) == 0:
        kind = draw(st.sampled_from([In, NotIn, Eq, NotEq]))
        return kind(draw(term), draw(term))
    k = draw(st.integers(0, 3))
    if k < 2:
        kind = (And, Or)[k]
        return kind(draw(delta0(sets, free, depth - 1)), draw(delta0(sets, free, depth - 1)))
    bound = draw(term)
    body = draw(delta0(sets, free + 1, depth - 1))
    return all_in(bound, body) if k == 2 else ex_in(bound, body)


@functools.lru_cache(maxsize=None)
def universe(n=2):
    return build_stages(U01, n=n)


@functools.lru_cache(maxsize=None)
def tree(n=2, alpha=2):
    return SearchTree(universe(n), alpha)


@pytest.fixture
def desk_tree():
    return tree()


@pytest.fixture
def system():
    return CodeSystem(tree())


ACCEPTANCE: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
