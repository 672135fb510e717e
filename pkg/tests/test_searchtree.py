import itertools
import json
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from kpcollapse.hfset import (EMPTY, All, And, Eq, Ex, HFSet, In, NotEq, NotIn, Or, Var, eval_delta0,
                              hf, negate, parse_formula, set_to_sexpr, to_sexpr, transitive_closure)
from kpcollapse.searchtree import (C0, NotANode, NotExtensional, NotWellFounded, SearchNode, SearchTree,
                                   axiom_name, check_branch_properties, collection, dump_node, kb_compare,
                                   kp_axiom, mostowski_collapse, node_rank, redex_index)

from conftest import U01, delta0, tree, universe

ONE = hf(EMPTY)
GOLDEN = Path(__file__).parent / "golden"


def golden(n, depth):
    lines = (GOLDEN / f"search_tree_n{n}_d{depth}.jsonl").read_text().splitlines()
    return sorted(json.dumps(json.loads(l), sort_keys=True) for l in lines)


def tree_records(t, depth):
    out = [{"path": [set_to_sexpr(a.set) for a in p], "label": [to_sexpr(f) for f in t.label(p)]}
           for p in t.nodes(depth)]
    return sorted(json.dumps(r, sort_keys=True) for r in out)


# axioms

def test_first_axioms_in_order():
    names = [axiom_name(k) for k in range(5)]
    assert names == ["equality", "extensionality", "pairing", "union", "infinity"]
    ext = kp_axiom(1)
    assert ext == parse_formula(to_sexpr(ext))
    assert isinstance(ext, All) and isinstance(ext.body, All) and isinstance(ext.body.body, Or)
    assert isinstance(kp_axiom(4), Ex)


def test_later_axioms_alternate_schemes():
    assert axiom_name(5).startswith("separation") and axiom_name(6).startswith("collection")
    assert kp_axiom(12) == kp_axiom(12)
    with pytest.raises(ValueError):
        kp_axiom(-1)


def test_collection_matrices_are_disjunctions():
    for k in range(6, 80, 2):
        phi = kp_axiom(k)
        while isinstance(phi, All) and not isinstance(phi.body, Or):
            phi = phi.body
        # forall x (hyp or concl); the matrix sits in the conclusion's innermost bounded existential
        concl = phi.body.r
        inner = concl.body.body.r.body.r
        assert isinstance(inner, Or), axiom_name(k)
    with pytest.raises(ValueError):
        collection(In("x", "y"), 0)


def test_axiom_parameter_bound():
    for k in range(5, 60):
        assert int(axiom_name(k).split("[")[1].split(",")[0]) <= C0


# expansion

def test_root_child_negates_first_axiom():
    t = tree()
    ((a, lab),) = t.children(())
    assert a == t.zero and lab == (negate(kp_axiom(0)),)


def test_goldens_depth_4():
    for n in (1, 2):
        assert tree_records(tree(2, n), 4) == golden(n, 4)


def test_goldens_depth_8():
    for n in (1, 2):
        assert tree_records(tree(2, n), 8) == golden(n, 8)


def test_universal_redex_branches_over_alphabet():
    t = SearchTree(universe(2), 1)
    phi = All(Eq(Var(0), U01))
    t._labels[(t.zero,)] = (phi,)
    kids = t.children((t.zero,))
    assert [a for a, _ in kids] == t.alphabet and len(kids) == 4
    for a, lab in kids:
        assert lab == (phi, Eq(a.set, U01))


def test_leaf_on_true_delta0():
    t = SearchTree(universe(2), 1)
    t._labels[(t.zero,)] = (NotIn(EMPTY, ONE), In(EMPTY, ONE))
    assert t.children((t.zero,)) == ()


def test_repetition_on_false_primes():
    t = SearchTree(universe(2), 1)
    lab = (NotIn(EMPTY, ONE), Eq(EMPTY, ONE))
    t._labels[(t.zero,)] = lab
    assert t.children((t.zero,)) == ((t.zero, lab),)


def test_existential_skips_present_instances():
    t = SearchTree(universe(2), 1)
    phi = Ex(Eq(Var(0), U01))
    # the witness list starts u_0, path entry 0 (also the empty set), u_1
    assert [w.set for w in t.witness_list((t.zero,))] == [EMPTY, EMPTY, ONE]
    t._labels[(t.zero,)] = (phi, Eq(EMPTY, U01))
    ((_, lab),) = t.children((t.zero,))
    assert lab == (Eq(EMPTY, U01), phi, Eq(ONE, U01))


def test_not_a_node():
    t = tree()
    with pytest.raises(NotANode):
        t.label((t.one,))
    with pytest.raises(NotANode):
        t.expand(SearchNode((t.one,), ()))
    assert not t.contains((t.one,))


def test_expansion_deterministic():
    a, b = SearchTree(universe(2), 2), SearchTree(universe(2), 2)
    for p in a.nodes(6):
        assert a.label(p) == b.label(p) and a.children(p) == b.children(p)


def test_redex_neighbours_shift_left():
    t = tree()
    checked = 0
    for p in t.nodes(8):
        if len(p) % 2 == 0:
            continue
        lab = t.label(p)
        r = redex_index(lab)
        if r is None:
            continue
        for _, child in t.children(p):
            assert child[r:len(lab) - 1] == lab[r + 1:]
            assert child[len(lab) - 1] == lab[r]
            checked += 1
    assert checked > 0


def test_dump_node():
    t = tree()
    text = dump_node(t, (t.zero,))
    assert text.startswith("(node (path (0 (set)))") and "(redex 0)" in text


# compatibility, order, rank

def all_sequences(elems, length):
    for n in range(length + 1):
        yield from itertools.product(elems, repeat=n)


def test_trees_compatible_across_stages():
    S = universe(2)
    trees = {m: SearchTree(S, m) for m in range(3)}
    for m, n in itertools.combinations(range(3), 2):
        small = set(trees[m].nodes(4))
        big = {p for p in trees[n].nodes(4) if all(a.set in S.stages[m] for a in p)}
        assert small == big
        for s, t in itertools.product(sorted(small, key=len), repeat=2):
            assert trees[m].kb_compare(s, t) == trees[n].kb_compare(s, t)


def test_kb_order_laws():
    S = universe(2)
    seqs = list(all_sequences(S.stage_elems(1), 2)) + tree(2, 1).nodes(4)
    seqs = list(dict.fromkeys(seqs))
    for s, t in itertools.product(seqs, repeat=2):
        c = kb_compare(s, t, S)
        assert c == -kb_compare(t, s, S) and (c == 0) == (s == t)
        if len(s) > len(t) and s[:len(t)] == t:
            assert c < 0
    for s, t, r in itertools.permutations(seqs[:40], 3):
        if kb_compare(s, t, S) < 0 and kb_compare(t, r, S) < 0:
            assert kb_compare(s, r, S) < 0
    assert all(kb_compare(s, (), S) <= 0 for s in seqs)


def test_node_rank():
    S = universe(2)
    assert node_rank(()) == 0
    assert node_rank((S.ranked(EMPTY),)) == 0
    trees = {m: SearchTree(S, m) for m in range(3)}
    for p in trees[2].nodes(6):
        assert node_rank(p) == min(m for m in range(2) if trees[m + 1].contains(p))
    for p in all_sequences(S.stage_elems(2), 2):
        assert node_rank(p) == min(m for m in range(2) if all(a.set in S.stages[m + 1] for a in p))


# branch properties

def test_real_prefixes_have_no_violations():
    t = tree()
    for p in t.nodes(8):
        labels = [t.label(p[:i]) for i in range(len(p) + 1)]
        rep = check_branch_properties(p, labels, t)
        assert "a" not in rep.clauses()
        assert rep.ok(), rep.violations


def test_true_prime_flags_b():
    t = tree()
    rep = check_branch_properties((t.zero,), [(), (In(EMPTY, ONE),)], t)
    assert "b" in rep.clauses()


def test_conjunction_without_conjuncts_flags_c():
    t = tree()
    phi = And(NotIn(EMPTY, ONE), NotEq(EMPTY, EMPTY))
    rep = check_branch_properties((t.zero, t.zero), [(), (phi,), (phi,)], t)
    assert "c" in rep.clauses()


def test_foreign_parameter_flags_a():
    t = tree()
    odd = hf(hf(hf(ONE)))
    rep = check_branch_properties((t.zero,), [(), (NotIn(odd, odd),)], t)
    assert "a" in rep.clauses()


# Mostowski collapse

def test_collapse_of_transitive_set_is_identity():
    elems = sorted(transitive_closure([U01, hf(U01)]))
    member = {(x, y) for x in elems for y in elems if x in y}
    image, out = mostowski_collapse(elems, member)
    assert all(image[e] == e for e in elems)
    assert out == HFSet(elems)


def test_collapse_of_abstract_chain():
    image, out = mostowski_collapse(["a", "b"], {("b", "a")})
    assert image == {"b": EMPTY, "a": ONE} and out == U01


def test_collapse_errors():
    with pytest.raises(NotExtensional):
        mostowski_collapse(["p", "q"], set())
    with pytest.raises(NotWellFounded):
        mostowski_collapse(["p", "q"], {("p", "q"), ("q", "p")})


def structure_eval(phi, inverse, member, elems, env=()):
    """Truth in the abstract structure; parameters are mapped back through ``inverse``."""
    def val(t):
        return env[t.i] if isinstance(t, Var) else inverse[t]

    def mem(a, b):
        return (a, b) in member

    if isinstance(phi, In):
        return mem(val(phi.a), val(phi.b))
    if isinstance(phi, NotIn):
        return not mem(val(phi.a), val(phi.b))
    if isinstance(phi, Eq):
        return val(phi.a) == val(phi.b)
    if isinstance(phi, NotEq):
        return val(phi.a) != val(phi.b)
    if isinstance(phi, And):
        return structure_eval(phi.l, inverse, member, elems, env) and structure_eval(phi.r, inverse, member, elems, env)
    if isinstance(phi, Or):
        return structure_eval(phi.l, inverse, member, elems, env) or structure_eval(phi.r, inverse, member, elems, env)
    guard = phi.body.l.b
    bound = env[guard.i - 1] if isinstance(guard, Var) else inverse[guard]
    rng = [x for x in elems if mem(x, bound)]
    results = (structure_eval(phi.body.r, inverse, member, elems, (x,) + tuple(env)) for x in rng)
    return all(results) if isinstance(phi, All) else any(results)


@given(st.data())
@settings(max_examples=20, deadline=None)
def test_collapse_preserves_delta0_truth(data):
    rng = random.Random(data.draw(st.integers(0, 10 ** 6)))
    sets = sorted(transitive_closure([U01, hf(U01), hf(ONE)]))
    labels = list(range(len(sets)))
    rng.shuffle(labels)
    name = dict(zip(sets, labels))
    member = {(name[x], name[y]) for x in sets for y in sets if x in y}
    image, _ = mostowski_collapse(labels, member)
    inverse = {v: k for k, v in image.items()}
    phi = data.draw(delta0(sets=[image[l] for l in labels], depth=3))
    assert structure_eval(phi, inverse, member, labels) == eval_delta0(phi)
