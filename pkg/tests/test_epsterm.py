import itertools
from functools import cmp_to_key

import pytest
from hypothesis import given, settings, strategies as st

from kpcollapse import ordinal as O
from kpcollapse.epsterm import (OMEGA_T, ONE_T, ZERO_T, Eps, IndexZero, NoDifference,
                                NotEmbedding, Sum, SYM_ZERO, TermSyntaxError, below_omega, embed_ord,
                                eps_add, eps_compare, eps_omega_pow, eps_star, eps_tower, eps_validate,
                                from_ord, o_interpret, parse_term, subtract, sym_add, sym_compare, to_text,
                                unembed)
from kpcollapse.ordinal import ONE, OMEGA, Ord

from conftest import ordinals
from epsgen import BASE3, BASE6, all_terms, eps_terms


def cmp(s, t, base=BASE6):
    return eps_compare(s, t, base)


def add(s, t, base=BASE6):
    return eps_add(s, t, base)


def o(s, alpha=1):
    return o_interpret(s, lambda x: Ord.nat(x), 0, alpha)


E = [Eps(i) for i in range(6)]


# validity

def test_validate_examples():
    assert eps_validate(ZERO_T, 0, BASE6)
    assert not eps_validate(Sum(((E[0], ONE),)), None, BASE6)
    assert eps_validate(Sum(((E[0], Ord.nat(2)),)), None, BASE6)
    assert not eps_validate(Sum(((E[0], ONE), (E[1], ONE))), None, BASE6)
    assert eps_validate(Sum(((E[1], ONE), (E[0], ONE))), None, BASE6)
    assert not eps_validate(Sum(((ZERO_T, Ord.nat(0)),)), None, BASE6)


def test_validate_respects_index():
    # rank of element 5 is 3, so it needs 3 < w^alpha: fine at alpha 1
    assert eps_validate(E[5], 1, BASE6) and not eps_validate(E[5], 0, BASE6)
    assert not eps_validate(embed_ord(OMEGA), 1, BASE6)
    assert eps_validate(embed_ord(OMEGA), 2, BASE6)


@given(eps_terms(), st.integers(1, 3))
def test_validity_and_order_stable_under_larger_index(s, alpha):
    if eps_validate(s, alpha, BASE6):
        assert eps_validate(s, alpha + 1, BASE6)


# comparison

def test_compare_examples():
    assert cmp(ZERO_T, E[0]) < 0
    assert cmp(E[1], E[2]) < 0 and cmp(E[2], E[1]) > 0
    assert cmp(E[3], OMEGA_T) > 0
    assert cmp(E[1], Sum(((E[1], Ord.nat(2)),))) < 0
    assert cmp(E[2], Sum(((E[1], Ord.nat(2)),))) > 0
    assert cmp(embed_ord(5), OMEGA_T) < 0


def test_exhaustive_order_over_three_elements():
    terms = all_terms(BASE3, 6)
    assert len(terms) == 799
    key = cmp_to_key(lambda a, b: eps_compare(a, b, BASE3))
    ordered = sorted(terms, key=key)
    # a total antisymmetric relation is transitive iff it agrees with its own sort
    for i, a in enumerate(ordered):
        assert eps_compare(a, a, BASE3) == 0
        for b in ordered[i + 1:]:
            assert eps_compare(a, b, BASE3) < 0 and eps_compare(b, a, BASE3) > 0


def test_exhaustive_agreement_with_interpretation():
    terms = all_terms(BASE3, 5)
    vals = {t: o_interpret(t, lambda x: Ord.nat(x), 0, 1) for t in terms}
    for s, t in itertools.product(terms, repeat=2):
        assert sym_compare(vals[s], vals[t]) == eps_compare(s, t, BASE3)


@given(eps_terms(), eps_terms())
@settings(max_examples=300)
def test_interpretation_agrees_with_compare(s, t):
    assert sym_compare(o(s), o(t)) == cmp(s, t)


@given(eps_terms(), eps_terms(), st.integers(0, 2))
@settings(max_examples=200)
def test_interpretation_at_other_eta_and_alpha(s, t, alpha):
    f = lambda x: Ord.nat(2 * x + 1)  # noqa: E731
    a, b = o_interpret(s, f, OMEGA, alpha), o_interpret(t, f, OMEGA, alpha)
    assert sym_compare(a, b) == cmp(s, t)


def test_interpretation_examples():
    assert o(ZERO_T) == SYM_ZERO
    for beta in (ONE, Ord.nat(7), OMEGA + 3):
        assert o(embed_ord(beta)) == from_ord(beta)
    with pytest.raises(NotEmbedding):
        o_interpret(E[0], lambda x: Ord.nat(5 - x), 0, 1, BASE6)


# arithmetic

def test_addition_cases():
    assert add(E[2], E[2]) == Sum(((E[2], Ord.nat(2)),))
    assert add(E[1], E[2]) == E[2]
    assert add(E[2], E[1]) == Sum(((E[2], ONE), (E[1], ONE)))
    assert add(ZERO_T, E[1]) == E[1] and add(E[1], ZERO_T) == E[1]
    assert add(embed_ord(3), OMEGA_T) == OMEGA_T
    assert add(OMEGA_T, embed_ord(3)) == Sum(((ONE_T, ONE), (ZERO_T, Ord.nat(3))))
    assert add(embed_ord(OMEGA), embed_ord(2)) == embed_ord(OMEGA + 2)
    with pytest.raises(IndexZero):
        eps_add(E[0], E[1], BASE6, alpha=0)


def test_literal_reordering_fails_standard_associativity_holds():
    one, w = embed_ord(1), OMEGA_T
    # s + (t + r) versus (s + r) + t with s = 0, t = 1, r = W
    assert add(ZERO_T, add(one, w)) == w
    assert add(add(ZERO_T, w), one) != w
    assert add(ZERO_T, add(one, w)) == add(add(ZERO_T, one), w)


@given(eps_terms(), eps_terms())
@settings(max_examples=300)
def test_addition_matches_interpretation(s, t):
    assert o(add(s, t)) == sym_add(o(s), o(t))
    assert eps_validate(add(s, t), None, BASE6)


@given(eps_terms(), eps_terms(), eps_terms())
@settings(max_examples=200)
def test_arithmetic_laws(s, t, r):
    ws = eps_omega_pow(s)
    assert cmp(s, ws) <= 0
    if cmp(s, t) < 0:
        assert cmp(ws, eps_omega_pow(t)) < 0
    if cmp(t, r) < 0:
        assert cmp(add(s, t), add(s, r)) < 0
        assert cmp(add(t, s), add(r, s)) <= 0
    wt = eps_omega_pow(t)
    if cmp(s, wt) < 0:
        assert add(s, wt) == wt
    assert add(s, add(t, r)) == add(add(s, t), r)


@given(eps_terms(), eps_terms())
@settings(max_examples=300)
def test_subtraction(s, t):
    lo, hi = (s, t) if cmp(s, t) <= 0 else (t, s)
    r = subtract(lo, hi, BASE6)
    assert add(lo, r) == hi and eps_validate(r, None, BASE6)
    if cmp(lo, hi) < 0:
        with pytest.raises(NoDifference):
            subtract(hi, lo, BASE6)


def test_omega_powers():
    assert eps_omega_pow(E[3]) == E[3]
    assert eps_omega_pow(ZERO_T) == ONE_T == Sum(((ZERO_T, ONE),))
    assert eps_tower(2, ZERO_T) == OMEGA_T
    assert eps_tower(3, E[0]) == E[0]


# ranks and the embedding

def test_star_examples():
    assert eps_star(OMEGA_T, BASE6) == O.ZERO
    assert eps_star(E[5], BASE6) == O.star(Ord.nat(3))
    for beta in (ONE, OMEGA, O.omega_mul_nat(OMEGA, 2) + 1, O.omega_pow(OMEGA)):
        assert eps_star(embed_ord(beta), BASE6) == O.star(beta)


@given(eps_terms(), eps_terms())
@settings(max_examples=300)
def test_star_laws(s, t):
    assert eps_star(add(s, t), BASE6) <= O.omax(eps_star(s, BASE6), eps_star(t, BASE6))
    assert eps_star(eps_omega_pow(s), BASE6) <= eps_star(s, BASE6)
    st_ = eps_star(s, BASE6)
    assert eps_validate(s, O.omega_pow(st_ + ONE), BASE6)


@given(ordinals(), ordinals())
def test_embedding_monotone(a, b):
    assert cmp(embed_ord(a), embed_ord(b)) == O.compare(a, b)
    assert unembed(embed_ord(a)) == a


def test_terms_below_omega_are_embedded():
    assert embed_ord(0) == ZERO_T
    for t in all_terms(BASE3, 6):
        if eps_compare(t, OMEGA_T, BASE3) < 0:
            assert below_omega(t) and embed_ord(unembed(t)) == t
        else:
            assert not below_omega(t)


# text syntax

@given(eps_terms())
def test_text_roundtrip(s):
    assert parse_term(to_text(s, BASE6), BASE6) == s


def test_text_examples_and_errors():
    assert to_text(OMEGA_T, BASE6) == "W^(W^(0)*1)*1"
    assert parse_term("W^(0)*(w+1)", BASE6) == embed_ord(OMEGA + 1)
    for bad in ("W^(0)", "eps(9)", "W^(0)*1 - 2", "W^(0*1", "x"):
        with pytest.raises((TermSyntaxError, ValueError)):
            parse_term(bad, BASE6)
