import itertools

import pytest
from hypothesis import given

from kpcollapse import ordinal as O
from kpcollapse.ordinal import ONE, OMEGA, ZERO, Ord

from conftest import cnf, ordinals


def w_times(n):
    return cnf((1, n))


def small_lattice():
    """All values with exponents in {0, 1, w}, coefficients <= 3, length <= 3."""
    exps = [OMEGA, ONE, ZERO]
    out = [ZERO]
    for n in range(1, 4):
        for chosen in itertools.combinations(exps, n):
            for cs in itertools.product(range(1, 4), repeat=n):
                out.append(Ord(tuple(zip(chosen, cs))))
    return out


def test_compare_examples():
    assert O.compare(ZERO, ZERO) == 0
    assert O.compare(ONE, OMEGA) == -1
    assert O.compare(w_times(2) + ONE, w_times(2)) == 1


def test_compare_agrees_with_brute_force_rank_below_omega_squared():
    # w*a + b is the (w*a + b)-th ordinal; compare the pairs lexicographically
    vals = [(a, b) for a in range(4) for b in range(4)]
    for (a, b), (c, d) in itertools.product(vals, repeat=2):
        x, y = w_times(a) + Ord.nat(b), w_times(c) + Ord.nat(d)
        want = ((a, b) > (c, d)) - ((a, b) < (c, d))
        assert O.compare(x, y) == want


def test_add_examples():
    assert OMEGA + ONE == cnf((1, 1), (0, 1))
    assert ONE + OMEGA == OMEGA
    assert (w_times(2) + Ord.nat(3)) + OMEGA == w_times(3)


def simulate(x):
    """Ordinals below w^2 as (a, b) meaning w*a + b."""
    if x.is_zero():
        return (0, 0)
    a = sum(c for e, c in x.terms if e == ONE)
    b = sum(c for e, c in x.terms if e.is_zero())
    return (a, b)


def test_add_matches_enumeration_below_omega_squared():
    # counting b' more steps after w*a+b, then w*a' more: the oracle
    for a, b, c, d in itertools.product(range(3), repeat=4):
        x, y = w_times(a) + Ord.nat(b), w_times(c) + Ord.nat(d)
        want = (a + c, d) if c else (a, b + d)
        assert simulate(x + y) == want


def test_omega_pow_examples():
    assert O.omega_pow(ZERO) == ONE
    assert O.omega_pow(ONE) == OMEGA
    ww = O.omega_pow(OMEGA)
    for n in range(6):
        assert O.omega_pow(Ord.nat(n)) < ww


def test_star_examples():
    assert O.star(ZERO) == ZERO
    assert O.star(OMEGA) == ONE
    a = cnf((2, 3), (1, 1))
    assert O.star(a) == Ord.nat(2)
    assert O.omega_pow(O.star(a)) <= a < O.omega_pow(O.succ(O.star(a)))


def test_order_laws_on_lattice():
    vals = small_lattice()
    for a in vals:
        assert not a < a
    for a, b in itertools.product(vals, repeat=2):
        assert sum((a < b, a == b, b < a)) == 1
    sample = vals[::3]
    for a, b, c in itertools.product(sample, repeat=3):
        if a < b and b < c:
            assert a < c


def test_canonical_form_normalizes():
    messy = Ord(((ZERO, 2), (ONE, 1)))  # 2 + w
    assert messy == OMEGA
    assert Ord(((ONE, 1), (ONE, 2))) == w_times(3)


def test_text_roundtrip_examples():
    for text in ["0", "w", "w*2 + 1", "w^(w)*3 + w^(2) + 5"]:
        assert O.to_str(O.parse(text)) == text
    with pytest.raises(O.ParseError):
        O.parse("w*w")


@given(ordinals(), ordinals(), ordinals())
def test_add_associative(a, b, c):
    assert (a + b) + c == a + (b + c)


@given(ordinals(), ordinals(), ordinals())
def test_add_monotone(a, b, c):
    if b < c:
        assert a + b < a + c
        assert b + a <= c + a


@given(ordinals())
def test_star_brackets(a):
    if not a.is_zero():
        s = O.star(a)
        assert O.omega_pow(s) <= a < O.omega_pow(O.succ(s))


@given(ordinals(), ordinals())
def test_star_subadditive(a, b):
    assert O.star(a + b) <= O.omax(O.star(a), O.star(b))


@given(ordinals())
def test_text_roundtrip(a):
    assert O.parse(O.to_str(a)) == a
