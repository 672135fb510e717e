"""Term generators shared by the eps-term and collapse tests."""
from functools import cmp_to_key, lru_cache

from hypothesis import strategies as st

from kpcollapse.epsterm import ZERO_T, Eps, FiniteBase, Sum, eps_compare
from kpcollapse.ordinal import ONE, Ord

BASE6 = FiniteBase(range(6), [0, 0, 1, 1, 2, 3])
BASE3 = FiniteBase(range(3), [0, 1, 2])


def size(t):
    if isinstance(t, Sum):
        return sum(1 + size(e) for e, _ in t.terms)
    return 1


def make_sum(pairs, base):
    pairs = sorted(pairs, key=cmp_to_key(lambda a, b: eps_compare(a[0], b[0], base)), reverse=True)
    if len(pairs) == 1 and isinstance(pairs[0][0], Eps) and pairs[0][1] == ONE:
        return pairs[0][0]
    return Sum(tuple(pairs))


def all_terms(base, max_size, coeffs=(1, 2)):
    """Every valid term of size at most ``max_size`` with the given coefficients."""

    @lru_cache(maxsize=None)
    def of_size(n):
        out = []
        if n == 1:
            out.append(ZERO_T)
            out.extend(Eps(e) for e in base.elements)
        # sums: choose descending exponents with sizes adding up to n
        for combo in sums(n, None):
            out.append(Sum(combo))
        return tuple(out)

    @lru_cache(maxsize=None)
    def sums(n, bound):
        """Tuples of (exp, coeff), exps strictly descending below ``bound``, total size n."""
        res = []
        for k in range(1, n):
            for e in of_size(k):
                if bound is not None and eps_compare(e, bound, base) >= 0:
                    continue
                for c in coeffs:
                    c = Ord.nat(c)
                    rest = n - 1 - k
                    if rest == 0:
                        if not (isinstance(e, Eps) and c == ONE and bound is None):
                            res.append(((e, c),))
                    else:
                        for tail in sums(rest, e):
                            res.append(((e, c),) + tail)
        return tuple(res)

    out = []
    for n in range(1, max_size + 1):
        out.extend(of_size(n))
    return out


@st.composite
def eps_terms(draw, base=BASE6, depth=2):
    if depth == 0 or draw(st.integers(0, 4)) == 0:
        return draw(st.one_of(st.just(ZERO_T), st.sampled_from(list(base.elements)).map(Eps)))
    n = draw(st.integers(1, 3))
    exps = draw(st.lists(eps_terms(base, depth - 1), min_size=n, max_size=n))
    uniq = []
    for e in exps:
        if all(eps_compare(e, u, base) for u in uniq):
            uniq.append(e)
    pairs = [(e, Ord.nat(draw(st.integers(1, 3)))) for e in uniq]
    return make_sum(pairs, base)


def random_term(rng, base, depth=2):
    """A random valid term from a seeded ``random.Random``."""
    if depth == 0 or rng.random() < 0.25:
        return ZERO_T if rng.random() < 0.25 else Eps(rng.choice(base.elements))
    uniq = []
    for _ in range(rng.randrange(1, 4)):
        e = random_term(rng, base, depth - 1)
        if all(eps_compare(e, u, base) for u in uniq):
            uniq.append(e)
    return make_sum([(e, Ord.nat(rng.randrange(1, 4))) for e in uniq], base)
