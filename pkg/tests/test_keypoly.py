import math
import random
from fractions import Fraction

import pytest

from genpuiseux.coeff import CoeffElem, FieldTower
from genpuiseux.errors import ChainComplete
from genpuiseux.groups import INF, GroupDescriptor, cmp
from genpuiseux.keypoly import (
    ChainEntry,
    KeyPolyChain,
    ValPoly,
    derivative_min_check,
    epsilon_invariants,
    extend_chain,
    first_exponent,
    initial_chain,
    standard_expansion,
    truncated_val,
)
from genpuiseux.series import GenSeries, SeriesRing


def tring(char=0):
    desc = GroupDescriptor([1], char_exponent=max(char, 1))
    tower = FieldTower.prime_field(char) if char else FieldTower.rationals()
    return SeriesRing.equichar(desc, tower)


def g(R, q):
    return R.descriptor.from_rational(Fraction(q))


def t_pow(R, q, c=1):
    return R.monomial(g(R, q), c)


def poly(R, *coeffs):
    """Coefficients given innermost-first as series."""
    return ValPoly(R, list(coeffs))


def classical_F(R):
    return poly(R, -1 * t_pow(R, 3), R.zero(), R.one())  # y^2 - t^3


def artin_schreier_F(R):
    return poly(R, t_pow(R, 1), t_pow(R, 1), R.one())  # y^2 + t y + t


def explicit_chain(R, *spec):
    entries = []
    for q, beta in spec:
        entries.append(ChainEntry(q, beta, 0, beta, 1))
        chain = KeyPolyChain(R, entries)
        b, eps = epsilon_invariants(chain, len(entries))
        entries[-1] = ChainEntry(q, beta, b, eps,
                                 1 if len(entries) == 1 else
                                 q.degree() // entries[-2].poly.degree())
    return KeyPolyChain(R, entries)


# -- Hasse derivatives ---------------------------------------------------------


def test_hasse_examples():
    R = tring()
    x3 = poly(R, R.zero(), R.zero(), R.zero(), R.one())
    d2 = x3.hasse_derivative(2)
    assert d2.degree() == 1
    assert d2.coeff(1) == R.const(3)

    R2 = tring(2)
    x2 = poly(R2, R2.zero(), R2.zero(), R2.one())
    assert x2.hasse_derivative(1).is_zero()  # 2x = 0
    assert x2.hasse_derivative(2) == poly(R2, R2.one())


def test_hasse_diagonal_is_one():
    for char in (0, 2, 3, 5):
        R = tring(char)
        for m in range(1, 7):
            xm = poly(R, *([R.zero()] * m + [R.one()]))
            assert xm.hasse_derivative(m) == poly(R, R.one())


def test_hasse_composition_law():
    rng = random.Random(77)
    for char in (0, 2, 3, 5):
        R = tring(char)
        for _ in range(40):
            deg = rng.randint(0, 6)
            f = poly(R, *[t_pow(R, rng.randint(0, 3), rng.randint(0, 6))
                          for _ in range(deg + 1)])
            for a in range(1, 4):
                for b in range(1, 4):
                    lhs = f.hasse_derivative(b)
                    lhs = lhs.hasse_derivative(a) if not lhs.is_zero() else lhs
                    rhs = f.hasse_derivative(a + b).scale(math.comb(a + b, a))
                    if lhs.is_zero():
                        assert rhs.is_zero() or all(
                            c.is_exact_zero() or not c.terms for c in rhs.coeffs)
                    else:
                        assert lhs == rhs


# -- standard expansions ----------------------------------------------------------


def test_standard_expansion_y4():
    R = tring()
    chain = explicit_chain(R, (ValPoly.variable(R), g(R, Fraction(3, 2))),
                           (classical_F(R), g(R, 3)))
    y4 = poly(R, R.zero(), R.zero(), R.zero(), R.zero(), R.one())
    cs = standard_expansion(y4, chain, 2)
    # y^4 = Q^2 + 2 t^3 Q + t^6
    assert cs[0] == ValPoly.const(t_pow(R, 6))
    assert cs[1] == ValPoly.const(t_pow(R, 3, 2))
    assert cs[2] == ValPoly.const(R.one())


def test_standard_expansion_low_degree():
    R = tring()
    chain = explicit_chain(R, (ValPoly.variable(R), g(R, Fraction(3, 2))),
                           (classical_F(R), g(R, 3)))
    y = ValPoly.variable(R)
    cs = standard_expansion(y, chain, 2)
    assert len(cs) == 1 and cs[0] == y


def test_standard_expansion_reassembly():
    rng = random.Random(55)
    R = tring(2)
    chain = explicit_chain(R, (ValPoly.variable(R), g(R, Fraction(1, 2))))
    chain = extend_chain(chain, artin_schreier_F(R), t_pow(R, Fraction(1, 2)))
    for i in (1, 2):
        q = chain.entry(i).poly
        for _ in range(100):
            f = poly(R, *[t_pow(R, rng.randint(0, 4), rng.randint(0, 1))
                          for _ in range(rng.randint(1, 6))])
            if f.is_zero():
                continue
            cs = standard_expansion(f, chain, i)
            acc = ValPoly(R, [])
            for j, c in enumerate(cs):
                assert c.degree() < q.degree() or c.is_zero()
                acc = acc + c * (q ** j)
            assert acc == f


# -- truncated valuations -----------------------------------------------------------


def test_truncated_val_classical():
    R = tring()
    chain = explicit_chain(R, (ValPoly.variable(R), g(R, Fraction(3, 2))))
    h = classical_F(R)
    v, s = truncated_val(h, chain, 1)
    assert v == g(R, 3)
    assert s == [0, 2]


def test_truncated_val_artin_schreier():
    R = tring(2)
    chain = explicit_chain(R, (ValPoly.variable(R), g(R, Fraction(1, 2))))
    h = artin_schreier_F(R)
    v, s = truncated_val(h, chain, 1)
    assert v == g(R, 1)
    assert s == [0, 2]


def test_truncated_val_below_true_valuation():
    rng = random.Random(91)
    R = tring()
    chain = explicit_chain(R, (ValPoly.variable(R), g(R, Fraction(3, 2))))
    root = t_pow(R, Fraction(3, 2))
    for _ in range(200):
        f = poly(R, *[t_pow(R, rng.randint(0, 5), rng.randint(-3, 3))
                      for _ in range(rng.randint(1, 5))])
        if f.is_zero():
            continue
        v, _ = truncated_val(f, chain, 1)
        ev = f.eval(root)
        if ev.is_exact_zero():
            continue
        assert cmp(v, ev.val()) <= 0


# -- epsilon invariants ----------------------------------------------------------------


def test_epsilon_char0_example():
    R = tring()
    chain = explicit_chain(R, (ValPoly.variable(R), g(R, Fraction(3, 2))),
                           (classical_F(R), g(R, 3)))
    b, eps = epsilon_invariants(chain, 2)
    assert b == 0
    assert eps == g(R, Fraction(3, 2))


def test_epsilon_char2_variable():
    R = tring(2)
    chain = explicit_chain(R, (ValPoly.variable(R), g(R, Fraction(1, 2))))
    b, eps = epsilon_invariants(chain, 1)
    assert b == 0
    assert eps == g(R, Fraction(1, 2))


def test_epsilon_monotone_on_computed_chain():
    R = tring(2)
    F = artin_schreier_F(R)
    chain = initial_chain(R, F)
    partial = t_pow(R, Fraction(1, 2))
    chain = extend_chain(chain, F, partial)
    partial = partial + t_pow(R, Fraction(3, 4))
    chain = extend_chain(chain, F, partial)
    eps = chain.epsilons()
    assert eps[0] == g(R, Fraction(1, 2))
    assert eps[1] == g(R, Fraction(3, 4))
    assert eps[2] == g(R, Fraction(7, 8))
    for a, b in zip(eps, eps[1:]):
        assert cmp(a, b) < 0


# -- chain extension ---------------------------------------------------------------------


def test_extend_chain_classical():
    R = tring()
    F = classical_F(R)
    chain = initial_chain(R, F)
    assert chain.entry(1).beta == g(R, Fraction(3, 2))
    chain = extend_chain(chain, F, t_pow(R, Fraction(3, 2)))
    assert chain.entry(2).poly == F
    assert chain.entry(2).beta is INF
    assert chain.entry(2).alpha == 2
    with pytest.raises(ChainComplete):
        extend_chain(chain, F, t_pow(R, Fraction(3, 2)))


def test_extend_chain_artin_schreier_sequence():
    R = tring(2)
    F = artin_schreier_F(R)
    chain = initial_chain(R, F)
    assert chain.entry(1).beta == g(R, Fraction(1, 2))
    chain = extend_chain(chain, F, t_pow(R, Fraction(1, 2)))
    q2 = chain.entry(2).poly
    # the intermediate key polynomial is y^2 + t
    assert q2 == ValPoly(R, [t_pow(R, 1), R.zero(), R.one()])
    assert chain.entry(2).beta == g(R, Fraction(3, 2))
    partial = t_pow(R, Fraction(1, 2)) + t_pow(R, Fraction(3, 4))
    chain = extend_chain(chain, F, partial)
    assert chain.entry(3).poly == F
    assert chain.entry(3).beta == g(R, Fraction(7, 4))
    assert chain.entry(3).epsilon == g(R, Fraction(7, 8))
    # re-pin against a longer partial
    partial = partial + t_pow(R, Fraction(7, 8))
    chain = extend_chain(chain, F, partial)
    assert chain.entry(4).poly == F
    assert chain.entry(4).beta == g(R, Fraction(15, 8))
    assert chain.entry(4).epsilon == g(R, Fraction(15, 16))


def test_extend_chain_linear():
    R = tring()
    F = poly(R, -1 * t_pow(R, 1), R.one())  # y - t
    chain = initial_chain(R, F)
    assert chain.entry(1).beta == g(R, 1)
    chain = extend_chain(chain, F, t_pow(R, 1))
    assert chain.entry(2).poly == F
    assert chain.entry(2).beta is INF


def test_degrees_multiply_along_chain():
    R = tring(2)
    F = artin_schreier_F(R)
    chain = initial_chain(R, F)
    chain = extend_chain(chain, F, t_pow(R, Fraction(1, 2)))
    d_prev = 1
    for e in chain.entries:
        assert e.poly.degree() == d_prev * e.alpha
        d_prev = e.poly.degree()


def test_limit_detection_signature():
    R = tring(2)
    F = artin_schreier_F(R)
    chain = initial_chain(R, F)
    partial = t_pow(R, Fraction(1, 2))
    chain = extend_chain(chain, F, partial)
    exps = [Fraction(3, 4), Fraction(7, 8), Fraction(15, 16), Fraction(31, 32)]
    for e in exps:
        partial = partial + t_pow(R, e)
        chain = extend_chain(chain, F, partial)
    assert chain.stabilized_tail() >= 3
    assert chain.limit_required()


def test_first_exponent_polygon():
    R = tring()
    assert first_exponent(classical_F(R)) == g(R, Fraction(3, 2))
    R2 = tring(2)
    assert first_exponent(artin_schreier_F(R2)) == g(R2, Fraction(1, 2))
    Rm = tring()
    F = poly(Rm, Rm.zero(), -1 * t_pow(Rm, 1), Rm.one())  # y^2 - t*y: root 0
    assert first_exponent(F) is INF


# -- the minimum identity and the inequality ----------------------------------------------


def _as_chain_with_root(budget=6):
    R = tring(2)
    F = artin_schreier_F(R)
    chain = initial_chain(R, F)
    partial = t_pow(R, Fraction(1, 2))
    chain = extend_chain(chain, F, partial)
    exp = Fraction(3, 4)
    for _ in range(budget - 1):
        partial = partial + t_pow(R, exp)
        chain = extend_chain(chain, F, partial)
        exp = 1 - (1 - exp) / 2
    return R, chain, partial


def rand_poly(R, rng, max_deg=4, char=2):
    coeffs = []
    for _ in range(rng.randint(1, max_deg + 1)):
        n = rng.randint(0, 3)
        c = rng.randint(0, char - 1) if char else rng.randint(-3, 3)
        coeffs.append(t_pow(R, n, c) if c else R.zero())
    return ValPoly(R, coeffs)


def test_prop_min_on_corpus():
    # with beta = eps_i the truncated value equals both derivative minima
    rng = random.Random(303)
    R, chain, root = _as_chain_with_root()
    checked = 0
    for i in (1, 2):
        trials = 0
        while trials < 100:
            h = rand_poly(R, rng)
            if h.is_zero():
                continue
            trials += 1
            rep = derivative_min_check(h, chain, i, root)
            if rep["nu_i"] is INF:
                continue
            assert rep["equal"], (i, h.to_text(), rep)
            checked += 1
    assert checked >= 150


def test_prop_min_trivial_cases():
    R, chain, root = _as_chain_with_root()
    q1 = chain.entry(1).poly
    rep = derivative_min_check(q1, chain, 1, root)
    assert rep["equal"]
    assert rep["nu_i"] == chain.entry(1).beta
    const = ValPoly.const(t_pow(R, 2, 1))
    rep = derivative_min_check(const, chain, 1, root)
    assert rep["equal"]
    assert rep["nu_i"] == g(R, 2)


def test_prop_101_inequality():
    rng = random.Random(404)
    for char in (0, 2, 3, 5):
        R = tring(char)
        if char == 2:
            F = artin_schreier_F(R)
            chain = initial_chain(R, F)
            chain = extend_chain(chain, F, t_pow(R, Fraction(1, 2)))
        else:
            chain = explicit_chain(R, (ValPoly.variable(R), g(R, Fraction(3, 2))))
        p = max(char, 1)
        for i in range(1, len(chain.entries) + 1):
            eps = chain.entry(i).epsilon
            if eps is INF:
                continue
            for _ in range(60):
                f = rand_poly(R, rng, char=char if char else 0)
                if f.is_zero():
                    continue
                vf, _ = truncated_val(f, chain, i)
                if vf is INF:
                    continue
                b = 0
                while p ** b <= f.degree():
                    df = f.hasse_derivative(p ** b)
                    if not df.is_zero():
                        vd, _ = truncated_val(df, chain, i)
                        if vd is not INF:
                            # nu_i(f) - nu_i(d f) <= p^b * eps_i
                            assert cmp(vf - vd, eps.scale_unchecked(p ** b)) <= 0
                    if p == 1:
                        break
                    b += 1


def test_cor_1015_attainment():
    rng = random.Random(505)
    R, chain, root = _as_chain_with_root()
    p = 2
    for i in (1, 2):
        entry = chain.entry(i)
        b_i = entry.b_order
        eps = entry.epsilon
        for _ in range(100):
            f = rand_poly(R, rng)
            if f.is_zero():
                continue
            vf, s_set = truncated_val(f, chain, i)
            if vf is INF or not s_set:
                continue
            # displayed minimum over j of nu_i(d_(j p^b_i) f) + j p^b_i eps
            best = None
            terms = {}
            for j in range(0, f.degree() + 1):
                order = j * p ** b_i
                dj = f if order == 0 else f.hasse_derivative(order)
                if dj.is_zero():
                    continue
                vd, _ = truncated_val(dj, chain, i)
                if vd is INF:
                    continue
                tot = vd + eps.scale_unchecked(order)
                terms[j] = tot
                if best is None or cmp(tot, best) < 0:
                    best = tot
            assert best is not None and cmp(vf, best) == 0
            # attainment at every j in S_i passing the divisibility filter
            for j in s_set:
                if j == 0:
                    continue
                e = 0
                jj = j
                while jj % p == 0:
                    jj //= p
                    e += 1
                smaller = [j2 for j2 in s_set if j2 < j]
                ok = all(j2 % p ** (e + 1) == 0 for j2 in smaller)
                if ok and j in terms:
                    assert cmp(terms[j], vf) == 0


def test_chain_report_format():
    R = tring(2)
    F = artin_schreier_F(R)
    chain = initial_chain(R, F)
    chain = extend_chain(chain, F, t_pow(R, Fraction(1, 2)))
    lines = chain.report().splitlines()
    assert lines[0] == "1: Q_1=y beta=1/2 b=0 eps=1/2 alpha=1"
    assert lines[1] == "2: Q_2=y^2 + t beta=3/2 b=1 eps=3/4 alpha=2"
