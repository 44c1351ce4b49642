"""Finite field tower, K = F((zeta^(1/D))) and truncated Laurent series."""
from fractions import Fraction
from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shtukalab.base_arith import (FieldTower, KElem, PrecSeries, RamifiedBase, ZetaJet,
                                  artin_schreier_solve, as_solve_K, binom_mod_p, conway_coeffs,
                                  fmt_kelem, fmt_series, fp_nullspace, fp_rank, kth_root,
                                  norm_r, qth_root, reexpand_at, t_function)
from shtukalab.errors import InsufficientPrecision

LEVELS = [(2, 1), (2, 3), (2, 4), (3, 1), (3, 2), (4, 1), (4, 2)]


def level(q, m):
    return FieldTower.for_q(q).level(m)


# ---------------------------------------------------------------------------
# finite fields

def test_conway_polynomials_known_values():
    # x^4 + x + 1, x^2 + 2x + 2, x^3 + x + 1; leading coefficient first
    assert tuple(conway_coeffs(2, 4)) == (1, 0, 0, 1, 1)
    assert tuple(conway_coeffs(3, 2)) == (1, 2, 2)
    assert tuple(conway_coeffs(2, 3)) == (1, 0, 1, 1)


@pytest.mark.parametrize("q,m", LEVELS)
def test_field_sizes(q, m):
    F = level(q, m)
    assert F.Q == q ** m


@given(st.sampled_from(LEVELS), st.data())
def test_field_axioms(qm, data):
    F = level(*qm)
    el = st.integers(0, F.Q - 1)
    a, b, c = data.draw(el), data.draw(el), data.draw(el)
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    assert F.sub(F.add(a, b), b) == a
    if a:
        assert F.mul(a, F.inv(a)) == 1


@given(st.sampled_from(LEVELS), st.data())
def test_frobenius_is_a_ring_map_and_fmt_roundtrips(qm, data):
    F = level(*qm)
    a = data.draw(st.integers(0, F.Q - 1))
    b = data.draw(st.integers(0, F.Q - 1))
    assert F.frobp(F.mul(a, b)) == F.mul(F.frobp(a), F.frobp(b))
    assert F.frobp(F.add(a, b)) == F.add(F.frobp(a), F.frobp(b))
    assert F.frobp(a) == F.pow(a, F.p)
    assert F.parse(F.fmt(a)) == a


@pytest.mark.parametrize("q,m,m2", [(2, 1, 4), (2, 2, 4), (3, 1, 2), (4, 1, 2)])
def test_embeddings_are_compatible(q, m, m2):
    T = FieldTower.for_q(q)
    F, G = T.level(m), T.level(m2)
    for a in range(F.Q):
        for b in range(F.Q):
            assert F.embed(F.mul(a, b), G) == G.mul(F.embed(a, G), F.embed(b, G))
        assert G.contains(F.embed(a, G), F)
        assert G.restrict(F.embed(a, G), F) == a


@pytest.mark.parametrize("q,m", [(2, 1), (2, 2), (3, 1), (4, 1)])
def test_artin_schreier(q, m):
    T = FieldTower.for_q(q)
    F = T.level(m)
    for c in range(F.Q):
        y, m2 = artin_schreier_solve(c, T, m)
        G = T.level(m2)
        assert G.sub(G.pow(y, q), y) == F.embed(c, G)
        assert m2 % m == 0


@pytest.mark.parametrize("q,m", [(2, 3), (3, 2), (4, 2)])
def test_qth_root(q, m):
    T = FieldTower.for_q(q)
    F = T.level(m)
    for a in range(F.Q):
        assert F.pow(qth_root(a, T, m), q) == a


def test_fp_linear_algebra_oracle():
    M = np.array([[1, 2, 0], [2, 4, 0], [0, 0, 1]])
    assert fp_rank(M, 5) == 2
    N = fp_nullspace(M, 5)
    assert N.shape[0] == 1
    assert not ((M @ N[0]) % 5).any()


@given(st.integers(-30, 30), st.integers(0, 8), st.sampled_from([2, 3, 5]))
def test_binomial_mod_p(n, k, p):
    # generalized binomial (n choose k) for negative n via the falling factorial
    num = 1
    for i in range(k):
        num *= n - i
    den = 1
    for i in range(1, k + 1):
        den *= i
    assert binom_mod_p(n, k, p) == (num // den) % p


# ---------------------------------------------------------------------------
# K = F_{q^m}((w)), w^D = zeta

def rand_kelem(B, rng_data, lo=-3, hi=12, n=3):
    terms = {}
    for _ in range(n):
        e = rng_data.draw(st.integers(lo, hi))
        c = rng_data.draw(st.integers(0, B.F.Q - 1))
        terms[e] = c
    return B.elem(terms)


BASES = [(2, 1, 1), (2, 2, 3), (3, 1, 2)]


def base(q, m, D, P=40):
    return RamifiedBase(FieldTower.for_q(q), m, D=D, P=P)


@given(st.sampled_from(BASES), st.data())
def test_valuation_is_additive(qmd, data):
    B = base(*qmd)
    x, y = rand_kelem(B, data), rand_kelem(B, data)
    if x.is_zero() or y.is_zero():
        return
    assert (x * y).valuation() == x.valuation() + y.valuation()
    s = x + y
    if not s.is_zero():
        assert s.valuation() >= min(x.valuation(), y.valuation())


@given(st.sampled_from(BASES), st.data())
def test_inverse_and_frobenius(qmd, data):
    B = base(*qmd)
    x = rand_kelem(B, data, lo=0, hi=6)
    if x.is_zero():
        return
    one = x * x.inv()
    assert (one - B.one()).truncate(20).is_zero()
    y = rand_kelem(B, data, lo=0, hi=6)
    assert (x * y).frob().same((x.frob() * y.frob()))
    assert x.frob().valuation() == B.q * x.valuation()


def test_zeta_is_w_to_the_D():
    B = base(2, 1, 4)
    assert B.zeta.same(B.w(4))
    assert B.val(B.zeta) == 1
    assert B.val(B.w(1)) == Fraction(1, 4)


def test_fmt_kelem_is_readable():
    B = base(2, 1, 1)
    assert fmt_kelem(B.one() + B.w(2)) == "1 + w^2"


@pytest.mark.parametrize("q,D", [(2, 1), (2, 2), (3, 1)])
def test_artin_schreier_over_K(q, D):
    B = base(q, 1, D, P=60)
    for c in [B.w(1), B.one() + B.w(2), B.w(-2) + B.w(1)]:
        B2, y = as_solve_K(c)
        res = y ** q - y - B2.lift(c)
        assert res.truncate(B2.P // 2).is_zero()


def test_kth_root():
    B = base(3, 1, 1)
    x = B.one() + B.w(1)
    B2, r = kth_root(x * x, 2)
    assert (r * r - B2.lift(x * x)).truncate(B.P // 2).is_zero()
    B3, s = kth_root(B.w(1), 2)
    assert B3.D == 2 and (s * s - B3.lift(B.w(1))).truncate(20).is_zero()


# ---------------------------------------------------------------------------
# Laurent series

@given(st.sampled_from([(2, 1), (3, 1), (4, 1)]), st.data())
def test_series_inverse(qm, data):
    F = level(*qm)
    cs = {k: data.draw(st.integers(0, F.Q - 1)) for k in range(-2, 6)}
    s = PrecSeries(F, cs)
    if s.ord() is None:
        return
    inv = s.inverse(20)
    prod = s * inv
    assert prod.equals(PrecSeries.one(F), 20 + s.ord() - s.ord())


def test_series_precision_is_tracked():
    F = level(2, 1)
    a = PrecSeries(F, {0: 1, 1: 1}, 5)
    b = PrecSeries(F, {-2: 1}, 3)
    c = a * b
    assert c.N == min(5 - 2, 3 + 0)
    assert fmt_series(PrecSeries(F, {-1: 1, 2: 1}, 4)) == "z^-1 + z^2 + O(z^4)"


def _hasse_oracle(coeffs, B, E):
    """Independent re-expansion: c_k = sum_i f_i binom(i, k) zeta^(i - k)."""
    out = []
    for k in range(E):
        acc = B.zero()
        for i, f in coeffs.items():
            b = comb(i, k) % B.p if i >= k else 0
            if b:
                acc = acc + f * B.zeta_pow(i - k).scale(B.F.from_int(b))
        out.append(acc)
    return out


@given(st.sampled_from(BASES), st.data())
def test_reexpansion_matches_binomial_oracle(qmd, data):
    B = base(*qmd)
    coeffs = {i: rand_kelem(B, data, lo=0, hi=5, n=2) for i in range(0, 6)}
    f = PrecSeries(B, coeffs)
    E = data.draw(st.integers(1, 5))
    jet = reexpand_at(f, B.zeta, E)
    for a, b in zip(jet.c, _hasse_oracle(coeffs, B, E)):
        assert (a - b).truncate(B.P).is_zero()


def test_reexpansion_needs_precision():
    B = base(2, 1, 1)
    f = PrecSeries(B, {0: B.one(), 1: B.one()}, 2)
    with pytest.raises(InsufficientPrecision):
        reexpand_at(f, B.zeta, 4)


def test_jet_arithmetic():
    B = base(2, 1, 1)
    y = ZetaJet.y_power(B, 1, 4)
    u = ZetaJet.const(B, B.one(), 4) + y
    assert (u * u.inverse() - ZetaJet.const(B, B.one(), 4)).is_zero()
    assert y.shift_up(2).ord() == 3
    assert ZetaJet.y_power(B, 3, 4).shift_down(3).ord() == 0


@given(st.sampled_from(BASES), st.data(),
       st.sampled_from([Fraction(1), Fraction(1, 2), Fraction(2, 3), Fraction(3)]))
def test_norm_laws(qmd, data, r):
    B = base(*qmd)
    f = PrecSeries(B, {i: rand_kelem(B, data, lo=0, hi=6, n=2) for i in range(-2, 3)})
    g = PrecSeries(B, {i: rand_kelem(B, data, lo=0, hi=6, n=2) for i in range(-2, 3)})
    nf, ef = norm_r(f, r)
    ng, eg = norm_r(g, r)
    if nf is None or ng is None:
        return
    # multiplicative: ||fg|| = ||f|| ||g||
    nfg, efg = norm_r(f * g, r)
    assert nfg == nf + ng
    # ultrametric: ||f + g|| <= max(||f||, ||g||)
    s, _ = norm_r(f + g, r)
    assert s is None or s >= min(nf, ng)
    # ||zeta f|| = |zeta| ||f||
    assert norm_r(f * PrecSeries(B, {0: B.zeta}), r)[0] == nf + 1


def test_t_function_relation():
    """t^sigma = (1 - zeta/z) t ... as computed: t = prod (1 - zeta^(q^i)/z)."""
    B = base(2, 1, 1, P=40)
    t = t_function(B)
    lhs = PrecSeries(B, {0: B.one(), -1: -B.zeta}) * t.frob()
    for k, v in (lhs - t).c.items():
        assert v.truncate(B.P).is_zero()
