"""Acceptance criteria 1-11.  Each test carries a ``criterion`` marker; the
terminal summary prints one PASS/FAIL line per criterion."""
import math
import random
from fractions import Fraction

import pytest

from shtukalab import catalog as C
from shtukalab import cli
from shtukalab import hodgepink as hp
from shtukalab import periodspace as PS
from shtukalab import shtuka as S
from shtukalab.base_arith import FieldTower, PrecSeries, RamifiedBase, norm_r
from shtukalab.polygon import endpoint, from_slopes, lies_above, sum_polygons
from shtukalab.sigmamod import (SigmaModule, conjugated_instance, dm_decompose, dm_residual,
                                hom_space, newton_polygon, o_module, random_standard_sum,
                                standard)

TITLES = {
    1: "Dieudonne-Manin decomposition of 100 conjugated standard sums",
    2: "Newton polygon agrees with the decomposition and with diagonal z-powers",
    3: "hom ranks between standard modules",
    4: "Hodge-Pink weights, two t_H routes, Tate objects",
    5: "Hopkins-Gross family: every sampled point admissible",
    6: "antidiagonal d = 2 grid: exactly the jet family and (1,0) fail",
    7: "antidiagonal d = 3 point: weakly admissible, not admissible, witness verified",
    8: "diagonal family d <= 4 and the J-action jet formula",
    9: "rigidification of 50 seeded shtukas and of Tate objects",
    10: "first escape exponent of the valuation ledger",
    11: "global consistency properties, 200 trials each",
}


def crit(k):
    return pytest.mark.criterion(k, TITLES[k])


T2, T3 = FieldTower.for_q(2), FieldTower.for_q(3)


# --- 1, 2 -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def dm_instances():
    out = []
    for i in range(100):
        rng = random.Random(1000 + i)
        T = (T2, T3)[i % 2]
        summ = random_standard_sum(rng, max_rank=3, max_d=3)
        M, g = conjugated_instance(summ, T, rng)
        dec = dm_decompose(M, target=30, seed=i)
        out.append((summ, M, dec))
    return out


@crit(1)
def test_dm_recovers_summands(dm_instances):
    for summ, M, dec in dm_instances:
        assert dec.summands == summ
        assert all(e.is_zero() for row in dm_residual(M, dec, 30) for e in row)


@crit(2)
def test_newton_polygon_matches_decomposition(dm_instances):
    for summ, M, dec in dm_instances:
        assert newton_polygon(M) == dec.slopes
        want = from_slopes([Fraction(-d, n) for d, n, k in summ for _ in range(n * k)])
        assert dec.slopes == want


@crit(2)
def test_newton_polygon_of_diagonal_z_powers():
    rng = random.Random(2)
    for i in range(30):
        T = (T2, T3)[i % 2]
        F = T.level(1)
        ds = [rng.randint(-3, 3) for _ in range(rng.randint(1, 3))]
        Phi = [[PrecSeries(F, {d: 1}) if a == b else PrecSeries(F, {}) for b in range(len(ds))]
               for a, d in enumerate(ds)]
        M = SigmaModule(Phi, T, 1)
        assert newton_polygon(M) == from_slopes(ds)
        assert dm_decompose(M, target=30, seed=i).slopes == from_slopes(ds)


# --- 3 ----------------------------------------------------------------------------

@crit(3)
def test_hom_ranks():
    mods = [(d, n) for n in (1, 2, 3) for d in range(-3, 4) if math.gcd(d, n) == 1]
    for a in mods:
        for b in mods:
            if Fraction(a[0], a[1]) != Fraction(b[0], b[1]):
                assert hom_space(standard(*a, T2), standard(*b, T2), 10).rank == 0, (a, b)
    assert hom_space(o_module(0, T2), o_module(0, T2), 10).rank == 1
    M = standard(1, 2, T2)
    assert hom_space(M, M, 10).rank == 4


# --- 4 ----------------------------------------------------------------------------

@crit(4)
def test_weights_of_random_lattices():
    for i in range(100):
        rng = random.Random(4000 + i)
        T = (T2, T3)[i % 2]
        B = RamifiedBase(T, 1, D=1, P=30)
        n = rng.randint(1, 3)
        F = T.level(1)
        iso = SigmaModule([[PrecSeries(F, {rng.randint(-2, 2): 1}) if a == b else
                            PrecSeries(F, {}) for b in range(n)] for a in range(n)], T, 1)
        w = [rng.randint(-3, 3) for _ in range(n)]
        # the jet order has to exceed ord det gamma = sum(max w - w_i)
        H = hp.random_structure(iso, w, B, sum(max(w) - x for x in w) + 2, rng)
        assert H.weights() == sorted(w)
        assert H.t_H() == H.t_H("det") == sum(w)


@crit(4)
@pytest.mark.parametrize("n", [-2, -1, 1, 2, 3])
def test_tate_object_invariants(n):
    B = RamifiedBase(T2, 1, D=1, P=40)
    H = hp.tate_object(n, T2, B, 6)
    assert H.weights() == [n]
    assert H.t_N() == H.t_H() == H.t_H("det") == n
    assert tuple(H.pair_degrees()) == (-n, 0)


# --- 5 - 8 ------------------------------------------------------------------------

@crit(5)
@pytest.mark.parametrize("n", [2, 3])
def test_hopkins_gross(n, capsys):
    res = C.run_demo("8.1", n=n, count=50)
    assert len(res.rows) >= 50
    assert all(r.got == ("Yes", "Yes") for r in res.rows)
    code = cli.main(["--machine", "period", "demo", "--example", "8.1", "--n", str(n),
                     "--count", "50"])
    capsys.readouterr()
    assert code == 0


@crit(6)
def test_antidiagonal_d2_grid():
    res = C.run_demo("8.2", d=2)
    assert res.ok
    T, B, b = C.antidiagonal_d2_setup()
    items = C.antidiagonal_d2_grid(B)
    assert len(items) == 16 * 8 + 1
    no = [P for P, _ in items if C.classify(b, P).wa.verdict == "No"]
    # a0 = c0 + c1 zeta + c2 zeta^2 + c3 zeta^3 over F_2 has derivative c1 + c3 zeta^2,
    # so the family is the 16 points (a0, a0') plus (1, 0)
    assert len(no) == 17
    for r in res.rows:
        if r.got[0] == "Yes":
            assert r.got == ("Yes", "Yes")
    for P in no:
        assert C.check_wa_witnesses(b, P)


@crit(7)
def test_antidiagonal_d3_point():
    res = C.run_demo("8.2", d=3)
    (row,) = res.rows
    assert row.got == ("Yes", "No")
    assert row.extra["witness_ok"] and all(row.extra["membership"])
    assert row.extra["jet_precision"] >= 30


@crit(8)
@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_diagonal_family(d):
    res = C.run_demo("8.3", d=d, levels=2)
    assert res.ok
    assert sum(r.got == ("No", "No") for r in res.rows) == 4 ** (d - 1)


@crit(8)
@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_j_action_jet_formula(d):
    T, B, b = C.diagonal_setup(d)
    F = B.F
    rng = random.Random(80 + d)
    gs = [PrecSeries(F, {k: (m >> k) & 1 for k in range(3) if (m >> k) & 1}) for m in range(1, 8)]
    for g in gs:
        G = [[g, PrecSeries(F, {})], [PrecSeries(F, {}), PrecSeries.one(F)]]
        for _ in range(2):
            a = [B.elem({rng.randrange(3): 1, rng.randrange(3): rng.randrange(2)})
                 for _ in range(d)]
            P = PS.chart_point(a, d, B)
            Q = PS.j_action(G, P, b)
            assert Q.same(PS.chart_point(C.jet_formula(g, a, B), d, B))
            r0, r1 = PS.classify(b, P), PS.classify(b, Q)
            assert (r0.wa.verdict, r0.adm.verdict) == (r1.wa.verdict, r1.adm.verdict)
        c = [B.zero()] + [B.elem({rng.randrange(3): 1}) for _ in range(d - 1)]
        X = PS.lower_chart_point(c, d, B)
        assert PS.classify(b, PS.j_action(G, X, b)).wa.verdict == "No"


# --- 9 ----------------------------------------------------------------------------

@crit(9)
def test_rigidify_seeded_shtukas():
    for i in range(50):
        rng = random.Random(2000 + i)
        q = (2, 3)[i % 2]
        D = rng.choice((1, 2))
        B = RamifiedBase(FieldTower.for_q(q), 1, D=D, P=30)
        M = S.random_shtuka(B, rng, n=rng.randint(1, 2), max_pole=2)
        assert M.d <= 2
        R = S.rigidify(M)
        # raises unless C A = B C^sigma and C0 = Id mod m_K hold modulo w^30
        info = S.check_rigidification(M, R)
        assert info["certified_prec"] >= 30 and info["identity_mod_m"]


@crit(9)
@pytest.mark.parametrize("n", [1, 2, 3])
def test_rigidify_tate_objects(n):
    B = RamifiedBase(T2, 1, D=1, P=40)
    M = S.tate_shtuka(n, B)
    R = S.rigidify(M)
    assert R.t_pow == n
    (c,), = R.C0
    assert set(c.c) == {0} and c.c[0].truncate(R.certified_prec).t == {0: 1}
    H = S.mysterious_functor(M, R, E=n + 3)
    # q is generated by y^-shift gamma
    assert H.gamma[0][0].ord() - H.shift == -n


# --- 10 ---------------------------------------------------------------------------

@crit(10)
@pytest.mark.parametrize("I", [3, 5, 7])
def test_escape_exponent(I):
    q = 2
    vals = [Fraction(1, (q + 1) ** i) for i in range(I + 1)]
    r = S.escape_obstruction(vals, q=q)
    # with i = index - 1: 1/(q (q+1)^(i+1))
    assert r.exponent == Fraction(1, q * (q + 1) ** r.escape_index)
    assert r.escape_index == 0
    r = S.escape_obstruction(vals, q=q, start=Fraction(1))
    assert (r.escape_index, r.exponent) == (1, Fraction(1, q * (q + 1)))


@crit(10)
def test_escape_exponent_from_series():
    I = 3
    D = 3 ** I
    B = RamifiedBase(FieldTower(2), 1, D=D, P=2 * D)
    a = PrecSeries(B, {i: B.w(D // 3 ** i) for i in range(I + 1)})
    r = S.escape_obstruction(a)
    assert r.exponent == Fraction(1, 2 * 3 ** r.escape_index)


# --- 11 ---------------------------------------------------------------------------

def _diag_iso(T, ds):
    F = T.level(1)
    n = len(ds)
    return SigmaModule([[PrecSeries(F, {ds[a]: 1}) if a == b else PrecSeries(F, {})
                         for b in range(n)] for a in range(n)], T, 1)


@crit(11)
def test_admissible_implies_weakly_admissible():
    T, B, b = C.diagonal_setup(2)
    rng = random.Random(11)
    nos = 0
    for i in range(200):
        if i % 4:
            a = [B.elem({rng.randrange(4): 1, rng.randrange(4): rng.randrange(2)})
                 for _ in range(2)]
            P = PS.chart_point(a, 2, B)
        else:
            P = PS.lower_chart_point([B.elem({rng.randrange(1, 4): rng.randrange(2)}),
                                      B.elem({rng.randrange(4): 1})], 2, B)
        r = PS.classify(b, P)
        assert r.consistent()
        if r.adm.verdict == "Yes":
            assert r.wa.verdict == "Yes"
        if r.wa.verdict == "No":
            nos += 1
            assert hp.verify_wa_witness(PS.q_from_point(P, b), r.wa.witness)
    # lower-chart points with c_0 != 0 lie in the chart, so only some of them fail
    assert nos >= 10


@crit(11)
def test_weak_admissibility_is_invariant():
    B = RamifiedBase(T3, 1, D=1, P=30)
    iso = _diag_iso(T3, [-2, 1])
    L = hp.from_weights(_diag_iso(T3, [1]), [1], B, 7)
    assert hp.is_weakly_admissible(L).verdict == "Yes"
    rng = random.Random(5)
    seen = set()
    for trial in range(200):
        w = rng.choice([(-1, 0), (-2, 1), (-3, 2)])
        H = hp.random_structure(iso, list(w), B, 7, rng)
        r = hp.is_weakly_admissible(H)
        if r.verdict == "No":
            assert hp.verify_wa_witness(H, r.witness)
        ops = (hp.tate_twist(H, 1), hp.dual(H), hp.tensor(H, L), hp.direct_sum(H, L))
        for X in ops:
            rx = hp.is_weakly_admissible(X)
            assert rx.verdict == r.verdict
            if rx.verdict == "No":
                assert hp.verify_wa_witness(X, rx.witness)
        seen.add(r.verdict)
    assert seen == {"Yes", "No"}


@crit(11)
def test_weak_admissibility_of_rank_four_tensors():
    B = RamifiedBase(T3, 1, D=1, P=30)
    iso = _diag_iso(T3, [-2, 1])
    rng = random.Random(5)
    for _ in range(3):
        H1 = hp.random_structure(iso, [-1, 0], B, 12, rng)
        H2 = hp.random_structure(iso, [-2, 1], B, 12, rng)
        v1 = hp.is_weakly_admissible(H1).verdict
        v2 = hp.is_weakly_admissible(H2).verdict
        v = hp.is_weakly_admissible(hp.tensor(H1, H2)).verdict
        assert v == ("Yes" if v1 == v2 == "Yes" else "No")


@crit(11)
def test_norm_laws():
    rng = random.Random(6)
    for trial in range(200):
        q = (2, 3)[trial % 2]
        B = RamifiedBase(FieldTower.for_q(q), 1, D=rng.choice((1, 2)), P=40)
        r = rng.choice([Fraction(1), Fraction(1, 2), Fraction(2, 3), Fraction(3)])

        def rnd():
            return PrecSeries(B, {i: B.elem({rng.randrange(0, 6): rng.randrange(1, q)})
                                  for i in range(-2, 3) if rng.random() < 0.7})
        f, g = rnd(), rnd()
        nf, ng = norm_r(f, r)[0], norm_r(g, r)[0]
        if nf is None or ng is None:
            continue
        assert norm_r(f * g, r)[0] == nf + ng
        s = norm_r(f + g, r)[0]
        assert s is None or s >= min(nf, ng)
        # norms are exponents in zeta-units
        assert norm_r(f * PrecSeries(B, {0: B.zeta}), r)[0] == nf + 1


@crit(11)
def test_polygon_laws():
    rng = random.Random(7)
    for trial in range(200):
        P = from_slopes([Fraction(rng.randint(-6, 6), rng.randint(1, 3))
                         for _ in range(rng.randint(1, 5))])
        n = P.rank
        i = rng.randrange(n)
        j = rng.randint(i + 1, n)
        s = list(P.slopes)
        avg = sum(s[i:j], Fraction(0)) / (j - i)
        Q = from_slopes(s[:i] + [avg] * (j - i) + s[j:])
        R = from_slopes([sum(s, Fraction(0)) / n] * n)
        assert lies_above(P, P) and lies_above(Q, P) and lies_above(R, Q) and lies_above(R, P)
        if lies_above(P, Q):
            assert P == Q
        # adding a common polygon keeps the order
        X = from_slopes([Fraction(rng.randint(-3, 3))])
        assert lies_above(sum_polygons(Q, X), sum_polygons(P, X))
        assert endpoint(sum_polygons(P, X)) == (n + 1, endpoint(P)[1] + endpoint(X)[1])
