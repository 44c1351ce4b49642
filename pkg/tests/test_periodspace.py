import random

import pytest

from shtukalab import catalog as C
from shtukalab import periodspace as PS
from shtukalab.base_arith import FieldTower, PrecSeries, RamifiedBase, ZetaJet
from shtukalab.errors import NotInJ, WeightMismatch
from shtukalab.hodgepink import jet_mat_mul, jet_zero


@pytest.fixture(scope="module")
def diag2():
    return C.diagonal_setup(2, 2)


def _chart(B, coeffs, d=2):
    return PS.chart_point([B.elem(c) for c in coeffs], d, B)


def test_representative_is_canonical_under_stabilizer(diag2):
    T, B, b = diag2
    rng = random.Random(7)
    P = _chart(B, [{0: 1, 1: 1}, {2: 1}])
    for _ in range(10):
        s = PS.random_S(P.w, P.e, B, rng)
        assert PS.s_membership(s, P.w)
        Q = PS.make_point(P.w, P.e, jet_mat_mul(P.rep, s), B)
        assert Q.same(P)


def test_distinct_chart_points_differ(diag2):
    T, B, b = diag2
    assert not _chart(B, [{0: 1}, {}]).same(_chart(B, [{0: 1}, {1: 1}]))


def test_s_membership_rejects_wrong_divisibility(diag2):
    T, B, b = diag2
    E = 5
    one = ZetaJet.const(B, B.one(), E)
    w = (-2, 0)
    # entry (0, 1) must be divisible by y^(w_1 - w_0) = y^2; entry (1, 0) is free
    s = [[one, one], [jet_zero(B, E), one]]
    assert not PS.s_membership(s, w)
    s = [[one, ZetaJet.y_power(B, 2, E)], [one, one]]
    assert PS.s_membership(s, w)
    # divisible but not invertible
    s = [[one, ZetaJet.y_power(B, 2, E)], [jet_zero(B, E), jet_zero(B, E)]]
    assert not PS.s_membership(s, w)


def test_chart_with_vanishing_constant_term(diag2):
    # the hermite step must keep y^(2e - o) * pivot when the pivot is not a unit
    T, B, b = diag2
    P = _chart(B, [{}, {1: 1}])
    r = PS.classify(b, P)
    assert (r.wa.verdict, r.adm.verdict) == ("Yes", "Yes")


def test_weights_are_validated(diag2):
    T, B, b = diag2
    with pytest.raises(WeightMismatch):
        PS.make_point((0, -2), 2, _chart(B, [{}, {}]).rep, B)


@pytest.mark.parametrize("gc", [{0: 1, 1: 1}, {1: 1}, {0: 1, 2: 1}, {1: 1, 2: 1}])
def test_j_action_matches_jet_formula(diag2, gc):
    T, B, b = diag2
    F = B.F
    g = PrecSeries(F, gc)
    a = [B.elem({0: 1, 1: 1}), B.elem({3: 1})]
    P = PS.chart_point(a, 2, B)
    G = [[g, PrecSeries(F, {})], [PrecSeries(F, {}), PrecSeries.one(F)]]
    moved = PS.j_action(G, P, b)
    assert moved.same(PS.chart_point(C.jet_formula(g, a, B), 2, B))


def test_j_action_rejects_non_commuting(diag2):
    T, B, b = diag2
    F = B.F
    G = [[PrecSeries.one(F), PrecSeries.one(F)], [PrecSeries(F, {}), PrecSeries.one(F)]]
    with pytest.raises(NotInJ):
        PS.j_action(G, _chart(B, [{0: 1}, {}]), b)


def test_transport_preserves_verdicts():
    T = FieldTower.for_q(2)
    B = RamifiedBase(T, 2, D=1, P=40)
    F1 = T.level(1)
    zi = PrecSeries(F1, {-1: 1})
    from shtukalab.sigmamod import SigmaModule
    b_decent = SigmaModule([[zi, PrecSeries(F1, {})], [PrecSeries(F1, {}), zi]], T, 1)
    g, b_anti = C.antidiagonal_conjugator(T)
    for coeffs, want in [([{1: 1}, {0: 1}], "No"), ([{1: 1}, {}], "Yes")]:
        P = _chart(B, coeffs)
        r0 = PS.classify(b_decent, P)
        r1 = PS.classify(b_anti, PS.transport(g, P))
        assert r0.wa.verdict == r1.wa.verdict == want
        assert r0.adm.verdict == r1.adm.verdict


def test_classify_summary_fields(diag2):
    T, B, b = diag2
    r = PS.classify(b, _chart(B, [{0: 1}, {}]))
    s = r.summary()
    assert s["weights"] == [-2, 0] and s["t_H"] == -2 and s["t_N"] == -2
    assert s["WA"] == "Yes" and s["Adm"] == "Yes" and r.consistent()


def test_exceptional_point_has_rechecked_witness(diag2):
    T, B, b = diag2
    P = PS.lower_chart_point([B.zero(), B.one()], 2, B)
    r = PS.classify(b, P)
    assert (r.wa.verdict, r.adm.verdict) == ("No", "No")
    assert C.check_wa_witnesses(b, P)


def test_point_from_gamma_roundtrip(diag2):
    T, B, b = diag2
    P = _chart(B, [{0: 1}, {1: 1}])
    H = PS.q_from_point(P, b)
    Q = PS.point_from_gamma(H.gamma, H.shift, B)
    assert Q.same(P)


def test_grid_enumeration_size():
    B = RamifiedBase(FieldTower.for_q(3), 1, D=1, P=20)
    spec = {"base": B, "levels": [[0, 1], [0]]}
    pts = list(PS.sample_grid(spec))
    assert len(pts) == PS.grid_size(spec) == 27
    assert len({c for c, _ in pts}) == 27
