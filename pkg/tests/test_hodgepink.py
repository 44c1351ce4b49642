import random

import pytest
from hypothesis import given, settings, strategies as st

from shtukalab import hodgepink as hp
from shtukalab.base_arith import FieldTower, PrecSeries, RamifiedBase, ZetaJet
from shtukalab.errors import JetOrderTooSmall
from shtukalab.sigmamod import SigmaModule

T3 = FieldTower.for_q(3)
B3 = RamifiedBase(T3, 1, D=1, P=30)
F3 = T3.level(1)
T2 = FieldTower.for_q(2)
B2 = RamifiedBase(T2, 1, D=1, P=40)


def z(F, k):
    return PrecSeries(F, {k: 1})


def diag_iso(T, ds):
    F = T.level(1)
    n = len(ds)
    return SigmaModule([[z(F, d) if i == j else PrecSeries(F, {}) for j, d in enumerate(ds)]
                        for i in range(n)], T, 1)


ISO = diag_iso(T3, [-2, 1])


@settings(max_examples=15)
@given(st.integers(0, 10 ** 6), st.sampled_from([(-1, 0), (-2, 1), (0, 0), (-3, 2), (1, 3)]))
def test_smith_form_diagonalizes(seed, w):
    rng = random.Random(seed)
    H = hp.random_structure(ISO, list(w), B3, 7, rng)
    S = hp.smith_form(H.gamma, track_right=True)
    D = hp.jet_mat_mul(hp.jet_mat_mul(S.L, H.gamma), S.R)
    for i in range(2):
        for j in range(2):
            x = D[i][j]
            if i == j:
                # y^e times a unit
                assert x.ord() == S.exps[i] and not x.shift_down(S.exps[i]).c[0].is_zero()
            else:
                assert x.is_zero()
    assert H.weights() == sorted(w)


@given(st.integers(0, 10 ** 6), st.sampled_from([(-1, 0), (-2, 1), (0, 0), (-3, 2)]))
def test_t_H_two_routes(seed, w):
    H = hp.random_structure(ISO, list(w), B3, 7, random.Random(seed))
    assert H.t_H() == H.t_H("det") == sum(w)


def test_tate_object():
    for n in (-2, -1, 0, 1, 3):
        H = hp.tate_object(n, T2, B2, 6)
        assert H.weights() == [n]
        assert H.t_N() == H.t_H() == n
        assert H.pair_degrees() == (-n, 0)
        assert hp.is_weakly_admissible(H).verdict == "Yes"


def test_operations_on_weights():
    rng = random.Random(3)
    H = hp.random_structure(ISO, [-1, 2], B3, 8, rng)
    L = hp.tate_object(1, T3, B3, 8)
    assert hp.tensor(H, L).weights() == [0, 3]
    assert hp.dual(H).weights() == [-2, 1]
    assert hp.direct_sum(H, L).weights() == [-1, 1, 2]
    assert hp.tate_twist(H, 2).weights() == [1, 4]
    assert hp.same_lattice(hp.dual(hp.dual(H)), H)
    # t_N(H (x) L) = rk(L) t_N(H) + rk(H) t_N(L)
    assert hp.tensor(H, L).t_N() == H.t_N() + 2 * L.t_N()


def test_filtration_dimensions():
    H = hp.random_structure(ISO, [-1, 1], B3, 7, random.Random(1))
    dims = {i: d for i, (d, _) in H.hp_filtration().items()}
    assert dims == {-2: 2, -1: 2, 0: 1, 1: 1, 2: 0}


def test_subobject_routes_agree():
    rng = random.Random(7)
    V1 = [[z(F3, 0)], [PrecSeries(F3, {})]]
    for _ in range(10):
        H = hp.random_structure(ISO, [-2, 1], B3, 7, rng)
        S = hp.strict_subobject(H, V1)
        assert hp.subobject_t_H(H, V1) == S.t_H() == S.t_H("det")


@given(st.integers(0, 10 ** 6))
def test_wa_against_coordinate_line_oracle(seed):
    """With distinct slopes the only F-stable lines are the coordinate axes."""
    rng = random.Random(seed)
    w = rng.choice([(-1, 0), (-2, 1), (-3, 2)])
    H = hp.random_structure(ISO, list(w), B3, 7, rng)
    t1 = hp.subobject_t_H(H, [[z(F3, 0)], [PrecSeries(F3, {})]])
    t2 = hp.subobject_t_H(H, [[PrecSeries(F3, {})], [z(F3, 0)]])
    truth = "Yes" if (t1 <= -2 and t2 <= 1) else "No"
    r = hp.is_weakly_admissible(H)
    assert r.verdict == truth
    if r.verdict == "No":
        assert hp.verify_wa_witness(H, r.witness)


def test_global_degree_rule():
    H = hp.random_structure(ISO, [0, 0], B3, 7, random.Random(0))
    r = hp.is_weakly_admissible(H)
    assert (r.verdict, r.rule) == ("No", "global-degree")
    assert hp.is_admissible(H, wa=r).verdict == "No"


def test_repeated_slopes_line_search():
    iso = diag_iso(T2, [-1, -1])
    E = 5
    y = lambda k: ZetaJet.y_power(B2, k, E)
    Z = hp.jet_zero(B2, E)
    bad = hp.HodgePinkStructure(iso, [[y(0), Z], [Z, y(2)]], 0, B2)
    r = hp.is_weakly_admissible(bad)
    assert r.verdict == "No" and r.rule == "subobject"
    assert hp.verify_wa_witness(bad, r.witness)
    # a generic chart point is weakly admissible, and then admissible
    a = ZetaJet(B2, [B2.zeta, B2.zeta_pow(2)] + [B2.zero()] * (E - 2))
    good = hp.HodgePinkStructure(iso, [[a, y(2)], [y(0), Z]], 0, B2)
    r = hp.is_weakly_admissible(good)
    assert r.verdict == "Yes"
    adm = hp.is_admissible(good, wa=r)
    assert adm.verdict == "Yes"
    assert adm.rule == "weakly-admissible-value-group-not-q-divisible"


def test_jet_order_too_small_is_reported():
    iso = diag_iso(T2, [0, 0])
    E = 2
    y = lambda k: ZetaJet.y_power(B2, k, E)
    Z = hp.jet_zero(B2, E)
    H = hp.HodgePinkStructure(iso, [[y(0), Z], [Z, y(3)]], 0, B2)
    with pytest.raises(JetOrderTooSmall):
        H.weights()


def test_decency():
    from shtukalab.sigmamod import standard_matrix
    s, d = hp.find_decency(standard_matrix(3, 2, T2.level(1)), T2, 8)
    assert (s, d) == (2, (-3, -3))
