import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from shtukalab.base_arith import FieldTower, PrecSeries, RamifiedBase, mat_mul
from shtukalab.errors import HypothesisFailed
from shtukalab.polygon import from_slopes
from shtukalab.sigmamod import (SigmaModule, block_standard, conjugated_instance, decency_data,
                                det_order, direct_sum, dm_decompose, dm_residual, dual,
                                hom_relation_residual, hom_space, newton_polygon,
                                norm_contraction_reduce, o_d_invariant, o_module,
                                random_standard_sum, sigma, slope, standard, standard_matrix,
                                tensor, twist, verify_norm_contraction, wedge)

T2 = FieldTower.for_q(2)
T3 = FieldTower.for_q(3)


def test_standard_matrix_shape():
    F = T2.level(1)
    A = standard_matrix(1, 2, F)
    # companion of x^2 - z^-1: slope -1/2
    assert A[0][1].c == {-1: 1} and A[1][0].c == {0: 1}
    assert slope(standard(1, 2, T2)) == Fraction(-1, 2)
    assert det_order(standard(2, 3, T2)) == -2


@pytest.mark.parametrize("d,n", [(1, 1), (-1, 1), (1, 2), (-1, 2), (2, 3), (-1, 3), (0, 1)])
def test_standard_slopes(d, n):
    M = standard(d, n, T2)
    assert newton_polygon(M) == from_slopes([Fraction(-d, n)] * n)


@pytest.mark.parametrize("d,n", [(1, 2), (2, 3), (-1, 2), (3, 1)])
def test_standard_is_decent(d, n):
    # A_{d,n} A_{d,n}^sigma ... (n factors) = z^-d Id
    assert decency_data(standard_matrix(d, n, T2.level(1)), n, T2) == tuple([-d] * n)
    if n > 1:
        assert decency_data(standard_matrix(d, n, T2.level(1)), 1, T2) is None


def test_diagonal_z_powers_give_their_exponents():
    F = T3.level(1)
    ds = [-2, 0, 3]
    Phi = [[PrecSeries(F, {d: 1}) if i == j else PrecSeries(F, {}) for j, d in enumerate(ds)]
           for i in range(3)]
    assert newton_polygon(SigmaModule(Phi, T3, 1)) == from_slopes(ds)


def test_operations_on_slopes():
    M, N = standard(1, 2, T2), o_module(-1, T2)
    assert newton_polygon(tensor(M, N)) == from_slopes([Fraction(1, 2)] * 2)
    assert newton_polygon(dual(M)) == from_slopes([Fraction(1, 2)] * 2)
    assert newton_polygon(direct_sum(M, N)) == from_slopes([Fraction(-1, 2)] * 2 + [1])
    assert newton_polygon(wedge(direct_sum(M, N), 2)) == from_slopes(
        [-1, Fraction(1, 2), Fraction(1, 2)])
    assert newton_polygon(twist(M, 1)) == from_slopes([Fraction(-3, 2)] * 2)


@given(st.integers(0, 10 ** 6))
def test_conjugated_instances_decompose(seed):
    rng = random.Random(seed)
    T = rng.choice([T2, T3])
    summ = random_standard_sum(rng, max_rank=2, max_d=2)
    M, g = conjugated_instance(summ, T, rng)
    dec = dm_decompose(M, target=20, seed=seed)
    assert dec.summands == summ
    assert all(e.is_zero() for row in dm_residual(M, dec, 20) for e in row)


def test_hom_space_ranks():
    M = standard(1, 2, T2)
    H = hom_space(M, M, 8)
    assert H.rank == 4
    for X in H.basis:
        res = hom_relation_residual(M, M, X, H.level)
        assert all(e.trunc(8).is_zero() for row in res for e in row)
    assert hom_space(o_module(0, T2), o_module(0, T2), 8).rank == 1
    assert hom_space(o_module(0, T2), o_module(1, T2), 8).rank == 0


def test_o_d_invariant_is_fixed():
    B = RamifiedBase(T2, 1, D=1, P=40)
    f = o_d_invariant(1, [B.zeta], (0, None), B)
    # z^-1 f^sigma = f
    g = f.frob().shift(-1)
    for k in range(-5, 0):
        assert (g.coeff(k) - f.coeff(k)).truncate(B.P).is_zero()


def test_norm_contraction_reduces_to_standard():
    B = RamifiedBase(T2, 1, D=1, P=30)
    F = T2.level(1)
    D = [[PrecSeries(B, {0: B.one()}), PrecSeries(B, {})],
         [PrecSeries(B, {}), PrecSeries(B, {1: B.one()})]]
    # perturb by zeta-small entries, including a polar one
    A = [[PrecSeries(B, {0: B.one(), -1: B.zeta_pow(4)}), PrecSeries(B, {0: B.zeta_pow(3)})],
         [PrecSeries(B, {-1: B.zeta_pow(4)}), PrecSeries(B, {1: B.one()})]]
    res = norm_contraction_reduce(A, D, 1)
    only_pos, nZ = verify_norm_contraction(A, D, res.U, 1)
    assert only_pos
    assert res.c_exponent > 0


def test_norm_contraction_checks_its_hypothesis():
    B = RamifiedBase(T2, 1, D=1, P=30)
    D = [[PrecSeries(B, {0: B.one()})]]
    A = [[PrecSeries(B, {0: B.one(), -3: B.one()})]]
    with pytest.raises(HypothesisFailed):
        norm_contraction_reduce(A, D, 1)


def test_sigma_twists_coefficients():
    F = T2.level(2)
    g = F.gen()
    A = [[PrecSeries(F, {1: g})]]
    assert sigma(A, 1, T2.f)[0][0].c == {1: F.frobp(g, 1)}
    assert mat_mul(A, A)[0][0].c == {2: F.mul(g, g)}
