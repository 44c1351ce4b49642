"""Local shtukas: rigidification, the induced Hodge-Pink structure and Tate modules.

Run: python demos/04_shtuka.py
"""
from fractions import Fraction

from shtukalab import shtuka as S
from shtukalab.base_arith import FieldTower, PrecSeries, RamifiedBase, fmt_series

B = RamifiedBase(FieldTower(2), 1, D=1, P=40)
one, zero = PrecSeries.one(B), PrecSeries.zero(B)

# 1(1): A = z - zeta.  The rigidification is t^-1.
M = S.tate_shtuka(1, B)
R = S.rigidify(M)
print("1(1): C = t^-%d * C0, C0 = %s" % (R.t_pow, fmt_series(R.C0[0][0])))

# an extension of 1(1) by the trivial shtuka
M = S.LocalShtuka([[one, PrecSeries(B, {0: B.zeta})], [zero, S.zeta_linear(B)]], 0, B)
R = S.rigidify(M)
print("iterate gaps:", R.history, "-> checks:", S.check_rigidification(M, R))
H = S.mysterious_functor(M, R, E=5)
print("induced Hodge-Pink weights", H.weights(), "t_H", H.t_H(), "t_N", H.t_N())

# Galois action on solutions of x = A x^sigma over F_3
B3 = RamifiedBase(FieldTower(3), 1, D=1, P=30)
o3, z3, n3 = PrecSeries.one(B3), PrecSeries.monomial(B3, 1), PrecSeries.zero(B3)
Tm = S.tate_module(S.LocalShtuka([[n3, o3], [o3 + z3, n3]], 0, B3), 3)
print("solutions live over F_{3^%d}; Frobenius acts by" % Tm.solution.base.m)
for row in Tm.action:
    print("   ", [fmt_series(x) for x in row])

# valuations forced on a rigidification when K has value group Z[1/3]
r = S.escape_obstruction([Fraction(1, 3 ** i) for i in range(6)], q=2)
print("first escape at index", r.escape_index, "with valuation", r.exponent)
