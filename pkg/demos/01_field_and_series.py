"""Finite field towers, the ramified base and truncated series.

Run: python demos/01_field_and_series.py
"""
from fractions import Fraction

from shtukalab.base_arith import (FieldTower, PrecSeries, RamifiedBase, artin_schreier_solve,
                                  fmt_kelem, fmt_series, norm_r, qth_root, reexpand_at)

T = FieldTower.for_q(4)
F = T.level(2)                       # F_16 inside the tower over F_4
g = F.gen()
print("F_16 generator g, g^15 =", F.fmt(F.pow(g, 15)))

# y^4 - y = c may need a degree-2 extension of F_16
for c in (g, F.mul(g, g)):
    y, m2 = artin_schreier_solve(c, T, 2)
    print(f"y^4 - y = {F.fmt(c)}: root {T.level(m2).fmt(y)} in F_(4^{m2}) (written in its own generator)")
print("4th root of g:", F.fmt(qth_root(g, T, 2)))

# K = F_2((w)) with zeta = w^3
B = RamifiedBase(FieldTower(2), 1, D=3, P=24)
f = PrecSeries(B, {0: B.one(), 1: B.zeta, 3: B.w(1)})
print("f =", fmt_series(f))
print("1/f mod z^6 =", fmt_series(f.inverse(6)))

# expansion at z = zeta: the coefficients are Hasse derivatives
print("jet of f at zeta:", [fmt_kelem(c) for c in reexpand_at(f, B.zeta, 4).c])

# ||h||_r = max |h_i| |zeta|^(r i), reported as an exponent of |zeta|
h = f - PrecSeries.one(B)
for r in (Fraction(1, 3), Fraction(1), Fraction(2)):
    e, exact = norm_r(h, r)
    print(f"r = {r}: ||h|| = |zeta|^({e}) (certain: {exact}); ||h^2|| = |zeta|^({norm_r(h * h, r)[0]})")
