"""Slopes of z-isocrystals: conjugate a standard sum, then take it apart again.

Run: python demos/02_dieudonne_manin.py
"""
import random

from shtukalab.base_arith import FieldTower
from shtukalab.sigmamod import (conjugated_instance, decency_data, dm_decompose, dm_residual,
                                hom_space, newton_polygon, standard)

T = FieldTower.for_q(3)
rng = random.Random(4)

summands = [(-1, 1, 1), (1, 2, 1)]
M, g = conjugated_instance(summands, T, rng)
print("disguised matrix, entry (0,0):", M.Phi[0][0])

dec = dm_decompose(M, target=20, seed=0)
print("recovered summands:", dec.summands)
print("slopes:", dec.slopes, "| Newton polygon route:", newton_polygon(M))
res = dm_residual(M, dec, 20)
print("round-trip residual vanishes mod z^20:", all(e.is_zero() for row in res for e in row))

# the s-fold product of a decent matrix is diagonal in powers of z
print("F_{1,2}: s = 1 gives", decency_data(standard(1, 2, T).Phi, 1, T),
      "| s = 2 gives", decency_data(standard(1, 2, T).Phi, 2, T))

# End(F_{1,2}) is a quaternion-type division algebra: rank n^2 = 4
print("rank End(F_{1,2}) =", hom_space(standard(1, 2, T), standard(1, 2, T), 8).rank)
print("rank Hom(F_{1,2}, O(0)) =", hom_space(standard(1, 2, T), standard(0, 1, T), 8).rank)
