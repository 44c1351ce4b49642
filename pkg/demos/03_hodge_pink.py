"""Hodge-Pink lattices: weights, degrees and weak admissibility.

Run: python demos/03_hodge_pink.py
"""
import random

from shtukalab import hodgepink as hp
from shtukalab.base_arith import FieldTower, PrecSeries, RamifiedBase
from shtukalab.sigmamod import SigmaModule

T = FieldTower.for_q(3)
B = RamifiedBase(T, 1, D=1, P=30)
F = T.level(1)
iso = SigmaModule([[PrecSeries(F, {-2: 1}), PrecSeries(F, {})],
                   [PrecSeries(F, {}), PrecSeries(F, {1: 1})]], T, 1)

rng = random.Random(0)
for w in ([-1, 0], [-2, 1]):
    H = hp.random_structure(iso, w, B, 7, rng)
    r = hp.is_weakly_admissible(H)
    print(f"weights {H.weights()}  t_H {H.t_H()} (det route {H.t_H('det')})  "
          f"t_N {H.t_N()}  WA {r.verdict} via {r.rule}")
    if r.verdict == "No":
        print("   witness re-verified:", hp.verify_wa_witness(H, r.witness))

one = hp.tate_object(1, T, B, 5)
print("Tate object 1(1): weights", one.weights(), "pair degrees", one.pair_degrees())
H = hp.random_structure(iso, [-1, 0], B, 7, rng)
print("twist by 1(1) shifts the weights:", H.weights(), "->", hp.tate_twist(H, 1).weights())
print("dual negates them:", hp.dual(H).weights())
