"""The three worked period-space families, classified point by point.

Run: python demos/05_period_examples.py
"""
from shtukalab import catalog as C
from shtukalab import periodspace as PS
from shtukalab.base_arith import PrecSeries, fmt_kelem

for example, kw in [("8.1", {"n": 3, "count": 10}), ("8.2", {"d": 2}), ("8.2", {"d": 3}),
                    ("8.3", {"d": 2, "levels": 2})]:
    res = C.run_demo(example, **kw)
    no = [r.label for r in res.rows if r.got[0] == "No"]
    print(f"{example} {kw}: {len(res.rows)} points, all as expected: {res.ok}")
    if no:
        print("   not weakly admissible:", ", ".join(no[:5]), "..." if len(no) > 5 else "")
    if example == "8.2" and kw["d"] == 3:
        print("   witness check:", res.rows[0].extra)

# J acts on the diagonal family by g -> (jets of g) * a
T, B, b = C.diagonal_setup(2)
F = B.F
g = PrecSeries(F, {0: 1, 1: 1})
a = [B.zeta, B.one()]
P = PS.chart_point(a, 2, B)
G = [[g, PrecSeries(F, {})], [PrecSeries(F, {}), PrecSeries.one(F)]]
Q = PS.j_action(G, P, b)
moved = C.jet_formula(g, a, B)
print("diag(1 + z, 1) moves", [fmt_kelem(x) for x in a], "to", [fmt_kelem(x) for x in moved],
      "| agrees with the action:", Q.same(PS.chart_point(moved, 2, B)))
