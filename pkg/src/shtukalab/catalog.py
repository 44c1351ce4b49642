"""The worked period-space families, with their expected verdicts.

* ``hopkins_gross``: b = A_{-1,n}, weights (0, ..., 0, 1); every point of
  P^(n-1) is admissible.
* ``antidiagonal``: b = [[0, z^-d], [1, 0]], weights (-d, 0).  For d = 2 the
  decent form b' = z^-1 Id is used; the non weakly admissible points are the
  jets (g(zeta), g'(zeta)) of power series g over F_q and the point (1, 0).
  For d = 3 a point over a base with q-divisible value group is weakly
  admissible but not admissible.
* ``diagonal``: b = diag(z^-d, 1), weights (-d, 0); the chart points are all
  admissible, the points <(1, a_1 y + ...)> + y^d p are not weakly
  admissible.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .base_arith import FieldTower, PrecSeries, RamifiedBase, ZetaJet
from .hodgepink import (apply_F_twisted, from_weights, invariant_seed, jet_vector, jet_zero,
                        verify_invariant_witness, verify_wa_witness, _root_window)
from .periodspace import (chart_point, classify, field_span, hasse_jet, j_action,
                          lower_chart_point, make_point, point_from_gamma, q_from_point,
                          transport)
from .sigmamod import SigmaModule, standard_matrix


# ---------------------------------------------------------------------------
# Hopkins-Gross

def hopkins_gross_setup(n: int, q: int = 2, D: int = 1, P: int = 40):
    T = FieldTower.for_q(q)
    B = RamifiedBase(T, 1, D=D, P=P)
    b = SigmaModule(standard_matrix(-1, n, T.level(1)), T, 1)
    return T, B, b


def hopkins_gross_points(n: int, B: RamifiedBase, count: int, seed: int = 0):
    """Random K-rational points of P^(n-1): q = p + y^-1 <v>."""
    rng = random.Random(seed)
    E = 3
    F = B.F
    out = []
    while len(out) < count:
        v = []
        for _ in range(n):
            t = {k: rng.randrange(0, F.Q) for k in rng.sample(range(0, 4 * B.E + 1), 2)}
            v.append(B.elem(t))
        piv = [i for i in range(n) if v[i].t]
        if not piv:
            continue
        i0 = min(piv, key=lambda i: (v[i].valuation(), i))
        others = [j for j in range(n) if j != i0]
        rep = [[None] * n for _ in range(n)]
        for c, j in enumerate(others):
            for i in range(n):
                rep[i][c] = ZetaJet.const(B, B.one() if i == j else B.zero(), E)
        for i in range(n):
            rep[i][n - 1] = ZetaJet.const(B, v[i], E)
        out.append(make_point(tuple([0] * (n - 1) + [1]), 1, rep, B, label=f"hg{n}-{len(out)}"))
    return out


# ---------------------------------------------------------------------------
# antidiagonal b

def antidiagonal_matrix(d: int, F):
    return [[PrecSeries(F, {}), PrecSeries(F, {-d: 1})],
            [PrecSeries(F, {0: 1}), PrecSeries(F, {})]]


def antidiagonal_d2_setup(q: int = 2, D: int = 1, P: int = 40):
    """Decent form b' = z^-1 Id of the d = 2 antidiagonal matrix."""
    T = FieldTower.for_q(q)
    B = RamifiedBase(T, 1, D=D, P=P)
    F = T.level(1)
    zi = PrecSeries(F, {-1: 1})
    b = SigmaModule([[zi, PrecSeries(F, {})], [PrecSeries(F, {}), zi]], T, 1)
    return T, B, b


def antidiagonal_conjugator(T: FieldTower, lam: int | None = None):
    """(g, b) with b antidiagonal (d = 2) and g^-1 b g^sigma = z^-1 Id, over F_{q^2}."""
    F2 = T.level(2)
    F1 = T.level(1)
    if lam is None:
        lam = next(x for x in range(F2.Q) if not F2.contains(x, F1))
    lq = F2.frobp(lam, T.f)
    g = [[PrecSeries(F2, {-1: 1}), PrecSeries(F2, {-1: lam})],
         [PrecSeries(F2, {0: 1}), PrecSeries(F2, {0: lq})]]
    b = SigmaModule(antidiagonal_matrix(2, F2), T, 2)
    return g, b


def _derivative(coeffs, levels, F):
    """Coefficients of d/dzeta sum c_k zeta^k, as {exponent: value}."""
    out = {}
    for c, k in zip(coeffs, levels):
        if k and c:
            v = F.mul(F.from_int(k % F.p), c)
            if v:
                out[k - 1] = F.add(out.get(k - 1, 0), v)
    return {k: v for k, v in out.items() if v}


def antidiagonal_d2_grid(B: RamifiedBase, levels0=(0, 1, 2, 3), levels1=(0, 1, 2)):
    """Chart points <(a0 + a1 y, 1)> + y^2 p with a_i in F_q-spans of zeta powers.

    Expected: not weakly admissible exactly when a1 = da0/dzeta, i.e. the
    point is the jet of the power series g = a0(z).
    """
    F = B.F
    rows = []
    span0 = field_span(B, list(levels0))
    span1 = field_span(B, list(levels1))
    for c0, a0 in span0:
        der = _derivative(c0, levels0, F)
        for c1, a1 in span1:
            mine = {k: c for c, k in zip(c1, levels1) if c}
            family = mine == der
            P = chart_point([a0, a1], 2, B, label=f"a0={list(c0)},a1={list(c1)}")
            exp = ("No", "No") if family else ("Yes", "Yes")
            rows.append((P, exp))
    E = 5
    one, zero = ZetaJet.const(B, B.one(), E), jet_zero(B, E)
    P = make_point((-2, 0), 2, [[zero, one], [one, zero]], B, label="(1,0)")
    rows.append((P, ("No", "No")))
    return rows


def antidiagonal_d3_setup(I: int = 3, q: int = 2):
    """Base F_{q^2}((zeta^(1/q^(2I)))) flagged as a truncation of a field with
    q-divisible value group; b = A_{3,2}."""
    T = FieldTower.for_q(q)
    D = q ** (2 * I)
    B = RamifiedBase(T, 2, D=D, P=8 * D, q_divisible=True, label="q-divisible truncation")
    b = SigmaModule(standard_matrix(3, 2, T.level(2)), T, 2)
    return T, B, b


def antidiagonal_d3_point(B: RamifiedBase, b: SigmaModule, E: int = 4):
    """q = <jet f> + y^3 p for the F-invariant f of P(-1) built from u = zeta."""
    u = [B.zeta]
    nu_min = _root_window(u, 2)
    seed = invariant_seed(1, 2, u, (nu_min, None), B)
    Htmp = from_weights(b, [-3, 0], B, 4)
    f0 = [seed, PrecSeries(B, {})]
    f = [x + y for x, y in zip(f0, apply_F_twisted(Htmp, f0))]
    xj = jet_vector(f, B, E)
    P = point_from_gamma([[xj[0], ZetaJet.y_power(B, 3, E)], [xj[1], jet_zero(B, E)]], 0, B,
                         label="u=zeta")
    return P, f


# ---------------------------------------------------------------------------
# diagonal b

def diagonal_setup(d: int, q: int = 2, D: int = 1, P: int = 40):
    T = FieldTower.for_q(q)
    B = RamifiedBase(T, 1, D=D, P=P)
    F = T.level(1)
    b = SigmaModule([[PrecSeries(F, {-d: 1}), PrecSeries(F, {})],
                     [PrecSeries(F, {}), PrecSeries(F, {0: 1})]], T, 1)
    return T, B, b


def diagonal_grid(B: RamifiedBase, d: int, levels=(0, 1)):
    """Chart points (expected admissible) and exceptional points (expected No)."""
    rows = []
    span = field_span(B, list(levels))
    for combo in itertools.product(span, repeat=d):
        a = [x for _, x in combo]
        lab = ",".join(str(list(c)) for c, _ in combo)
        rows.append((chart_point(a, d, B, label=f"chart({lab})"), ("Yes", "Yes")))
    for combo in itertools.product(span, repeat=d - 1):
        c = [B.zero()] + [x for _, x in combo]
        lab = ",".join(str(list(cc)) for cc, _ in combo)
        rows.append((lower_chart_point(c, d, B, label=f"exceptional({lab})"), ("No", "No")))
    return rows


def jet_formula(g: PrecSeries, a, B: RamifiedBase):
    """(g(zeta) a_0, g(zeta) a_1 + g'(zeta) a_0, ...) with Hasse derivatives."""
    d = len(a)
    h = hasse_jet(g, B, d)
    return [sum((h[j] * a[k - j] for j in range(1, k + 1)), h[0] * a[k]) for k in range(d)]


# ---------------------------------------------------------------------------
# demo runner

@dataclass
class DemoRow:
    label: str
    expected: tuple
    got: tuple
    rules: tuple
    extra: dict = field(default_factory=dict)

    @property
    def match(self):
        return self.expected == self.got


@dataclass
class DemoResult:
    example: str
    params: dict
    rows: list

    @property
    def ok(self):
        return all(r.match for r in self.rows)


def _row(b, P, expected):
    r = classify(b, P)
    return DemoRow(P.label, expected, (r.wa.verdict, r.adm.verdict), (r.wa.rule, r.adm.rule))


def _grid(example: str, q: int, n: int, d: int, count: int, seed: int, levels: int):
    """(b, [(point, expected)]) for the grid examples, in enumeration order."""
    if example == "8.1":
        T, B, b = hopkins_gross_setup(n, q)
        return b, [(P, ("Yes", "Yes")) for P in hopkins_gross_points(n, B, count, seed)]
    if example == "8.2" and d == 2:
        T, B, b = antidiagonal_d2_setup(q)
        return b, antidiagonal_d2_grid(B)
    if example == "8.3":
        T, B, b = diagonal_setup(d, q)
        return b, diagonal_grid(B, d, tuple(range(levels)))
    raise ValueError(f"unknown example {example!r} (d={d})")


def _grid_worker(args):
    key, idx = args
    b, items = _grid(*key)
    return [_row(b, *items[i]) for i in idx]


def _d3_row(q: int) -> DemoRow:
    T, B, b = antidiagonal_d3_setup(q=q)
    P, f = antidiagonal_d3_point(B, b)
    r = classify(b, P)
    extra = {}
    if r.adm.witness:
        v = verify_invariant_witness(q_from_point(P, b), r.adm.witness)
        extra = {"witness_ok": v["ok"], "membership": v["membership"],
                 "jet_precision": r.adm.witness["jet_precision"]}
    got = (r.wa.verdict, r.adm.verdict if extra.get("witness_ok") else "unverified")
    return DemoRow(P.label, ("Yes", "No"), got, (r.wa.rule, r.adm.rule), extra)


def run_demo(example: str, q: int = 2, n: int = 2, d: int = 2, count: int = 50,
             seed: int = 0, levels: int = 2, jobs: int = 1) -> DemoResult:
    """Classify every point of an example and compare with the expected verdicts.

    With jobs > 1 the grid is split into contiguous chunks evaluated in
    worker processes; rows are reassembled in enumeration order.
    """
    example = str(example)
    params = {"q": q}
    if example == "8.1":
        params.update(n=n, count=count, seed=seed)
    else:
        params.update(d=d)
    if example == "8.3":
        params.update(levels=levels)
    if example == "8.2" and d == 3:
        return DemoResult(example, params, [_d3_row(q)])
    key = (example, q, n, d, count, seed, levels)
    b, items = _grid(*key)
    if jobs <= 1 or len(items) < 2 * jobs:
        return DemoResult(example, params, [_row(b, P, exp) for P, exp in items])
    from concurrent.futures import ProcessPoolExecutor
    size = -(-len(items) // jobs)
    chunks = [list(range(i, min(i + size, len(items)))) for i in range(0, len(items), size)]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        parts = list(ex.map(_grid_worker, [(key, c) for c in chunks]))
    return DemoResult(example, params, [r for part in parts for r in part])


def check_wa_witnesses(b, P) -> bool:
    """Re-verify the weak-admissibility witness of a No verdict."""
    r = classify(b, P)
    if r.wa.verdict != "No":
        return True
    return verify_wa_witness(q_from_point(P, b), r.wa.witness)


__all__ = [name for name in dir() if not name.startswith("_")] + ["j_action", "transport"]
