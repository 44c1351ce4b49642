"""Points of period spaces as jet-lattice cosets, the J-action and the
classifier pipeline, plus chart coordinates for rank two."""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

from .base_arith import (KElem, PrecSeries, RamifiedBase, ZetaJet, mat_mul, mat_sub,
                         reexpand_at, to_base)
from .errors import NotInJ, WeightMismatch
from .hodgepink import (AdmReport, HodgePinkStructure, WAReport, default_s_cap, find_decency,
                        is_admissible, is_weakly_admissible, jet_inverse,
                        jet_mat_mul, jet_zero, smith_form)
from .sigmamod import SigmaModule, sigma


# ---------------------------------------------------------------------------
# lattice normal form

def _pad(x: ZetaJet, E: int) -> ZetaJet:
    B = x.B
    cs = x.c[:E] + [B.zero() for _ in range(E - x.E)]
    return ZetaJet(B, cs)


def hermite_form(cols, n: int, e2: int):
    """Normal form of the K[[y]]-lattice spanned by ``cols`` and y^e2 K[[y]]^n.

    Returns (exps, H): H[j] is the j-th basis column, zero above row j,
    y^exps[j] on the diagonal, and entries below the diagonal reduced to
    degree < exps[i].  The result depends only on the lattice.
    """
    B = cols[0][0].B
    V = [[_pad(x, e2) for x in c] for c in cols]
    exps, H = [], []
    for r in range(n):
        best = None
        for k, v in enumerate(V):
            o = v[r].ord()
            if o < e2 and (best is None or o < best[0]):
                best = (o, k)
        if best is None:
            exps.append(e2)
            H.append([jet_zero(B, e2) for _ in range(n)])
            continue
        o, k = best
        piv = V.pop(k)
        uinv = piv[r].shift_down(o).inverse()
        piv = [x * uinv for x in piv]
        rest = []
        for v in V:
            x = v[r]
            if not x.is_zero():
                f = x.shift_down(o)
                v = [a - f * b for a, b in zip(v, piv)]
            rest.append(v)
        if o:
            # y^(e2 - o) piv lies in the lattice and vanishes in row r mod y^e2
            rest.append([x.shift_up(e2 - o) for x in piv])
        V = rest
        exps.append(o)
        H.append(piv)
    # reduce below-diagonal entries modulo the later pivots
    for j in range(n):
        for i in range(j + 1, n):
            a = exps[i]
            x = H[j][i]
            hi = ZetaJet(B, [B.zero()] * a + x.c[a:]) if a < e2 else None
            if hi is None or hi.is_zero():
                continue
            f = hi.shift_down(a)
            H[j] = [u - f * v for u, v in zip(H[j], H[i])]
    # the diagonal is exactly y^exps
    for j in range(n):
        if exps[j] < e2:
            H[j][j] = ZetaJet.y_power(B, exps[j], e2)
    return exps, H


def _kkey(x: KElem):
    return (tuple(sorted(x.t.items())), x.prec)


def lattice_key(exps, H):
    n = len(exps)
    body = []
    for j in range(n):
        for i in range(j + 1, n):
            body.append(tuple(_kkey(c) for c in H[j][i].c[:exps[i]]))
    return (tuple(exps), tuple(body))


# ---------------------------------------------------------------------------
# points

@dataclass
class PeriodPoint:
    """q = rep * q_0 with q_0 = sum (z - zeta)^-w_i K[[z - zeta]] e_i."""
    w: tuple
    e: int
    rep: list                    # canonical representative, jets of order 2e+1
    base: RamifiedBase
    key: tuple = field(repr=False, default=())
    label: str | None = None

    @property
    def E(self):
        return 2 * self.e + 1

    def same(self, other: "PeriodPoint") -> bool:
        """Equal weights and coordinates agreeing at their common precision."""
        if self.w != other.w or self.key[0] != other.key[0]:
            return False
        for u, v in zip(self.key[1], other.key[1]):
            for (t1, p1), (t2, p2) in zip(u, v):
                p = min(p1, p2)
                if {k: c for k, c in t1 if k < p} != {k: c for k, c in t2 if k < p}:
                    return False
        return True


def smallest_e(w) -> int:
    return max(max(abs(x) for x in w), 1)


def _lattice_cols(rep, w, e, B):
    """Columns of y^e rep diag(y^-w), i.e. the generators of y^e q."""
    n = len(w)
    E = 2 * e + 1
    out = []
    for j in range(n):
        col = [_pad(rep[i][j], E).shift_up(e - w[j]) for i in range(n)]
        out.append(col)
    return out


def _canonical(w, e, cols, B):
    n = len(w)
    exps, H = hermite_form(cols, n, 2 * e)
    E = 2 * e + 1
    G = [[_pad(H[j][i], E) if not (i == j) else ZetaJet.y_power(B, exps[j], E)
          for j in range(n)] for i in range(n)]
    S = smith_form(G)
    got = sorted(e - a for a in S.exps)
    if got != sorted(w):
        raise WeightMismatch(f"lattice has weights {got}, expected {sorted(w)}")
    Linv = jet_inverse(S.L)
    ws = [e - a for a in S.exps]
    order = sorted(range(n), key=lambda i: (ws[i], i))
    rep = [[Linv[i][j] for j in order] for i in range(n)]
    return rep, lattice_key(exps, H)


def make_point(w, e: int | None, rep, base: RamifiedBase | None = None,
               label: str | None = None) -> PeriodPoint:
    """Validated point with a canonical representative.

    ``w`` is sorted increasingly; rep is an invertible jet matrix whose
    columns are matched with w.
    """
    w = tuple(int(x) for x in w)
    if list(w) != sorted(w):
        raise WeightMismatch("weights must be sorted increasingly")
    e = smallest_e(w) if e is None else int(e)
    if not all(-e <= x <= e for x in w):
        raise WeightMismatch("weights exceed the bound e")
    B = base if base is not None else rep[0][0].B
    d = _jet_det_unit(rep, B)
    if not d:
        raise WeightMismatch("representative is not invertible over K[[z - zeta]]")
    rep, key = _canonical(w, e, _lattice_cols(rep, w, e, B), B)
    return PeriodPoint(w, e, rep, B, key, label)


def _jet_det_unit(rep, B) -> bool:
    from .hodgepink import jet_det
    d = jet_det([[x.truncate(1) if x.E >= 1 else x for x in row] for row in rep])
    return bool(d.c[0].t)


def point_from_gamma(gamma, shift: int, base: RamifiedBase, label=None) -> PeriodPoint:
    """The point whose lattice is y^-shift * gamma K[[y]]^n."""
    n = len(gamma)
    S = smith_form(gamma)
    w = sorted(shift - a for a in S.exps)
    e = smallest_e(w)
    E = 2 * e + 1
    # y^e q = y^(e - shift) gamma
    k = e - shift
    if k < 0:
        raise WeightMismatch("shift exceeds the weight bound")
    cols = [[_pad(gamma[i][j], E).shift_up(k) for i in range(n)] for j in range(n)]
    rep, key = _canonical(w, e, cols, base)
    return PeriodPoint(tuple(w), e, rep, base, key, label)


def q_from_point(P: PeriodPoint, b) -> HodgePinkStructure:
    """The Hodge-Pink structure (D, b, rep * q_0)."""
    iso = b if isinstance(b, SigmaModule) else SigmaModule(b, P.base.tower, 1)
    B, e, n = P.base, P.e, len(P.w)
    # zero padding is exact: lifts of rep differ by elements of S
    E = max(P.E, sum(e - x for x in P.w) + 1)
    G = [[_pad(P.rep[i][j], E).shift_up(e - P.w[j]) for j in range(n)] for i in range(n)]
    return HodgePinkStructure(iso, G, e, B, label=P.label)


# ---------------------------------------------------------------------------
# the stabilizer S and the group J

def s_membership(s, w) -> bool:
    """s stabilizes q_0: s_ij divisible by y^(w_j - w_i) and s invertible."""
    n = len(w)
    for i in range(n):
        for j in range(n):
            need = w[j] - w[i]
            if need > 0 and s[i][j].ord() < need:
                return False
    return _jet_det_unit(s, s[0][0].B)


def random_S(w, e: int, base: RamifiedBase, rng: random.Random, spread: int = 2):
    """A random element of the stabilizer of q_0 (jets of order 2e+1)."""
    n, E, B = len(w), 2 * e + 1, base
    F = B.F

    def rnd(unit=False, low=0):
        cs = [B.zero() for _ in range(E)]
        for k in range(low, E):
            if rng.random() < 0.5:
                cs[k] = B.elem({rng.randrange(0, spread * B.E + 1): rng.randrange(1, F.Q)})
        if unit:
            cs[0] = B.const(rng.randrange(1, F.Q))
        return ZetaJet(B, cs)

    while True:
        s = [[rnd(i == j, max(0, w[j] - w[i])) for j in range(n)] for i in range(n)]
        if s_membership(s, w):
            return s


def j_membership(g, b, zprec: int | None = None) -> bool:
    """g b = b g^sigma at the working z-precision."""
    iso = b if isinstance(b, SigmaModule) else None
    Phi = iso.Phi if iso else b
    f = iso.tower.f if iso else 1
    F = Phi[0][0].R
    g = [[x if x.R is F else _embed_ff(x, F) for x in row] for row in g]
    lhs = mat_mul(g, Phi)
    rhs = mat_mul(Phi, sigma(g, 1, f))
    N = zprec
    for row in mat_sub(lhs, rhs):
        for x in row:
            y = x.trunc(N) if N is not None else x
            if not y.is_zero():
                return False
    return True


def _embed_ff(x: PrecSeries, F):
    src = x.R
    return PrecSeries(F, {i: src.embed(v, F) for i, v in x.c.items()}, x.N)


def act(g, P: PeriodPoint, label=None) -> PeriodPoint:
    """The point g^sigma(q) (g a matrix over F_{q^m}((z)))."""
    B = P.base
    gs = [[to_base(x, B).frob(1) for x in row] for row in g]
    J = [[reexpand_at(x, B.zeta, P.E) for x in row] for row in gs]
    return make_point(P.w, P.e, jet_mat_mul(J, P.rep), B, label or P.label)


def j_action(g, P: PeriodPoint, b=None, label=None) -> PeriodPoint:
    """Action of an automorphism g of the isocrystal on a point."""
    if b is not None and not j_membership(g, b):
        raise NotInJ("g does not commute with F")
    return act(g, P, label)


def transport(g, P: PeriodPoint, label=None) -> PeriodPoint:
    """For b' = g^-1 b g^sigma: carry a point for b' to the isomorphic point for b."""
    return act(g, P, label)


# ---------------------------------------------------------------------------
# classification

@dataclass
class ClassificationReport:
    point: str | None
    s: int | None
    decency: list | None
    t_N: int
    weights: list
    t_H: int
    wa: WAReport
    adm: AdmReport
    certificates: dict = field(default_factory=dict)

    @property
    def witnesses(self):
        return {"wa": self.wa.witness, "adm": self.adm.witness}

    def consistent(self) -> bool:
        if self.adm.verdict == "Yes" and self.wa.verdict != "Yes":
            return False
        if self.wa.verdict == "No" and self.adm.verdict != "No":
            return False
        return True

    def summary(self) -> dict:
        return {"point": self.point, "s": self.s, "d": self.decency, "t_N": self.t_N,
                "weights": self.weights, "t_H": self.t_H, "WA": self.wa.verdict,
                "WA_rule": self.wa.rule, "Adm": self.adm.verdict, "Adm_rule": self.adm.rule}


def classify(b, P: PeriodPoint, s_cap: int | None = None, grid_depth: int = 1,
             N_max: int = 48) -> ClassificationReport:
    iso = b if isinstance(b, SigmaModule) else SigmaModule(b, P.base.tower, 1)
    s, d = find_decency(iso.Phi, iso.tower, s_cap or default_s_cap(iso.n))
    H = q_from_point(P, iso)
    wa = is_weakly_admissible(H, s_cap=s_cap, N_max=N_max)
    adm = is_admissible(H, grid_depth=grid_depth, wa=wa)
    cert = {"jet_order": P.E, "t_H_det": H.t_H("det"), "base": repr(P.base)}
    return ClassificationReport(P.label, s, list(d) if d else None, H.t_N(), H.weights(),
                                H.t_H(), wa, adm, cert)


# ---------------------------------------------------------------------------
# grids

def field_span(B: RamifiedBase, levels, coeffs=None):
    """All sum c_k zeta^k (k in levels) with c_k in F_q (or the given list)."""
    F1 = B.tower.level(1)
    cs = list(range(F1.Q)) if coeffs is None else list(coeffs)
    cs = [F1.embed(c, B.F) if coeffs is None else c for c in cs]
    out = []
    for combo in itertools.product(cs, repeat=len(levels)):
        x = B.zero()
        for c, k in zip(combo, levels):
            if c:
                x = x + B.zeta_pow(k).__mul__(B.const(c))
        out.append((combo, x))
    return out


def sample_grid(spec: dict):
    """Deterministic enumeration of chart coordinates.

    spec: {"base": B, "levels": [levels for a_0, levels for a_1, ...]}
    yields (coefficient tuple, [a_0, a_1, ...]) in lexicographic order.
    """
    B = spec["base"]
    per = [field_span(B, lv, spec.get("coeffs")) for lv in spec["levels"]]
    for combo in itertools.product(*per):
        yield tuple(c for c, _ in combo), [x for _, x in combo]


def grid_size(spec: dict) -> int:
    q = len(spec["coeffs"]) if spec.get("coeffs") is not None else spec["base"].q
    return math.prod(q ** len(lv) for lv in spec["levels"])


# ---------------------------------------------------------------------------
# chart points for rank two

def _jet_poly(B, coeffs, E):
    return ZetaJet(B, list(coeffs[:E]) + [B.zero() for _ in range(E - len(coeffs))])


def chart_point(a, d: int, base: RamifiedBase, label=None) -> PeriodPoint:
    """q = <(a_0 + ... + a_(d-1) y^(d-1), 1)> + y^d p, weights (-d, 0)."""
    E = 2 * d + 1
    B = base
    rep = [[ZetaJet.const(B, B.one(), E), _jet_poly(B, a, E)],
           [jet_zero(B, E), ZetaJet.const(B, B.one(), E)]]
    return make_point((-d, 0), d, rep, B, label)


def lower_chart_point(c, d: int, base: RamifiedBase, label=None) -> PeriodPoint:
    """q = <(1, c_0 + c_1 y + ...)> + y^d p, weights (-d, 0)."""
    E = 2 * d + 1
    B = base
    rep = [[jet_zero(B, E), ZetaJet.const(B, B.one(), E)],
           [ZetaJet.const(B, B.one(), E), _jet_poly(B, c, E)]]
    return make_point((-d, 0), d, rep, B, label)


def hasse_jet(g: PrecSeries, B: RamifiedBase, E: int):
    """(g(zeta), g'(zeta), g''(zeta)/2!, ...) as KElems."""
    return reexpand_at(to_base(g, B), B.zeta, E).c
