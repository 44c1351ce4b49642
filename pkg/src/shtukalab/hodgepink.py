"""Hodge-Pink structures on z-isocrystals and the two admissibility tests.

A structure is a sigma-module D (Frobenius matrix Phi over F_{q^m}((z)))
together with a lattice q in sigma*D tensor K((y)), y = z - zeta.  The
lattice is stored as the span of the columns of gamma = y^(-h) Gamma where
Gamma is a matrix of jets modulo y^E.  Everything about q is read off the
Smith form L Gamma R = diag(y^a_i): with w_i = h - a_i,

    q = L^-1 diag(y^-w_i) K[[y]]^n,   x in q  <=>  ord_y (L x)_i >= -w_i,

and the Hodge-Pink weights are the w_i.  The form only needs Gamma modulo
y^E when every a_i < E, which is checked (JetOrderTooSmall otherwise).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .base_arith import (INF, GFLevel, KElem, PrecSeries, RamifiedBase, ZetaJet,
                         binom_mod_p, fp_nullspace, fp_rref, mat_det, mat_inverse, mat_minor,
                         mat_mul, reexpand_at, to_base)
from .errors import (InsufficientPrecision, JetOrderTooSmall, NotFStable, PrecisionError,
                     RamificationBudgetExceeded, WeightMismatch)
from .sigmamod import (SigmaModule, decency_data, det_order, embed_series, sigma,
                       sigma_product, sum_series, wedge_matrix)
from . import sigmamod


# ---------------------------------------------------------------------------
# jet matrices

def jet_zero(B, E):
    return ZetaJet(B, [B.zero() for _ in range(E)])


def jet_one(B, E):
    return ZetaJet.const(B, B.one(), E)


def jet_identity(B, n, E):
    return [[jet_one(B, E) if i == j else jet_zero(B, E) for j in range(n)] for i in range(n)]


def jet_mat_mul(A, C):
    out = []
    for row in A:
        new = []
        for j in range(len(C[0])):
            acc = row[0] * C[0][j]
            for l in range(1, len(C)):
                acc = acc + row[l] * C[l][j]
            new.append(acc)
        out.append(new)
    return out


def jet_det(A):
    n = len(A)
    if n == 1:
        return A[0][0]
    acc = None
    for k in range(n):
        sub = [row[:k] + row[k + 1:] for row in A[1:]]
        term = A[0][k] * jet_det(sub)
        if k % 2:
            term = -term
        acc = term if acc is None else acc + term
    return acc


def jet_minor(A, rows, cols):
    return jet_det([[A[i][j] for j in cols] for i in rows])


def jet_wedge(A, r: int):
    n = len(A)
    subsets = list(itertools.combinations(range(n), r))
    cols = list(itertools.combinations(range(len(A[0])), r))
    return [[jet_minor(A, I, J) for J in cols] for I in subsets]


def jet_transpose(A):
    return [list(c) for c in zip(*A)]


def jet_frob(A, k: int = 1):
    """sigma^k on the coefficients (the expansion point moves to zeta^(q^k))."""
    return [[ZetaJet(x.B, [c.frob(k) for c in x.c]) for x in row] for row in A]


def jet_kron(A, C):
    return [[a * c for a in ra for c in rc] for ra in A for rc in C]


def jet_lift(A, B):
    return [[ZetaJet(B, [B.lift(c) for c in x.c]) for x in row] for row in A]


def jets_of(M, B: RamifiedBase, E: int, point: KElem | None = None, tail_val: int = 0):
    """Entrywise re-expansion of a matrix of series at zeta (or another point)."""
    pt = B.zeta if point is None else point
    return [[reexpand_at(s, pt, E, tail_val) for s in row] for row in M]


def jet_vector(v, B, E, point=None, tail_val: int = 0):
    pt = B.zeta if point is None else point
    return [reexpand_at(s, pt, E, tail_val) for s in v]


def _certain_ord(x: ZetaJet):
    """(order, certain): certain when the order is below the jet length."""
    o = x.ord()
    return o, o < x.E


# ---------------------------------------------------------------------------
# Smith form over K[[y]] / y^E

@dataclass
class SmithForm:
    """L G R = diag(y^exps) (rectangular G allowed, diagonal in the top block)."""
    L: list
    R: list | None
    exps: list
    E: int
    min_prec: float


def smith_form(G, track_right: bool = False) -> SmithForm:
    """Smith form with minimal-order pivoting, ties broken by (row, col).

    Row operations are accumulated in L (always) and column operations in R
    (on request).  A pivot whose order is not below E raises JetOrderTooSmall.
    """
    r, c = len(G), len(G[0])
    B = G[0][0].B
    E = min(x.E for row in G for x in row)
    A = [[x.truncate(E) for x in row] for row in G]
    L = jet_identity(B, r, E)
    R = jet_identity(B, c, E) if track_right else None
    exps = []
    mp = min((x.min_prec() for row in A for x in row), default=INF)
    for k in range(min(r, c)):
        best = None
        for i in range(k, r):
            for j in range(k, c):
                o = A[i][j].ord()
                if o < E and (best is None or o < best[0]):
                    best = (o, i, j)
        if best is None:
            raise JetOrderTooSmall(
                f"lattice not determined: a Smith exponent is >= the jet order {E}")
        o, i, j = best
        A[k], A[i] = A[i], A[k]
        L[k], L[i] = L[i], L[k]
        if j != k:
            for row in A:
                row[k], row[j] = row[j], row[k]
            if R is not None:
                for row in R:
                    row[k], row[j] = row[j], row[k]
        uinv = A[k][k].shift_down(o).inverse()
        for i2 in range(k + 1, r):
            x = A[i2][k]
            if x.is_zero():
                continue
            f = x.shift_down(o) * uinv
            A[i2] = [a - f * b for a, b in zip(A[i2], A[k])]
            L[i2] = [a - f * b for a, b in zip(L[i2], L[k])]
        for j2 in range(k + 1, c):
            x = A[k][j2]
            if x.is_zero():
                continue
            f = x.shift_down(o) * uinv
            for row in A:
                row[j2] = row[j2] - f * row[k]
            if R is not None:
                for row in R:
                    row[j2] = row[j2] - f * row[k]
        exps.append(o)
    return SmithForm(L, R, exps, E, mp)


# ---------------------------------------------------------------------------
# the structure

class HodgePinkStructure:
    """(D, q) with q spanned by the columns of y^(-shift) * gamma."""

    def __init__(self, iso: SigmaModule, gamma, shift: int = 0, base: RamifiedBase | None = None,
                 label: str | None = None):
        self.iso = iso
        self.n = iso.n
        B = base if base is not None else gamma[0][0].B
        if B.m % iso.m:
            raise ValueError("the residue field of the base must contain that of D")
        if B.tower != iso.tower:
            raise ValueError("base and isocrystal live over different q")
        if len(gamma) != self.n or any(len(r) != self.n for r in gamma):
            raise ValueError("gamma must be n x n")
        self.base = B
        self.gamma = [[x if x.B is B else ZetaJet(B, [B.lift(c) for c in x.c]) for x in row]
                      for row in gamma]
        self.shift = int(shift)
        self.E = min(x.E for row in gamma for x in row)
        self.label = label
        self._smith = None

    def __repr__(self):
        return f"HodgePinkStructure(n={self.n}, E={self.E}, shift={self.shift})"

    # Smith data -----------------------------------------------------------
    @property
    def smith(self) -> SmithForm:
        if self._smith is None:
            self._smith = smith_form(self.gamma)
        return self._smith

    @property
    def L(self):
        return self.smith.L

    @property
    def row_weights(self):
        """Weight attached to each row of L (unsorted)."""
        return [self.shift - a for a in self.smith.exps]

    def weights(self):
        return sorted(self.row_weights)

    def t_H(self, route: str = "smith") -> int:
        if route == "smith":
            return sum(self.row_weights)
        if route == "det":
            d = jet_det(self.gamma)
            o, ok = _certain_ord(d)
            if not ok:
                raise JetOrderTooSmall("det gamma vanishes modulo y^E")
            return self.n * self.shift - o
        raise ValueError(f"unknown route {route!r}")

    def t_N(self) -> int:
        return det_order(self.iso)

    def pair_degrees(self):
        """(deg P, deg Q) of the associated pair: deg P = -t_N, deg Q = t_H - t_N."""
        tN = self.t_N()
        return -tN, self.t_H() - tN

    def contains(self, xjets) -> bool:
        """Whether the vector of jets (in sigma*D coordinates) lies in q."""
        Lx = [sum_jets([self.L[i][j] * xjets[j] for j in range(self.n)])
              for i in range(self.n)]
        for i, w in enumerate(self.row_weights):
            o = Lx[i].ord()
            need = -w
            if o >= need:
                continue
            return False
        if max(-w for w in self.row_weights) > min(x.E for x in Lx):
            raise JetOrderTooSmall("membership needs jets of higher order")
        return True

    def lattice_generators(self):
        """Columns of L^-1 diag(y^-w): returned as (shift, jet matrix)."""
        Linv = jet_inverse(self.L)
        ws = self.row_weights
        h = max(ws)
        D = [[ZetaJet.y_power(self.base, h - ws[i], self.E) if i == j else
              jet_zero(self.base, self.E) for j in range(self.n)] for i in range(self.n)]
        return h, jet_mat_mul(Linv, D)

    def hp_filtration(self):
        """{i: (dim, basis)} for the induced filtration on sigma*D_K.

        Fil^i is the image of p cap y^i q in p/yp, spanned by the residues of
        the columns of L^-1 belonging to rows with weight >= i.
        """
        ws = self.row_weights
        Linv = jet_inverse(self.L)
        res = [[Linv[i][j].c[0] for j in range(self.n)] for i in range(self.n)]
        out = {}
        for i in range(min(ws) - 1, max(ws) + 2):
            cols = [j for j in range(self.n) if ws[j] >= i]
            out[i] = (len(cols), [[res[r][j] for r in range(self.n)] for j in cols])
        return out


def sum_jets(items):
    acc = items[0]
    for x in items[1:]:
        acc = acc + x
    return acc


def jet_inverse(A):
    """Inverse of a matrix of jets whose determinant is a unit."""
    n = len(A)
    d = jet_det(A)
    dinv = d.inverse()
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if n == 1:
                m = jet_one(d.B, d.E)
            else:
                rows = [r for r in range(n) if r != j]
                cols = [c for c in range(n) if c != i]
                m = jet_minor(A, rows, cols)
            out[i][j] = (-m if (i + j) % 2 else m) * dinv
    return out


def diag_y(B, exps, E):
    n = len(exps)
    return [[ZetaJet.y_power(B, exps[i], E) if i == j else jet_zero(B, E) for j in range(n)]
            for i in range(n)]


# ---------------------------------------------------------------------------
# constructors

def from_weights(iso: SigmaModule, weights, base: RamifiedBase, E: int, U=None,
                 label=None) -> HodgePinkStructure:
    """q = U diag(y^-w_i) K[[y]]^n (U a jet matrix, identity by default)."""
    h = max(weights)
    if min(h - w for w in weights) < 0 or max(h - w for w in weights) >= E:
        raise JetOrderTooSmall("E must exceed the spread of the weights")
    G = diag_y(base, [h - w for w in weights], E)
    if U is not None:
        G = jet_mat_mul(U, G)
    return HodgePinkStructure(iso, G, h, base, label)


def from_series(iso: SigmaModule, M, shift: int, base: RamifiedBase, E: int,
                tail_val: int = 0, label=None) -> HodgePinkStructure:
    """gamma = y^-shift * (jets of the series matrix M at zeta)."""
    return HodgePinkStructure(iso, jets_of(M, base, E, tail_val=tail_val), shift, base, label)


def tate_object(n: int, tower, base: RamifiedBase, E: int | None = None) -> HodgePinkStructure:
    """Rank one, Phi = z^n, q = y^-n p: weight n and t_N = n."""
    F = tower.level(base.m)
    iso = SigmaModule([[PrecSeries(F, {n: 1})]], tower, base.m)
    return from_weights(iso, [n], base, E or 2)


def tate_twist(H: HodgePinkStructure, e: int) -> HodgePinkStructure:
    """Tensor with the Tate object of weight e."""
    return HodgePinkStructure(_ztimes(H.iso, e), H.gamma, H.shift + e, H.base, H.label)


def _ztimes(M: SigmaModule, e: int) -> SigmaModule:
    z = PrecSeries(M.F, {e: 1})
    return SigmaModule([[z * x for x in row] for row in M.Phi], M.tower, M.m)


def tensor(H1: HodgePinkStructure, H2: HodgePinkStructure) -> HodgePinkStructure:
    iso = sigmamod.tensor(H1.iso, H2.iso)
    B = _common(H1.base, H2.base)
    G = jet_kron(jet_lift(H1.gamma, B), jet_lift(H2.gamma, B))
    E = min(H1.E, H2.E)
    G = [[x.truncate(E) for x in row] for row in G]
    return HodgePinkStructure(iso, G, H1.shift + H2.shift, B)


def direct_sum(H1: HodgePinkStructure, H2: HodgePinkStructure) -> HodgePinkStructure:
    iso = sigmamod.direct_sum(H1.iso, H2.iso)
    B = _common(H1.base, H2.base)
    E = min(H1.E, H2.E)
    h = max(H1.shift, H2.shift)
    n1, n2 = H1.n, H2.n
    G = [[jet_zero(B, E) for _ in range(n1 + n2)] for _ in range(n1 + n2)]
    for H, o in ((H1, 0), (H2, n1)):
        gl = jet_lift(H.gamma, B)
        for i in range(H.n):
            for j in range(H.n):
                G[o + i][o + j] = gl[i][j].truncate(E).shift_up(h - H.shift)
    return HodgePinkStructure(iso, G, h, B)


def dual(H: HodgePinkStructure, zprec: int = 40) -> HodgePinkStructure:
    """Dual object: Phi -> (Phi^-1)^T and q -> {x : x^T q integral}."""
    iso = sigmamod.dual(H.iso, zprec)
    exps = H.smith.exps
    amax = max(exps)
    LT = jet_transpose(H.L)
    G = jet_mat_mul(LT, diag_y(H.base, [amax - a for a in exps], H.E))
    return HodgePinkStructure(iso, G, amax - H.shift, H.base)


def _common(B1, B2):
    from .base_arith import common_base
    return B1 if B1 is B2 else common_base(B1, B2)


def same_lattice(H1: HodgePinkStructure, H2: HodgePinkStructure) -> bool:
    """Equality of the lattices q (same ambient coordinates)."""
    for A, C in ((H1, H2), (H2, H1)):
        h, gens = C.lattice_generators()
        for j in range(C.n):
            col = [gens[i][j] for i in range(C.n)]
            # the generator is y^-h col; test y^-h col in A via a shifted weight check
            if not _contains_shifted(A, col, h):
                return False
    return True


def _contains_shifted(H, col, h):
    Lx = [sum_jets([H.L[i][j] * col[j] for j in range(H.n)]) for i in range(H.n)]
    for i, w in enumerate(H.row_weights):
        need = h - w
        if need <= 0:
            continue
        if Lx[i].ord() < need:
            return False
    return True


def random_unimodular_jets(B, n, E, rng, steps: int = 4, spread: int = 3):
    """Product of random elementary matrices and unit diagonals over K[[y]]/y^E."""
    F = B.F

    def rnd_kelem():
        t = {rng.randrange(0, spread * B.E + 1): rng.randrange(1, F.Q) for _ in range(2)}
        return B.elem(t)

    def rnd_jet(unit=False):
        cs = [rnd_kelem() if rng.random() < 0.6 else B.zero() for _ in range(E)]
        if unit:
            cs[0] = B.const(rng.randrange(1, F.Q)) + B.elem(
                {rng.randrange(1, spread * B.E + 1): rng.randrange(0, F.Q)})
        return ZetaJet(B, cs)

    U = jet_identity(B, n, E)
    for _ in range(steps):
        if n == 1:
            U = [[U[0][0] * rnd_jet(True)]]
            continue
        i, j = rng.sample(range(n), 2)
        Eij = jet_identity(B, n, E)
        Eij[i][j] = rnd_jet()
        U = jet_mat_mul(U, Eij)
        k = rng.randrange(n)
        Dk = jet_identity(B, n, E)
        Dk[k][k] = rnd_jet(True)
        U = jet_mat_mul(U, Dk)
    return U


def random_structure(iso: SigmaModule, weights, base, E, rng) -> HodgePinkStructure:
    """Random lattice with the given weights: U diag(y^-w) V with U, V unimodular."""
    U = random_unimodular_jets(base, iso.n, E, rng)
    V = random_unimodular_jets(base, iso.n, E, rng)
    h = max(weights)
    G = jet_mat_mul(jet_mat_mul(U, diag_y(base, [h - w for w in weights], E)), V)
    return HodgePinkStructure(iso, G, h, base)


# ---------------------------------------------------------------------------
# subobjects

def sub_frobenius(iso: SigmaModule, V, zprec: int = 40):
    """(Phi', t_N) for the span of the columns of V, or NotFStable."""
    n, r = len(V), len(V[0])
    Y = mat_mul(iso.Phi, sigma(V, 1, iso.tower.f))
    rows = None
    for I in itertools.combinations(range(n), r):
        d = mat_minor(V, list(I), list(range(r)))
        if not d.is_zero() and d.lead_is_exact():
            rows = list(I)
            break
    if rows is None:
        raise NotFStable("the given vectors are not linearly independent")
    VI = [V[i] for i in rows]
    YI = [Y[i] for i in rows]
    Phi2 = mat_mul(mat_inverse(VI, zprec), YI)
    chk = mat_mul(V, Phi2)
    for i in range(n):
        for j in range(r):
            d = (chk[i][j] - Y[i][j]).trunc(zprec)
            if not d.is_zero():
                raise NotFStable("the span is not stable under F")
    tN = mat_det(YI).ord() - mat_det(VI).ord()
    return Phi2, tN


def _plucker_t_H(L, row_w, X):
    """t_H of the saturated span of the jet columns X via Plucker coordinates."""
    n, r = len(X), len(X[0])
    LX = jet_mat_mul(L, X)
    terms = []
    for J in itertools.combinations(range(n), r):
        P = jet_det([LX[i] for i in J])
        o, ok = _certain_ord(P)
        terms.append((o, ok, sum(row_w[i] for i in J)))
    return _plucker_combine(terms)


def _plucker_combine(terms):
    certain = [(o + W) for o, ok, W in terms if ok]
    if not certain:
        raise JetOrderTooSmall("all Plucker coordinates vanish modulo y^E")
    best = min(certain)
    if any((not ok) and o + W < best for o, ok, W in terms):
        raise JetOrderTooSmall("an undetermined Plucker coordinate could lower t_H")
    o0 = min(o for o, ok, _ in terms if ok)
    if any((not ok) and o < o0 for o, ok, _ in terms):
        raise JetOrderTooSmall("saturation order undetermined")
    return best - o0


def subobject_t_H(H: HodgePinkStructure, V) -> int:
    """t_H of the strict subobject on span(V) (Plucker route)."""
    X = jets_of(sigma(V, 1, H.iso.tower.f), H.base, H.E)
    return _plucker_t_H(H.L, H.row_weights, X)


def strict_subobject(H: HodgePinkStructure, V, zprec: int = 40) -> HodgePinkStructure:
    """The structure on span(V) with q' = q cap sigma*D' (lattice route)."""
    Phi2, _ = sub_frobenius(H.iso, V, zprec)
    r = len(V[0])
    X = jets_of(sigma(V, 1, H.iso.tower.f), H.base, H.E)
    LX = jet_mat_mul(H.L, X)
    ws = H.row_weights
    h0 = -min(ws)
    Z0 = [[x.shift_up(ws[i] + h0) for x in LX[i]] for i in range(H.n)]
    sf = smith_form(Z0, track_right=True)
    b = sf.exps
    hp = max(b) - h0
    G = jet_mat_mul(sf.R, diag_y(H.base, [max(b) - bi for bi in b], H.E))
    iso2 = SigmaModule(Phi2, H.iso.tower, H.iso.m)
    return HodgePinkStructure(iso2, G, hp, H.base)


def line_t_H(L, row_w, wjets) -> int:
    """t_H of the line through the jet vector (one column)."""
    return _plucker_t_H(L, row_w, [[x] for x in wjets])


# ---------------------------------------------------------------------------
# weak admissibility

@dataclass
class WAReport:
    verdict: str                 # "Yes" | "No" | "Unknown"
    rule: str
    witness: dict | None = None
    certificates: dict = field(default_factory=dict)


def find_decency(Phi, tower, s_cap: int):
    for s in range(1, s_cap + 1):
        d = decency_data(Phi, s, tower)
        if d is not None:
            return s, d
    return None, None


def default_s_cap(n: int) -> int:
    return 2 * math.lcm(*range(1, n + 1))


def is_weakly_admissible(H: HodgePinkStructure, s_cap: int | None = None, N0: int = 6,
                         N_max: int = 48) -> WAReport:
    tH, tN = H.t_H(), H.t_N()
    cert = {"t_H": tH, "t_N": tN, "t_H_det": H.t_H("det")}
    if tH != tN:
        return WAReport("No", "global-degree", {"kind": "global", "t_H": tH, "t_N": tN}, cert)
    if H.n == 1:
        return WAReport("Yes", "rank-one", None, cert)
    s, d = find_decency(H.iso.Phi, H.iso.tower, s_cap or default_s_cap(H.n))
    if s is None:
        cert["reason"] = "no decency equation found below the cap"
        return WAReport("Unknown", "no-decency", None, cert)
    cert["s"], cert["d"] = s, list(d)
    groups_done = []
    unknown = []
    for r in range(1, H.n):
        subsets = list(itertools.combinations(range(H.n), r))
        by_d = {}
        for J in subsets:
            by_d.setdefault(sum(d[i] for i in J), []).append(J)
        for dJ, G in sorted(by_d.items()):
            if dJ % s:
                continue
            lam = dJ // s
            res = _search_group(H, r, subsets, G, lam, s, N0, N_max)
            if res["status"] == "violation":
                cert["groups"] = groups_done + [res["summary"]]
                return WAReport("No", "subobject", res["witness"], cert)
            groups_done.append(res["summary"])
            if res["status"] == "unknown":
                unknown.append(res["summary"])
    cert["groups"] = groups_done
    if unknown:
        cert["reason"] = "line search not certified within the z-budget"
        return WAReport("Unknown", "search-budget", None, cert)
    return WAReport("Yes", "exhaustion", None, cert)


def _search_group(H, r, subsets, G, lam, s, N0, N_max):
    """Certified search for F-stable lines of slope lam in the span of the
    group G inside the r-th exterior power with t_H > lam."""
    iso, B = H.iso, H.base
    g = math.gcd(s, iso.m)
    Lw = jet_wedge(H.L, r) if r > 1 else H.L
    Wrow = [sum(H.row_weights[i] for i in J) for J in subsets] if r > 1 else H.row_weights
    need = [lam + 1 - W for W in Wrow]
    summary = {"r": r, "group": [list(J) for J in G], "slope": lam}
    E = H.E
    if max(need) > E:
        summary["status"] = "unknown"
        summary["reason"] = "jet order below the membership depth"
        return {"status": "unknown", "summary": summary}
    gcols = [subsets.index(J) for J in G]
    if max(need) <= 0:
        # every line of the group violates; the coordinate line is F-stable
        # when the group is a single index set or s = 1
        w = [PrecSeries(iso.F, {0: 1} if k == gcols[0] else {}) for k in range(len(subsets))]
        wit = _verify_line(H, r, Lw, Wrow, w, lam)
        if wit is not None:
            summary["status"] = "violation"
            return {"status": "violation", "witness": wit, "summary": summary}
    N = N0
    last = None
    while N <= N_max:
        sysm = _line_system(H, Lw, need, gcols, g, N)
        X = fp_nullspace(sysm["A"], B.p) if sysm["A"].shape[0] else np.eye(sysm["ncols"], dtype=np.int64)
        const_cols = sysm["const_cols"]
        if X.shape[0] == 0 or not np.any(X[:, const_cols] % B.p):
            summary.update(status="certified", N=N, equations=int(sysm["A"].shape[0]),
                           zeta_precision=sysm["T_min"])
            return {"status": "certified", "summary": summary}
        cand = _low_degree_candidate(X, sysm, B.p)
        w = _decode_line(cand, sysm, iso, len(subsets), gcols, g)
        wit = _verify_line(H, r, Lw, Wrow, w, lam)
        if wit is not None:
            summary.update(status="violation", N=N)
            return {"status": "violation", "witness": wit, "summary": summary}
        last = N
        N *= 2
    summary.update(status="unknown", N=last, reason="z-truncation budget exhausted")
    return {"status": "unknown", "summary": summary}


def _subfield_basis(iso_F: GFLevel, g_level: GFLevel):
    p = iso_F.p
    return [g_level.embed(p ** t, iso_F) for t in range(g_level.N)]


def _line_system(H, Lw, need, gcols, g, N):
    """F_p-linear conditions on w = sum_{J in group, k<N} c_{J,k} z^k e_J
    (c in F_{q^g}) expressing y^-(lam+1) jet(w) in the exterior lattice."""
    B, iso = H.base, H.iso
    p = B.p
    Fg = iso.tower.level(g)
    basis_iso = _subfield_basis(iso.F, Fg)
    basis = [iso.F.embed(b, B.F) for b in basis_iso]
    nb = len(basis)
    E = H.E
    # jets of z^k at zeta
    mono = []
    for k in range(N):
        mono.append([B.zeta_pow(k - rho).scale(B.F.from_int(binom_mod_p(k, rho, p)))
                     if k >= rho and binom_mod_p(k, rho, p) else B.zero() for rho in range(E)])
    cols = [(J, k, t) for J in gcols for k in range(N) for t in range(nb)]
    col_index = {c: i for i, c in enumerate(cols)}
    rows_blocks = []
    T_min = INF
    DE = B.E
    for Jp, nd in enumerate(need):
        for rho in range(max(nd, 0)):
            vals = {}
            mu = INF
            for J in gcols:
                for r1 in range(rho + 1):
                    mu = min(mu, Lw[Jp][J].c[r1].lowval())
            for J in gcols:
                Mj = Lw[Jp][J].c
                for k in range(N):
                    acc = B.zero()
                    for r1 in range(rho + 1):
                        a, b = Mj[r1], mono[k][rho - r1]
                        if (not a.t and a.prec == INF) or (not b.t and b.prec == INF):
                            continue
                        acc = acc + a * b
                    vals[(J, k)] = acc
            T = mu + DE * (N - rho) if mu != INF else INF
            for v in vals.values():
                T = min(T, v.prec)
            if T == INF:
                T = max((max(v.t) + 1 for v in vals.values() if v.t), default=0)
            T_min = min(T_min, T)
            exps = [e for v in vals.values() for e in v.t]
            lo = min(exps) if exps else T
            if lo >= T:
                continue
            nrow = int(T - lo) * B.F.N
            blk = np.zeros((nrow, len(cols)), dtype=np.int64)
            for (J, k), v in vals.items():
                if not v.t:
                    continue
                for t, bt in enumerate(basis):
                    vb = v.scale(bt)
                    ci = col_index[(J, k, t)]
                    for e, c in vb.t.items():
                        if e >= T:
                            continue
                        off = int(e - lo) * B.F.N
                        blk[off:off + B.F.N, ci] = B.F.digits(c)
            rows_blocks.append(blk)
    A = np.vstack(rows_blocks) if rows_blocks else np.zeros((0, len(cols)), dtype=np.int64)
    const_cols = [col_index[(J, 0, t)] for J in gcols for t in range(nb)]
    return {"A": A % p, "cols": cols, "ncols": len(cols), "const_cols": const_cols,
            "basis": basis_iso, "N": N, "T_min": T_min}


def _low_degree_candidate(X, sysm, p):
    cols = sysm["cols"]
    order = sorted(range(len(cols)), key=lambda i: (-cols[i][1], i))
    R, piv = fp_rref(X[:, order], p)
    inv = np.empty(len(order), dtype=np.int64)
    inv[np.array(order)] = np.arange(len(order))
    R = R[:, inv]
    const = sysm["const_cols"]
    best = None
    for row, pc in zip(R, piv):
        if np.any(row[const] % p):
            k = cols[order[pc]][1]
            if best is None or k < best[0]:
                best = (k, row)
    return best[1]


def _decode_line(vec, sysm, iso, nsub, gcols, g):
    F = iso.F
    coeffs = {J: {} for J in gcols}
    for ci, (J, k, t) in enumerate(sysm["cols"]):
        c = int(vec[ci]) % F.p
        if c:
            b = F.mul(F.from_int(c), sysm["basis"][t])
            coeffs[J][k] = F.add(coeffs[J].get(k, 0), b)
    return [PrecSeries(F, coeffs[J]) if J in coeffs else PrecSeries(F, {})
            for J in range(nsub)]


def _verify_line(H, r, Lw, Wrow, w, lam, zprec: int = 40):
    """Exact check of a candidate w = sigma(v): F-stable of slope lam and t_H > lam."""
    iso = H.iso
    f = iso.tower.f
    wj = jet_vector(w, H.base, H.E)
    try:
        tH = line_t_H(Lw, Wrow, wj)
    except PrecisionError:
        return None
    if tH <= lam:
        return None
    v = [s.frob_ff(f, -1) for s in w]
    Phi_w = wedge_matrix(iso.Phi, r) if r > 1 else iso.Phi
    Fv = [sum_series([Phi_w[i][j] * w[j] for j in range(len(w))]) for i in range(len(w))]
    J0 = min((i for i, s in enumerate(v) if not s.is_zero()), key=lambda i: v[i].ord())
    try:
        alpha = Fv[J0] * v[J0].inverse(zprec)
    except PrecisionError:
        return None
    for i in range(len(v)):
        diff = (Fv[i] - alpha * v[i]).trunc(zprec)
        if not diff.is_zero():
            return None
    tN = alpha.ord()
    if tN != lam or tH <= tN:
        return None
    return {"kind": "line", "r": r, "vector": v, "t_H": tH, "t_N": tN}


def verify_wa_witness(H: HodgePinkStructure, wit: dict) -> bool:
    """Recompute a No-witness from scratch."""
    if wit["kind"] == "global":
        return H.t_H() != H.t_N() and H.t_H("det") != H.t_N()
    r = wit["r"]
    v = wit["vector"]
    f = H.iso.tower.f
    w = [s.frob_ff(f, 1) for s in v]
    Lw = jet_wedge(H.L, r) if r > 1 else H.L
    subsets = list(itertools.combinations(range(H.n), r))
    Wrow = [sum(H.row_weights[i] for i in J) for J in subsets] if r > 1 else H.row_weights
    again = _verify_line(H, r, Lw, Wrow, w, wit["t_N"])
    return again is not None and again["t_H"] == wit["t_H"] and again["t_H"] > again["t_N"]


# ---------------------------------------------------------------------------
# admissibility

@dataclass
class AdmReport:
    verdict: str
    rule: str
    wa: WAReport | None = None
    witness: dict | None = None
    certificates: dict = field(default_factory=dict)


def is_admissible(H: HodgePinkStructure, grid_depth: int = 1, wa: WAReport | None = None,
                  **wa_kw) -> AdmReport:
    """Admissibility by the two rules plus an invariant-vector search.

    Admissible implies weakly admissible.  When the value group of K is not
    q-divisible, weakly admissible implies admissible.  Otherwise a search
    for an F-invariant vector of P(-1) inside the modified lattice decides
    "No"; an empty search is inconclusive.
    """
    wa = wa or is_weakly_admissible(H, **wa_kw)
    if wa.verdict == "No":
        return AdmReport("No", "not-weakly-admissible", wa, wa.witness)
    if wa.verdict == "Yes" and not H.base.q_divisible:
        return AdmReport("Yes", "weakly-admissible-value-group-not-q-divisible", wa)
    try:
        wit = find_invariant_witness(H, grid_depth)
    except PrecisionError as exc:
        return AdmReport("Unknown", "witness-search-failed", wa, None, {"reason": str(exc)})
    if wit is not None:
        return AdmReport("No", "invariant-witness", wa, wit)
    return AdmReport("Unknown", "witness-search-exhausted", wa, None,
                     {"grid_depth": grid_depth})


def frob_series_vec(v, k: int = 1):
    return [s.frob(k) for s in v]


def apply_F_twisted(H: HodgePinkStructure, f, e: int = 0):
    """Frobenius of P(-1) twisted by e: x -> z^(1+e) Phi^sigma x^sigma on K-series."""
    iso = H.iso
    Phi_s = sigma(iso.Phi, 1, iso.tower.f)
    B = f[0].R
    fs = frob_series_vec(f)
    out = []
    for i in range(iso.n):
        acc = None
        for j in range(iso.n):
            t = to_base(Phi_s[i][j], B) * fs[j]
            acc = t if acc is None else acc + t
        out.append(acc.shift(1 + e))
    return out


def invariant_seed(delta, s, u, window, B):
    """sum_nu z^(-delta nu) sum_j z^j u_j^(q^(s nu)): invariant under z^-delta sigma^s."""
    nu_min, nu_max = window
    coeffs = {}
    nu = nu_min
    while True:
        if nu_max is not None and nu > nu_max:
            break
        pw = [x.frob(s * nu) for x in u]
        if nu_max is None and nu >= 0 and all((not y.t) or min(y.t) >= B.P for y in pw):
            # later terms are O(w^P); record that for the first dropped block
            for j in range(delta):
                coeffs.setdefault(-delta * nu + j, B.zero(B.P))
            break
        for j, y in enumerate(pw):
            k = -delta * nu + j
            if y.t or y.prec != INF:
                y = y.truncate(B.P)
                coeffs[k] = coeffs[k] + y if k in coeffs else y
        nu += 1
        if nu > nu_min + 64 * B.P:
            break
    return PrecSeries(B, coeffs, delta * (1 - nu_min))


def _root_window(u, s, cap: int = 8):
    nu = 0
    while nu > -cap:
        try:
            for x in u:
                x.frob(s * (nu - 1))
        except RamificationBudgetExceeded:
            break
        nu -= 1
    return nu


def _twist_for_invariants(d, s):
    """Largest e with -s - d_i - s e >= 1 for all i."""
    return min((-s - di - 1) // s for di in d)


def find_invariant_witness(H: HodgePinkStructure, grid_depth: int = 1, s_cap: int | None = None):
    """Search F-invariant vectors of P(-1) (after a Tate twist) inside q at zeta."""
    s, d = find_decency(H.iso.Phi, H.iso.tower, s_cap or default_s_cap(H.n))
    if s is None:
        return None
    e = _twist_for_invariants(d, s)
    Ht = tate_twist(H, e)
    deltas = [-s - di - s * e for di in d]
    B = H.base
    grid_vals = list(range(1, grid_depth + 1))
    Fl = B.F
    cs = [Fl.exp[k] for k in range(min(grid_depth, Fl.order))]
    for i, dl in enumerate(deltas):
        for j in range(dl):
            for v in grid_vals:
                for c in cs:
                    u = [B.zero() for _ in range(dl)]
                    u[j] = B.zeta_pow(v).scale(c)
                    wit = _try_seed(Ht, i, dl, u, s, e)
                    if wit is not None:
                        wit.update(seed={"component": i, "index": j, "zeta_power": v,
                                         "coefficient": c}, twist=e)
                        return wit
    return None


def _try_seed(Ht, i, dl, u, s, e):
    B = Ht.base
    nu_min = _root_window(u, s)
    comp = invariant_seed(dl, s, u, (nu_min, None), B)
    f0 = [comp if k == i else PrecSeries(B, {}) for k in range(Ht.n)]
    f = f0
    cur = f0
    for _ in range(1, s):
        cur = apply_F_twisted(Ht, cur)
        f = [a + b for a, b in zip(f, cur)]
    if all(x.is_zero() for x in f):
        return None
    # membership only sees f modulo y^(max -w)
    Ej = min(Ht.E, max(1, max(-w for w in Ht.row_weights)))
    try:
        fj = jet_vector(f, B, Ej)
        if not Ht.contains(fj):
            return None
    except PrecisionError:
        return None
    prec = min(c.prec for x in fj for c in x.c)
    return {"kind": "invariant", "vector": f, "s": s, "jet_precision": prec}


def verify_invariant_witness(H: HodgePinkStructure, wit: dict, zprec: int | None = None,
                             rounds: int | None = None) -> dict:
    """Fixed-point residual and membership at zeta^(q^r) for r < s."""
    e = wit.get("twist", 0)
    Ht = tate_twist(H, e)
    f = wit["vector"]
    Ff = apply_F_twisted(Ht, f)
    P = Ht.base.P
    fixed = all(all(c.truncate(P).is_zero() for c in (a - b).c.values())
                for a, b in zip(f, Ff))
    s = wit["s"] if rounds is None else rounds
    members = []
    iso = Ht.iso
    Phi_P = sigma(iso.Phi, 1, iso.tower.f)
    B = Ht.base
    for r in range(s):
        if r == 0:
            g = f
        else:
            eta = sigma_product(Phi_P, r, iso.tower.f)
            etainv = mat_inverse(eta, 60)
            g = [sum_series([to_base(etainv[a][b], B) * f[b] for b in range(iso.n)])
                 for a in range(iso.n)]
        pt = B.zeta.frob(r)
        Ej = min(Ht.E, max(1, max(-w for w in Ht.row_weights)))
        gj = jet_vector(g, B, Ej, point=pt)
        Lr = jet_frob(Ht.L, r)
        Lx = [sum_jets([Lr[a][b] * gj[b] for b in range(iso.n)]) for a in range(iso.n)]
        ok = all(Lx[a].ord() >= -w for a, w in enumerate(Ht.row_weights))
        members.append(ok)
    nonzero = any(not x.is_zero() for x in f)
    return {"fixed_point": fixed, "membership": members, "nonzero": nonzero,
            "ok": fixed and all(members) and nonzero}
