"""sigma-modules over F_{q^m}((z)): standard objects, slopes, Dieudonne-Manin
decomposition, hom spaces, decency and the norm-contraction iteration.

Conventions: F acts on column vectors by x -> Phi * x^sigma, sigma raises
coefficients to the q-th power and fixes z.  F_{d,n} has matrix A_{d,n}
(entry z^-d in the top right corner, ones on the subdiagonal) and slope
-d/n; O(d) = F_{d,1}.  Slopes of diag(z^a, z^b) are {a, b}.
"""
from __future__ import annotations

import itertools
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .base_arith import (INF, FieldTower, GFLevel, PrecSeries, RamifiedBase, fp_nullspace,
                         fp_rank, fp_rref, mat_adjugate, mat_block_diag, mat_det,
                         mat_identity, mat_inverse, mat_kron, mat_map, mat_minor, mat_mul,
                         mat_ord, mat_sub, mat_transpose, mat_zero, norm_r)
from .errors import (HypothesisFailed, NoConvergence, PrecisionLoss,
                     RamificationBudgetExceeded)
from .polygon import NewtonPolygon


# ---------------------------------------------------------------------------
# helpers for finite-field series

def embed_series(s: PrecSeries, F2: GFLevel) -> PrecSeries:
    F = s.R
    if F is F2:
        return s
    return PrecSeries(F2, {i: F.embed(v, F2) for i, v in s.c.items()}, s.N)


def embed_matrix(A, F2):
    return mat_map(A, lambda s: embed_series(s, F2))


def zmono(F, k: int, c: int = 1) -> PrecSeries:
    return PrecSeries(F, {k: c})


def sigma(A, k: int = 1, f: int | None = None):
    """Entrywise sigma^k on a matrix of series (z fixed)."""
    def tw(s):
        if isinstance(s.R, GFLevel):
            return s.frob_ff(f, k)
        return s.frob(k)
    return mat_map(A, tw)


def sigma_product(Phi, k: int, f: int):
    """Phi * Phi^sigma * ... * Phi^(sigma^(k-1))."""
    P = Phi
    for j in range(1, k):
        P = mat_mul(P, sigma(Phi, j, f))
    return P


def wedge_matrix(A, r: int):
    """Matrix of the r-th exterior power in the lexicographic basis."""
    n = len(A)
    subsets = list(itertools.combinations(range(n), r))
    return [[mat_minor(A, list(I), list(J)) for J in subsets] for I in subsets]


def _is_exact_zero(s: PrecSeries) -> bool:
    return s.is_zero() and s.N == INF


# ---------------------------------------------------------------------------
# sigma-modules

class SigmaModule:
    """Rank n module with Frobenius matrix Phi over F_{q^m}((z))."""

    def __init__(self, Phi, tower: FieldTower, m: int = 1):
        self.tower, self.m = tower, m
        self.F = tower.level(m)
        self.Phi = [[_as_ff_series(e, self.F) for e in row] for row in Phi]
        self.n = len(self.Phi)
        if any(len(row) != self.n for row in self.Phi):
            raise ValueError("Phi must be square")

    def __repr__(self):
        return f"SigmaModule(n={self.n}, q={self.tower.q}, m={self.m})"

    @property
    def q(self):
        return self.tower.q

    @property
    def zprec(self):
        return min(e.N for row in self.Phi for e in row)

    def sig(self, A, k: int = 1):
        return sigma(A, k, self.tower.f)

    def apply_F(self, x):
        """F(x) = Phi * x^sigma for a column vector x (list of series)."""
        xs = [s.frob_ff(self.tower.f, 1) for s in x]
        return [sum_series([self.Phi[i][j] * xs[j] for j in range(self.n)]) for i in range(self.n)]

    def power(self, k: int):
        return sigma_product(self.Phi, k, self.tower.f)

    def at_level(self, m2: int) -> "SigmaModule":
        if m2 == self.m:
            return self
        return SigmaModule(embed_matrix(self.Phi, self.tower.level(m2)), self.tower, m2)


def _as_ff_series(e, F: GFLevel) -> PrecSeries:
    if isinstance(e, PrecSeries):
        return embed_series(e, F) if e.R is not F else e
    if isinstance(e, int):
        return PrecSeries(F, {0: e % F.p} if e % F.p else {})
    raise TypeError(f"cannot use {e!r} as a matrix entry")


def sum_series(items):
    acc = items[0]
    for s in items[1:]:
        acc = acc + s
    return acc


def standard_matrix(d: int, n: int, F: GFLevel):
    A = mat_zero(F, n, n)
    if n == 1:
        A[0][0] = zmono(F, -d)
        return A
    A[0][n - 1] = zmono(F, -d)
    for i in range(1, n):
        A[i][i - 1] = zmono(F, 0)
    return A


def standard(d: int, n: int, tower: FieldTower, m: int = 1) -> SigmaModule:
    if n <= 0:
        raise ValueError("n must be positive")
    return SigmaModule(standard_matrix(d, n, tower.level(m)), tower, m)


def o_module(d: int, tower: FieldTower, m: int = 1) -> SigmaModule:
    return standard(d, 1, tower, m)


def det_order(M: SigmaModule) -> int:
    det = mat_det(M.Phi)
    o = det.ord()
    if o is None or not det.lead_is_exact():
        raise PrecisionLoss("order of det(Phi) is not determined")
    return o


def degree(M: SigmaModule) -> int:
    return -det_order(M)


def slope(M: SigmaModule) -> Fraction:
    return Fraction(det_order(M), M.n)


def _common(M: SigmaModule, N: SigmaModule):
    if M.tower != N.tower:
        raise ValueError("modules live over different towers")
    m = M.m * N.m // math.gcd(M.m, N.m)
    return M.at_level(m), N.at_level(m), m


def tensor(M: SigmaModule, N: SigmaModule) -> SigmaModule:
    M, N, m = _common(M, N)
    return SigmaModule(mat_kron(M.Phi, N.Phi), M.tower, m)


def dual(M: SigmaModule, zprec: int = 40) -> SigmaModule:
    return SigmaModule(mat_transpose(mat_inverse(M.Phi, zprec)), M.tower, M.m)


def wedge(M: SigmaModule, r: int) -> SigmaModule:
    return SigmaModule(wedge_matrix(M.Phi, r), M.tower, M.m)


def direct_sum(M: SigmaModule, N: SigmaModule) -> SigmaModule:
    M, N, m = _common(M, N)
    return SigmaModule(mat_block_diag([M.Phi, N.Phi]), M.tower, m)


def twist(M: SigmaModule, d: int) -> SigmaModule:
    """M tensor O(d): Phi -> z^-d Phi."""
    return SigmaModule(mat_map(M.Phi, lambda s: s.shift(-d)), M.tower, M.m)


def block_standard(summands, tower: FieldTower, m: int = 1) -> SigmaModule:
    """Block diagonal sum of F_{d,n}^(mult) for (d, n, mult) triples."""
    F = tower.level(m)
    blocks = []
    for d, n, mult in summands:
        blocks += [standard_matrix(d, n, F)] * mult
    return SigmaModule(mat_block_diag(blocks), tower, m)


def sigma_conjugate(b, g, tower: FieldTower, inverse_convention: bool = False, zprec: int = 60):
    """g^-1 b g^sigma, or g b (g^sigma)^-1 with ``inverse_convention``."""
    f = tower.f
    if inverse_convention:
        return mat_mul(mat_mul(g, b), mat_inverse(sigma(g, 1, f), zprec))
    return mat_mul(mat_mul(mat_inverse(g, zprec), b), sigma(g, 1, f))


def decency_data(b, s: int, tower: FieldTower):
    """Exponents (d_1..d_n) if b b^sigma ... b^(sigma^(s-1)) = diag(z^d_i),
    otherwise None."""
    if s <= 0:
        raise ValueError("s must be positive")
    P = sigma_product(b, s, tower.f)
    n = len(P)
    out = []
    for i in range(n):
        for j in range(n):
            e = P[i][j]
            if e.N != INF:
                return None
            if i != j and not e.is_zero():
                return None
        diag = P[i][i]
        items = [(k, v) for k, v in diag.c.items() if v]
        if len(items) != 1 or items[0][1] != 1:
            return None
        out.append(items[0][0])
    return tuple(out)


# ---------------------------------------------------------------------------
# slopes: iterate valuations (oracle 1)

def newton_polygon(M: SigmaModule, window: int | None = None, kmax: int = 400) -> NewtonPolygon:
    """Generic HN slopes from the growth of ord_z of exterior powers of
    Phi Phi^sigma ... Phi^(sigma^(k-1)).

    For each r the minimal sum of r slopes is lim v_k / k, where v_k is the
    least z-order of an entry of the r-th exterior power of the k-fold
    product.  The limit is read off once v_{k+P} - v_k has been constant for
    ``window`` consecutive k (P a period candidate).
    """
    n = M.n
    window = window or n * n + 2
    L = math.lcm(*range(1, n + 1))
    sums = [Fraction(0)]
    for r in range(1, n + 1):
        W = wedge_matrix(M.Phi, r) if r > 1 else M.Phi
        sums.append(_iterate_limit(W, M.tower.f, M.m, L, window, kmax))
    slopes = [sums[i] - sums[i - 1] for i in range(1, n + 1)]
    if any(slopes[i] > slopes[i + 1] for i in range(n - 1)):
        raise PrecisionLoss(f"iterate valuations gave a non-convex polygon {slopes}")
    return NewtonPolygon(slopes)


def _iterate_limit(W, f, m, L, window, kmax):
    periods = [L * m * j for j in (1, 2, 3, 4)]
    vals = [None]
    P = W
    for k in range(1, kmax + 1):
        if k > 1:
            P = mat_mul(P, sigma(W, k - 1, f))
        v = None
        for row in P:
            for e in row:
                o = e.ord()
                if o is None:
                    if e.N != INF:
                        raise PrecisionLoss("z-precision exhausted while iterating Frobenius")
                    continue
                if not e.lead_is_exact():
                    raise PrecisionLoss("leading coefficient undetermined")
                if e.N != INF and o >= e.N:
                    raise PrecisionLoss("z-precision exhausted while iterating Frobenius")
                v = o if v is None or o < v else v
        if v is None:
            raise ValueError("exterior power vanished: Phi is not invertible")
        vals.append(v)
        for per in periods:
            if k < per + window:
                continue
            diffs = {vals[j + per] - vals[j] for j in range(k - per - window + 1, k - per + 1)}
            if len(diffs) == 1:
                s = Fraction(diffs.pop(), per)
                if (s * L).denominator == 1:
                    return s
    raise PrecisionLoss("iterate valuations did not stabilize")


# ---------------------------------------------------------------------------
# slopes: cyclic vector (oracle 2)

def _candidate_vectors(M: SigmaModule, seed: int = 0):
    n, F = M.n, M.F
    yield M.m, [[1 if i == j else 0 for i in range(n)] for j in range(n)]
    big = M.tower.level(M.m * n) if n > 1 else F
    g = big.gen()
    yield M.m * n if n > 1 else M.m, [[big.pow(g, i) for i in range(n)]]
    rng = random.Random(seed)
    for level in (M.m, M.m * n):
        lev = M.tower.level(level)
        vs = []
        for _ in range(6):
            vs.append([rng.randrange(lev.Q) for _ in range(n)])
        yield level, vs


def cyclic_vector_slopes(M: SigmaModule, seed: int = 0):
    """Slopes from the Newton polygon of F^n e = sum a_i F^i e.

    Returns ``(slopes, e, level)``.  The lower convex hull of the points
    (i, ord a_i) and (n, 0) has segment slopes mu; the module slopes are -mu.
    """
    n = M.n
    for level, cands in _candidate_vectors(M, seed):
        N = M.at_level(level)
        Fl = N.F
        for spread in (False, True):
            for c in cands:
                e = [PrecSeries(Fl, {(i if spread else 0): c[i]} if c[i] else {}) for i in range(n)]
                if all(x.is_zero() for x in e):
                    continue
                cols = [e]
                for _ in range(n):
                    cols.append(N.apply_F(cols[-1]))
                V = [[cols[j][i] for j in range(n)] for i in range(n)]
                dV = mat_det(V)
                if dV.is_zero():
                    continue
                if not dV.lead_is_exact():
                    raise PrecisionLoss("cyclic-vector determinant undetermined")
                oV = dV.ord()
                pts = []
                for i in range(n):
                    Vi = [row[:] for row in V]
                    for r in range(n):
                        Vi[r][i] = cols[n][r]
                    di = mat_det(Vi)
                    if di.is_zero():
                        if di.N != INF:
                            raise PrecisionLoss("cyclic-vector minor undetermined")
                        continue
                    pts.append((i, Fraction(di.ord() - oV)))
                pts.append((n, Fraction(0)))
                return _hull_slopes(pts), e, level
    raise PrecisionLoss("no cyclic vector found among the candidates")


def _hull_slopes(pts):
    pts = sorted(pts)
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above the segment hull[-2] -> p
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    slopes = []
    if hull[0][0] != 0:
        raise ValueError("a_0 vanished: Phi is not invertible")
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        mu = Fraction(y2 - y1, x2 - x1)
        slopes += [-mu] * (x2 - x1)
    return sorted(slopes)


# ---------------------------------------------------------------------------
# linear systems in the z-coefficients of an unknown matrix

@lru_cache(maxsize=None)
def _mul_block(p: int, N: int, c: int) -> np.ndarray:
    from .base_arith import gf
    return gf(p, N).mul_matrix(c)


@lru_cache(maxsize=None)
def _frob_block(p: int, N: int, e: int) -> np.ndarray:
    from .base_arith import gf
    return gf(p, N).frob_matrix(e)


class SemilinearSystem:
    """Unknown r x c matrix X = sum_{lo<=t<hi} X_t z^t over the level F.

    Each term (k, L, R) contributes L * X^(sigma^k) * R (L or R None means
    identity) and the equation is sum of terms = 0.  Only z-coefficients
    fully determined by the window and by the precision of L, R are imposed.
    """

    def __init__(self, F: GFLevel, f: int, shape, terms, lo: int, hi: int):
        self.F, self.f = F, f
        self.r, self.c = shape
        self.lo, self.hi = lo, hi
        self.D = F.N
        prods = []
        out_rows = out_cols = None
        for k, L, R in terms:
            er = len(L) if L is not None else self.r
            gc = len(R[0]) if R is not None else self.c
            if out_rows is None:
                out_rows, out_cols = er, gc
            elif (out_rows, out_cols) != (er, gc):
                raise ValueError("terms have inconsistent shapes")
            for i in range(er):
                for a in range(self.r):
                    left = _entry(L, i, a, F)
                    if left is None:
                        continue
                    for b in range(self.c):
                        for j in range(gc):
                            right = _entry(R, b, j, F)
                            if right is None:
                                continue
                            P = left * right
                            if _is_exact_zero(P):
                                continue
                            prods.append((k, i, j, a, b, P))
        self.out_shape = (out_rows, out_cols)
        smin = min(P.low() for *_, P in prods)
        tmax = hi + smin
        for *_, P in prods:
            if P.N != INF:
                tmax = min(tmax, lo + P.N)
        self.tlo, self.thi = lo + smin, tmax
        self.prods = prods

    def matrix(self) -> np.ndarray:
        D, F, p = self.D, self.F, self.F.p
        nt = self.hi - self.lo
        nT = max(self.thi - self.tlo, 0)
        er, gc = self.out_shape
        A = np.zeros((er * gc * nT * D, self.r * self.c * nt * D), dtype=np.int64)
        for k, i, j, a, b, P in self.prods:
            fr = _frob_block(p, F.N, (self.f * k) % F.N) if k else None
            for s, coef in P.c.items():
                blk = _mul_block(p, F.N, coef)
                if fr is not None:
                    blk = blk @ fr % p
                for t in range(self.lo, self.hi):
                    T = t + s
                    if T < self.tlo or T >= self.thi:
                        continue
                    row = ((i * gc + j) * nT + (T - self.tlo)) * D
                    col = ((a * self.c + b) * nt + (t - self.lo)) * D
                    A[row:row + D, col:col + D] += blk
        return A % p

    def nullspace(self) -> np.ndarray:
        A = self.matrix()
        if A.shape[0] == 0:
            return np.eye(A.shape[1], dtype=np.int64)
        return fp_nullspace(A, self.F.p)

    def col_index(self, a, b, t):
        return ((a * self.c + b) * (self.hi - self.lo) + (t - self.lo)) * self.D

    def reorder_by_z(self) -> np.ndarray:
        """Permutation listing unknown columns by (t, a, b, digit)."""
        order = []
        for t in range(self.lo, self.hi):
            for a in range(self.r):
                for b in range(self.c):
                    base = self.col_index(a, b, t)
                    order += list(range(base, base + self.D))
        return np.array(order, dtype=np.int64)

    def decode(self, vec) -> list:
        F, D = self.F, self.D
        X = []
        for a in range(self.r):
            row = []
            for b in range(self.c):
                coeffs = {}
                for t in range(self.lo, self.hi):
                    base = self.col_index(a, b, t)
                    v = F.from_digits(vec[base:base + D])
                    if v:
                        coeffs[t] = v
                row.append(PrecSeries(F, coeffs))
            X.append(row)
        return X


def _entry(M, i, j, F):
    if M is None:
        return PrecSeries(F, {0: 1}) if i == j else None
    e = M[i][j]
    if _is_exact_zero(e):
        return None
    return embed_series(e, F)


def valuation_echelon(rows: np.ndarray, order: np.ndarray, p: int) -> np.ndarray:
    """Basis of the row space whose leading z-terms are independent, sorted by
    leading position (columns read in the given order)."""
    if rows.shape[0] == 0:
        return rows
    R, _ = fp_rref(rows[:, order], p)
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    return R[:, inv]


# ---------------------------------------------------------------------------
# hom spaces

@dataclass
class HomSpace:
    rank: Fraction
    basis: list
    level: int
    m: int
    fp_dim: int
    window: tuple
    solutions: list = field(default_factory=list, repr=False)


def hom_space(M: SigmaModule, N: SigmaModule, m: int, level: int | None = None,
              margin: int | None = None, poles: int = 0) -> HomSpace:
    """Solutions of X Phi_M = Phi_N X^sigma modulo z^m.

    The rank is the rank over F_q[z]/(z^m) of the projection of the
    solution space (dimension over F_p divided by f*m).  ``basis`` holds the
    solutions whose leading coefficient sits in z-degree 0 (they generate
    the module); each satisfies the relation modulo z^m.
    """
    if M.tower != N.tower:
        raise ValueError("modules live over different towers")
    tower = M.tower
    base_level = math.lcm(M.m, N.m)
    if level is None:
        level = base_level * math.lcm(M.n, N.n)
    if level % base_level:
        raise ValueError("level must be a multiple of the modules' levels")
    F = tower.level(level)
    PM, PN = embed_matrix(M.Phi, F), embed_matrix(N.Phi, F)
    ords = [e.low() for row in PM + PN for e in row if not _is_exact_zero(e)]
    highs = [max(e.c) for row in PM + PN for e in row if e.c]
    spread = (max(highs) - min(ords)) if highs else 0
    amin = min(ords)
    if margin is None:
        margin = 4 + spread + max(0, -amin)
    lo, hi = -poles, m + margin
    neg_PN = mat_map(PN, lambda s: -s)
    sysm = SemilinearSystem(F, tower.f, (N.n, M.n), [(0, None, PM), (1, neg_PN, None)], lo, hi)
    if sysm.thi < m:
        raise PrecisionLoss("z-precision of the Frobenius matrices is below m")
    null = sysm.nullspace()
    D = F.N
    proj_cols = []
    for t in range(0, m):
        for a in range(N.n):
            for b in range(M.n):
                base = sysm.col_index(a, b, t)
                proj_cols += list(range(base, base + D))
    proj_cols = np.array(proj_cols, dtype=np.int64)
    proj = null[:, proj_cols] % F.p if null.size else np.zeros((0, len(proj_cols)), dtype=np.int64)
    dim = fp_rank(proj, F.p) if proj.shape[0] else 0
    rank = Fraction(dim, tower.f * m)
    # generators: echelon rows whose leading term is in degree 0
    basis = []
    sols = []
    if null.shape[0]:
        ech = valuation_echelon(null, sysm.reorder_by_z(), F.p)
        order = sysm.reorder_by_z()
        width = N.n * M.n * D
        for row in ech:
            nz = np.flatnonzero(row[order])
            if nz.size == 0:
                continue
            lead_t = lo + nz[0] // width
            X = sysm.decode(row)
            sols.append(X)
            if lead_t == 0:
                basis.append(X)
    return HomSpace(rank, basis, level, m, dim, (lo, hi), sols)


def hom_relation_residual(M: SigmaModule, N: SigmaModule, X, level: int):
    F = M.tower.level(level)
    PM, PN = embed_matrix(M.Phi, F), embed_matrix(N.Phi, F)
    return mat_sub(mat_mul(X, PM), mat_mul(PN, sigma(X, 1, M.tower.f)))


# ---------------------------------------------------------------------------
# Dieudonne-Manin decomposition

@dataclass
class DMDecomposition:
    summands: list          # (d, n, mult), sorted by slope -d/n
    slopes: NewtonPolygon
    U: list
    level: int
    residual_prec: int
    S: list = field(repr=False, default=None)


def summands_from_slopes(slopes) -> list:
    out = []
    for lam, cnt in sorted(Counter(Fraction(s) for s in slopes).items()):
        n = lam.denominator
        d = -lam.numerator
        if cnt % n:
            raise PrecisionLoss(f"slope {lam} has multiplicity {cnt}, not divisible by {n}")
        out.append((d, n, cnt // n))
    return out


def dm_decompose(M: SigmaModule, target: int = 30, max_level: int | None = None,
                 seed: int = 0) -> DMDecomposition:
    """Find U with U^-1 Phi U^sigma = block-diag(A_{d_i,n_i}) modulo z^target.

    The slope multiset comes from a cyclic vector.  For a standard block
    F_{d,n}, a morphism F_{d,n} -> M is determined by the image x of the
    first basis vector, subject to x = z^d Phi_n x^(sigma^n); the columns of
    the block are x, F(x), ..., F^(n-1)(x).  Levels and pole orders of the
    window grow until enough independent solutions are found and the
    residual is certified.
    """
    slopes, _, _ = cyclic_vector_slopes(M, seed)
    summands = summands_from_slopes(slopes)
    tower = M.tower
    n = M.n
    cap = max_level or 24 * M.m
    levels = [M.m * j for j in range(1, cap // M.m + 1)]
    last_err = None
    for L in levels:
        if tower.q ** L > (1 << 12):
            break
        ML = M.at_level(L)
        F = ML.F
        for poles in (0, 2, 4):
            margin = target
            for _ in range(3):
                try:
                    U = _assemble(ML, summands, poles, target + margin)
                except _NotEnough:
                    U = None
                if U is None:
                    break
                S = block_standard(summands, tower, L).Phi
                rp = _residual_prec(ML, U, S)
                if rp >= target:
                    return DMDecomposition(summands, NewtonPolygon(slopes), U, L, rp, S)
                last_err = rp
                margin *= 2
    raise PrecisionLoss(f"no transition matrix certified to z^{target} (best {last_err})")


class _NotEnough(Exception):
    pass


def _assemble(M: SigmaModule, summands, poles: int, hi: int):
    F, f, n = M.F, M.tower.f, M.n
    columns = []
    for d, nb, mult in summands:
        Pn = M.power(nb)
        Psi = mat_map(Pn, lambda s: -(s.shift(d)))
        sysm = SemilinearSystem(F, f, (n, 1), [(0, None, None), (nb, Psi, None)], -poles, hi)
        null = sysm.nullspace()
        if null.shape[0] == 0:
            raise _NotEnough
        ech = valuation_echelon(null, sysm.reorder_by_z(), F.p)
        chosen = []
        for row in ech:
            x = [s[0] for s in sysm.decode(row)]
            block = [x]
            for _ in range(nb - 1):
                block.append(M.apply_F(block[-1]))
            trial = chosen + block
            if _full_column_rank(trial, n):
                chosen = trial
                if len(chosen) == nb * mult:
                    break
        if len(chosen) < nb * mult:
            raise _NotEnough
        columns += chosen
    return [[columns[j][i] for j in range(n)] for i in range(n)]


def _full_column_rank(cols, n) -> bool:
    k = len(cols)
    if k > n:
        return False
    A = [[cols[j][i] for j in range(k)] for i in range(n)]
    for rows in itertools.combinations(range(n), k):
        if not mat_minor(A, list(rows), list(range(k))).is_zero():
            return True
    return False


def _residual_prec(M: SigmaModule, U, S) -> float:
    """Certified z-precision of U^-1 Phi U^sigma - S."""
    f = M.tower.f
    R = mat_sub(mat_mul(M.Phi, sigma(U, 1, f)), mat_mul(U, S))
    rho = INF
    for row in R:
        for e in row:
            o = e.ord()
            if o is not None:
                rho = min(rho, o)
            elif e.N != INF:
                rho = min(rho, e.N)
    dU = mat_det(U)
    od = dU.ord()
    if od is None:
        return -INF
    adj = mat_adjugate(U)
    oa = mat_ord(adj)
    return rho + (oa if oa is not None else 0) - od


def dm_residual(M: SigmaModule, dec: DMDecomposition, zprec: int):
    """U^-1 Phi U^sigma - S computed independently, truncated at zprec."""
    ML = M.at_level(dec.level)
    Uinv = mat_inverse(dec.U, zprec + 20)
    lhs = mat_mul(mat_mul(Uinv, ML.Phi), sigma(dec.U, 1, M.tower.f))
    return [[(a - b).trunc(zprec) for a, b in zip(r1, r2)] for r1, r2 in zip(lhs, dec.S)]


# ---------------------------------------------------------------------------
# F-invariants of O(d)

def o_d_invariant(d: int, u_values, window, B: RamifiedBase) -> PrecSeries:
    """sum_{nu in window} z^(-d nu) sum_{j<d} z^j u_j^(q^nu).

    ``window = (nu_min, nu_max)``; nu_max = None stops once u^(q^nu)
    vanishes at the working precision.  The result is known modulo
    z^(d (1 - nu_min)) and satisfies z^-d f^sigma = f there.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    u = [B.coerce(x) for x in u_values]
    if len(u) != d:
        raise ValueError("need d values u_0..u_{d-1}")
    nu_min, nu_max = window
    coeffs = {}
    nu = nu_min
    while True:
        if nu_max is not None and nu > nu_max:
            break
        powers = []
        for x in u:
            try:
                powers.append(x.frob(nu))
            except RamificationBudgetExceeded:
                raise RamificationBudgetExceeded(f"u^(q^{nu}) needs more ramification")
        if nu_max is None and nu >= 0 and all(
                (not y.t) or min(y.t) >= B.P for y in powers):
            break
        for j, y in enumerate(powers):
            k = -d * nu + j
            if y.t or y.prec != INF:
                y = y.truncate(B.P)
                coeffs[k] = coeffs[k] + y if k in coeffs else y
        nu += 1
        if nu_max is None and nu > nu_min + 64 * B.P:
            break
    return PrecSeries(B, coeffs, d * (1 - nu_min))


# ---------------------------------------------------------------------------
# norm-contraction iteration

def mat_norm(A, r) -> tuple:
    """(exponent, exact) of max-entry ||.||_r; exponent None for zero."""
    best, exact = None, True
    for row in A:
        for e in row:
            v, ex = norm_r(e, r)
            exact = exact and ex
            if v is not None and (best is None or v < best):
                best = v
    return best, exact


def nonpositive_part(s: PrecSeries) -> PrecSeries:
    return PrecSeries(s.R, {i: v for i, v in s.c.items() if i <= 0}, INF)


@dataclass
class ContractionResult:
    U: list
    iterations: int
    c_exponent: Fraction
    h_exponent: Fraction
    residual: list = field(repr=False)
    residual_norm: Fraction | None = None
    u_norm: Fraction | None = None


def _series_inverse_matrix_monomial_det(D):
    det = mat_det(D)
    items = [(i, v) for i, v in det.c.items() if v.t or v.prec != INF]
    if len(items) != 1:
        raise HypothesisFailed("D^-1 is only supported when det D is a single z-monomial")
    i, v = items[0]
    inv = PrecSeries(det.R, {-i: v.inv()})
    return mat_map(mat_adjugate(D), lambda s: s * inv)


def norm_contraction_reduce(A, D, r, Dinv=None, max_iter: int = 200) -> ContractionResult:
    """Iterate U_{l+1} = U_l (Id + X_l), X_l the non-positive z-part of
    U_l^-1 A U_l^sigma D^-1 - Id.

    Norms are reported as exponents of |zeta| (larger = smaller norm).
    Requires ||A D^-1 - Id||_r < h^-1 with h = (||D|| ||D^-1||)^(1/(q-1)).
    """
    r = Fraction(r)
    B = A[0][0].R
    q = B.q
    n = len(A)
    if Dinv is None:
        Dinv = _series_inverse_matrix_monomial_det(D)
    nD, exD = mat_norm(D, r)
    nDi, exDi = mat_norm(Dinv, r)
    if nD is None or nDi is None or not (exD and exDi):
        raise HypothesisFailed("norms of D and D^-1 are not certified")
    h_exp = Fraction(nD + nDi, q - 1)
    I = mat_identity(B, n)
    E0 = mat_sub(mat_mul(A, Dinv), I)
    nE, exE = mat_norm(E0, r)
    if nE is None:
        nE = Fraction(B.P, B.E)      # zero at precision
    if not exE and nE is not None and nE <= -h_exp:
        raise HypothesisFailed("norm hypothesis not certified at current precision")
    if nE <= -h_exp:
        raise HypothesisFailed(f"||A D^-1 - Id||_r = |zeta|^{nE} is not below h^-1 = |zeta|^{-h_exp}")
    c_exp = nE + h_exp
    U = I
    Al = A
    it = 0
    while True:
        Z = mat_sub(mat_mul(Al, Dinv), I)
        X = mat_map(Z, nonpositive_part)
        if all(all(not v.t for v in e.c.values()) for row in X for e in row):
            break
        nX, _ = mat_norm(X, r)
        if nX is not None and nX < (it + 1) * c_exp - h_exp:
            raise NoConvergence(f"contraction bound violated at step {it}")
        it += 1
        if it > max_iter:
            raise NoConvergence("iteration cap reached")
        IX = _add_identity(X)
        IXinv = _neumann_inverse(X, B)
        U = _clean(mat_mul(U, IX), B)
        Al = _clean(mat_mul(mat_mul(IXinv, Al), sigma(IX, 1)), B)
    resid = mat_sub(mat_mul(Al, Dinv), I)
    nR, _ = mat_norm(resid, r)
    nU, _ = mat_norm(mat_sub(U, I), r)
    return ContractionResult(U, it, c_exp, h_exp, resid, nR, nU)


def _add_identity(X):
    n = len(X)
    return [[X[i][j] + PrecSeries.one(X[i][j].R) if i == j else X[i][j]
             for j in range(n)] for i in range(n)]


def _neumann_inverse(X, B):
    """(Id + X)^-1 = sum (-X)^k; terminates since X has coefficients in m_K."""
    n = len(X)
    I = mat_identity(B, n)
    acc = I
    term = I
    negX = mat_map(X, lambda s: -s)
    for _ in range(4 * B.P + 4):
        term = _clean(mat_mul(term, negX), B)
        if all(all(not v.t for v in e.c.values()) for row in term for e in row):
            break
        acc = [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(acc, term)]
    return acc


def _clean(A, B):
    """Drop z-terms whose coefficient is zero at precision and cap precision at P."""
    def cl(s):
        return PrecSeries(s.R, {i: v.truncate(B.P) for i, v in s.c.items() if v.t}, s.N)
    return mat_map(A, cl)


def verify_norm_contraction(A, D, U, r, Dinv=None):
    """Independent check of the two postconditions: returns (positive_part_only, norm_exp)."""
    B = A[0][0].R
    if Dinv is None:
        Dinv = _series_inverse_matrix_monomial_det(D)
    n = len(A)
    X = _clean(mat_map(mat_sub(U, mat_identity(B, n)), lambda s: s), B)
    Uinv = _neumann_inverse(X, B)
    Z = mat_sub(mat_mul(mat_mul(mat_mul(Uinv, A), sigma(U, 1)), Dinv), mat_identity(B, n))
    Z = _clean(Z, B)
    only_positive = all(all(i > 0 for i, v in e.c.items() if v.t) for row in Z for e in row)
    nZ, _ = mat_norm(Z, r)
    return only_positive, nZ


# ---------------------------------------------------------------------------
# random instances

def random_unimodular(F: GFLevel, n: int, rng: random.Random, steps: int = 3, deg: int = 2):
    """Product of elementary matrices with polynomial entries (det = 1)."""
    g = mat_identity(F, n)
    if n == 1:
        return g
    for _ in range(steps):
        i, j = rng.sample(range(n), 2)
        coeffs = {k: rng.randrange(F.Q) for k in range(deg + 1)}
        E = mat_identity(F, n)
        E[i][j] = PrecSeries(F, coeffs)
        g = mat_mul(g, E)
    return g


def random_standard_sum(rng: random.Random, max_rank: int = 3, max_d: int = 3):
    """Random list of (d, n, mult) with total rank <= max_rank."""
    rank = rng.randint(1, max_rank)
    out = []
    left = rank
    while left:
        n = rng.randint(1, left)
        ds = [d for d in range(-max_d, max_d + 1) if math.gcd(d, n) == 1]
        out.append((rng.choice(ds), n, 1))
        left -= n
    merged = Counter()
    for d, n, m in out:
        merged[(d, n)] += m
    return sorted(((d, n, m) for (d, n), m in merged.items()), key=lambda t: Fraction(-t[0], t[1]))


def conjugated_instance(summands, tower: FieldTower, rng: random.Random, m: int = 1):
    """(M, g) with Phi_M = g^-1 S g^sigma for S block-standard and g unimodular."""
    S = block_standard(summands, tower, m)
    g = random_unimodular(S.F, S.n, rng)
    ginv = mat_adjugate(g)          # det g = 1
    Phi = mat_mul(mat_mul(ginv, S.Phi), sigma(g, 1, tower.f))
    return SigmaModule(Phi, tower, m), g
