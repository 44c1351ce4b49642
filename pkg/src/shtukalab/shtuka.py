"""Local shtuka, rigidification, the functor to Hodge-Pink structures and
Tate modules.

A shtuka of rank n is given by A = (z - zeta)^-d * A0 with A0 a matrix of
power series in z over the integers of a ramified base K.  Its reduction
B = z^-d (A0 mod m_K) is the associated z-isocrystal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .base_arith import (INF, KElem, PrecSeries, RamifiedBase, ZetaJet, as_solve_K, fp_nullspace,
                         kth_root, mat_adjugate, mat_det, mat_map, mat_mul, reexpand_at,
                         t_function, to_base)
from .errors import (HypothesisFailed, InsufficientPrecision, NoConvergence, NotEtale,
                     ShapeViolation)
from .hodgepink import HodgePinkStructure, jet_mat_mul, jets_of
from .sigmamod import SigmaModule


# ---------------------------------------------------------------------------
# series helpers over K

def zeta_linear(B: RamifiedBase, k: int = 1) -> PrecSeries:
    """(z - zeta)^k as a polynomial over B (k >= 0)."""
    f = PrecSeries.one(B)
    lin = PrecSeries(B, {1: B.one(), 0: -B.zeta})
    for _ in range(k):
        f = f * lin
    return f


def divide_by_linear(f: PrecSeries) -> PrecSeries:
    """f / (z - zeta) for a power series vanishing at zeta.

    Uses g_(i-1) = f_i + zeta g_i, summed from the top: exact for
    polynomials, and known modulo w^((N-i) val(zeta)) for a series known
    modulo z^N with integral tail.
    """
    B = f.R
    if f.c and min(f.c) < 0:
        raise ValueError("expected a power series")
    N = f.N
    hi = (max(f.c) if f.c else 0) if N == INF else N - 1
    g = {}
    acc = B.zero()
    for i in range(hi, 0, -1):
        acc = acc * B.zeta + f.coeff(i)
        if N != INF:
            acc = acc.truncate(B.E * (N - i))
        g[i - 1] = acc
    rem = acc * B.zeta + f.coeff(0)
    if rem.t:
        raise ValueError("series does not vanish at zeta")
    return PrecSeries(B, g, INF if N == INF else N - 1)


def _residue_coeff(v: KElem) -> int:
    if v.t and min(v.t) < 0:
        raise ShapeViolation("coefficient is not integral")
    if v.prec <= 0:
        raise InsufficientPrecision("residue not determined")
    return v.t.get(0, 0)


def residue_matrix(A0, B: RamifiedBase):
    """A0 mod m_K, as exact series over B."""
    return [[PrecSeries(B, {i: B.const(_residue_coeff(v)) for i, v in s.c.items()}, s.N)
             for s in row] for row in A0]


def frob_matrix(M, k: int = 1):
    return mat_map(M, lambda s: s.frob(k))


def _trunc_coeffs(M, P):
    return mat_map(M, lambda s: PrecSeries(s.R, {i: v.truncate(P) for i, v in s.c.items()}, s.N))


# ---------------------------------------------------------------------------
# shtuka

class LocalShtuka:
    """A = (z - zeta)^-d * A0 with integral A0 over the base."""

    def __init__(self, A0, d: int = 0, base: RamifiedBase | None = None,
                 label: str | None = None):
        B = base if base is not None else A0[0][0].R
        if not isinstance(B, RamifiedBase):
            raise ValueError("pass the ramified base")
        self.base = B
        self.A0 = mat_map(A0, lambda s: s if s.R is B else to_base(s, B))
        self.d = int(d)
        self.n = len(A0)
        self.label = label
        for row in self.A0:
            for s in row:
                if s.c and min(s.c) < 0:
                    raise ShapeViolation("A0 must be a power series matrix")
                if any(v.t and min(v.t) < 0 for v in s.c.values()):
                    raise ShapeViolation("A0 must have integral coefficients")

    def __repr__(self):
        return f"LocalShtuka(n={self.n}, d={self.d})"

    def det_shape(self):
        """(a, b) with det A0 = unit * z^a * (z - zeta)^b.

        b is certified as both the Weierstrass degree of z^-a det A0 and its
        vanishing order at zeta, which forces the distinguished factor to be
        (z - zeta)^b.
        """
        B = self.base
        det = mat_det(self.A0)
        a = det.ord()
        if a is None:
            raise InsufficientPrecision("det A0 vanishes at precision")
        f = det.shift(-a)
        wdeg = next((i for i in sorted(f.c) if f.c[i].t and min(f.c[i].t) == 0), None)
        if wdeg is None:
            raise HypothesisFailed("z^-a det A0 has no unit coefficient")
        jet = reexpand_at(f, B.zeta, wdeg + 1)
        if jet.ord() != wdeg:
            raise HypothesisFailed(
                f"det A0 is not unit * z^a * (z - zeta)^b (Weierstrass degree {wdeg}, "
                f"order at zeta {jet.ord()})")
        return a, wdeg

    def twisted(self, e: int) -> "LocalShtuka":
        """Tensor with the Tate shtuka 1(e), e >= 0."""
        lin = zeta_linear(self.base, e)
        return LocalShtuka([[lin * s for s in row] for row in self.A0], self.d, self.base,
                           self.label)

    def A(self):
        """(d, A0): A = (z - zeta)^-d A0."""
        return self.d, self.A0


def tate_shtuka(n: int, base: RamifiedBase) -> LocalShtuka:
    """1(n): A = (z - zeta)^n."""
    if n >= 0:
        return LocalShtuka([[zeta_linear(base, n)]], 0, base, label=f"1({n})")
    return LocalShtuka([[PrecSeries.one(base)]], -n, base, label=f"1({n})")


def reduce(M: LocalShtuka) -> SigmaModule:
    """The z-isocrystal B = z^-d (A0 mod m_K) over F_{q^m}."""
    B = M.base
    B0 = [[PrecSeries(B.F, {i: _residue_coeff(v) for i, v in s.c.items()}, s.N).shift(-M.d)
           for s in row] for row in M.A0]
    return SigmaModule(B0, B.tower, B.m)


def _random_integral(B: RamifiedBase, rng, deg: int, depth: int = 4) -> PrecSeries:
    """Polynomial in z whose coefficients are a residue constant plus a few w-terms."""
    Q = B.F.Q
    coeffs = {}
    for k in range(deg + 1):
        terms = {0: rng.randrange(Q)}
        for _ in range(rng.randint(0, 2)):
            terms[rng.randint(1, depth)] = rng.randrange(1, Q)
        coeffs[k] = KElem(B, {e: c for e, c in terms.items() if c})
    return PrecSeries(B, coeffs)


def random_shtuka(B: RamifiedBase, rng, n: int = 2, max_pole: int = 2, deg: int = 1,
                  steps: int = 2) -> LocalShtuka:
    """A0 = U1 diag((z - zeta)^b_i) U2 with elementary U1, U2 over O_K[z], b_i <= max_pole.

    The pole order d is drawn from [0, max(b)], so A = (z - zeta)^-d A0.
    """
    def unimodular():
        g = [[PrecSeries.one(B) if i == j else PrecSeries.zero(B) for j in range(n)]
             for i in range(n)]
        if n == 1:
            return g
        for _ in range(steps):
            i, j = rng.sample(range(n), 2)
            E = [[PrecSeries.one(B) if a == b else PrecSeries.zero(B) for b in range(n)]
                 for a in range(n)]
            E[i][j] = _random_integral(B, rng, deg)
            g = mat_mul(g, E)
        return g

    bs = [rng.randint(0, max_pole) for _ in range(n)]
    D0 = [[zeta_linear(B, bs[i]) if i == j else PrecSeries.zero(B) for j in range(n)]
          for i in range(n)]
    A0 = mat_mul(mat_mul(unimodular(), D0), unimodular())
    return LocalShtuka(A0, rng.randint(0, max(bs)), B, label=f"random b={bs}")


@dataclass
class Rigidification:
    """C = t^-t_pow * C0 with C A = B C^sigma and C = Id mod m_K."""
    C0: list
    t_pow: int
    certified_prec: int
    iterations: int
    z_prec: int
    history: list = field(default_factory=list)


def _inverse_data(M: LocalShtuka, zprec: int):
    """(k, b, u, Ainv') with u = det A0 / (z-zeta)^b and
    Ainv' = (z-zeta)^(k+d-b) adj(A0) u^-1 integral."""
    a, b = M.det_shape()
    if a:
        raise HypothesisFailed("det A0 has a zero at z = 0; only shapes unit*(z-zeta)^b are handled")
    k = max(0, b - M.d)
    u = mat_det(M.A0)
    for _ in range(b):
        u = divide_by_linear(u)
    uinv = u.inverse(zprec)
    adj = mat_adjugate(M.A0) if M.n > 1 else [[PrecSeries.one(M.base)]]
    lin = zeta_linear(M.base, k + M.d - b)
    Ainv = [[(lin * s * uinv).trunc(zprec) for s in row] for row in adj]
    return k, b, u, Ainv


def rigidify(M: LocalShtuka, zprec: int = 16, max_iter: int = 24) -> Rigidification:
    """Limit of C_m = B' (C_{m-1})^sigma A'^-1 for the twist A' = (z-zeta)^-k A.

    k is chosen so that A'^-1 is integral; then C = t^-k C0 with C0 the
    limit.  The loop stops once two iterates agree at the working
    w-precision.
    """
    B = M.base
    P = B.P
    k, b, u, Ainv = _inverse_data(M, zprec)
    s = k + M.d
    N0 = zprec + s * (max_iter + 2)
    if s:
        k, b, u, Ainv = _inverse_data(M, N0)
    Bp = [[x.shift(-s) for x in row] for row in residue_matrix(M.A0, B)]
    C = _trunc_coeffs(mat_mul(Bp, Ainv), P)
    hist = []
    stall = 0
    for it in range(1, max_iter + 1):
        Cn = _trunc_coeffs(mat_mul(mat_mul(Bp, frob_matrix(C)), Ainv), P)
        gap = min((v.lowval() for r1, r2 in zip(Cn, C) for x, y in zip(r1, r2)
                   for v in (x - y).c.values()), default=INF)
        hist.append(gap)
        C = Cn
        if gap >= P:
            R = Rigidification(C, k, P, it, min(x.N for row in C for x in row), hist)
            check_rigidification(M, R)
            return R
        if len(hist) > 1 and gap <= hist[-2]:
            stall += 1
            if stall >= 3:
                raise NoConvergence("the iterates do not approach each other")
    raise NoConvergence(f"no convergence within {max_iter} iterations")


def check_rigidification(M: LocalShtuka, R: Rigidification):
    """z^s C0 A0 = (z - zeta)^s B0 C0^sigma (s = k + d) and C0 = Id mod m_K."""
    B = M.base
    s = R.t_pow + M.d
    lhs = [[x.shift(s) for x in row] for row in mat_mul(R.C0, M.A0)]
    lin = zeta_linear(B, s)
    rhs = [[lin * x for x in row] for row in mat_mul(residue_matrix(M.A0, B), frob_matrix(R.C0))]
    for r1, r2 in zip(lhs, rhs):
        for x, y in zip(r1, r2):
            if any(v.truncate(R.certified_prec).t for v in (x - y).c.values()):
                raise ShapeViolation("C A = B C^sigma fails at the certified precision")
    return integrality_check(R, M)


def integrality_check(R: Rigidification, M: LocalShtuka | None = None) -> dict:
    """C0 integral, C0 = Id mod m_K, and the polar part decays like a limit of the C_m.

    With A' = (z - zeta)^-s A0 the m-th step changes C by an element of
    pi^(q^m) z^-((m+1)s) O_K[[z]], so the coefficient of z^-j has
    valuation >= q^(ceil(j/s) - 1) w-units (up to the working precision).
    The rate is checked only when M is given.
    """
    n = len(R.C0)
    B = R.C0[0][0].R
    s = R.t_pow + M.d if M is not None else None
    for i in range(n):
        for j in range(n):
            for e, v in R.C0[i][j].c.items():
                if v.t and min(v.t) < 0:
                    raise ShapeViolation("C0 has a non-integral coefficient")
                want = 1 if (i == j and e == 0) else 0
                if _residue_coeff(v) != want:
                    raise ShapeViolation("C0 is not the identity modulo m_K")
                if e < 0 and v.t and s is not None:
                    if s == 0:
                        raise ShapeViolation("C0 has a pole at z = 0 although A' is integral")
                    steps = -(e // s)   # ceil(j / s) for j = -e
                    need = min(R.certified_prec, B.q ** (steps - 1))
                    if v.lowval() < need:
                        raise ShapeViolation("polar part of C0 decays slower than the C_m iteration allows")
    if R.t_pow < 0:
        raise ShapeViolation("negative t exponent")
    return {"integral": True, "identity_mod_m": True, "t_pow": R.t_pow,
            "certified_prec": R.certified_prec}


def mysterious_functor(M: LocalShtuka, R: Rigidification | None = None, E: int = 6,
                       zprec: int = 16) -> HodgePinkStructure:
    """The Hodge-Pink structure on reduce(M) with q = C^sigma A^-1 K[[z - zeta]]^n.

    C^sigma A^-1 = (t^sigma)^-k C0^sigma (z - zeta)^(d-b) adj(A0) u^-1, so
    gamma is the jet of (t^sigma)^-k C0^sigma adj(A0) u^-1 with shift b - d.
    """
    B = M.base
    R = R or rigidify(M, zprec)
    _, b, u, _ = _inverse_data(M, zprec)
    adj = mat_adjugate(M.A0) if M.n > 1 else [[PrecSeries.one(B)]]
    uinv = u.inverse(zprec)
    G = jets_of([[x * uinv for x in row] for row in adj], B, E)
    JC = jets_of(frob_matrix(R.C0), B, E)
    # polar coefficients dropped below w^P contribute at most w^((q-1)P - rho*val(zeta))
    JC = [[_cap_jet(j, (B.q - 1) * R.certified_prec) for j in row] for row in JC]
    G = jet_mat_mul(JC, G)
    if R.t_pow:
        jt = reexpand_at(t_function(B).frob(1), B.zeta, E).inverse()
        f = jt
        for _ in range(R.t_pow - 1):
            f = f * jt
        G = [[x * f for x in row] for row in G]
    return HodgePinkStructure(reduce(M), G, b - M.d, B, label=M.label)


def _cap_jet(j, cap):
    B = j.B
    return ZetaJet(B, [c.truncate(cap - rho * B.E) for rho, c in enumerate(j.c)])


# ---------------------------------------------------------------------------
# semilinear equations x = A x^sigma modulo z^m

def _kmat_inv(G):
    """Inverse of a small matrix of KElems by Gaussian elimination."""
    n = len(G)
    B = G[0][0].B
    A = [list(row) + [B.one() if i == j else B.zero() for j in range(n)] for i, row in enumerate(G)]
    for c in range(n):
        piv = min((r for r in range(c, n) if A[r][c].t), key=lambda r: A[r][c].valuation(),
                  default=None)
        if piv is None:
            raise InsufficientPrecision("singular matrix at precision")
        A[c], A[piv] = A[piv], A[c]
        inv = A[c][c].inv()
        A[c] = [x * inv for x in A[c]]
        for r in range(n):
            if r != c and A[r][c].t:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


def _kmat_vec(G, v):
    return [sum((G[i][j] * v[j] for j in range(1, len(v))), G[i][0] * v[0])
            for i in range(len(G))]


def _lift_all(B2, *objs):
    out = []
    for o in objs:
        out.append(_lift(B2, o))
    return out


def _lift(B2, o):
    if isinstance(o, KElem):
        return B2.lift(o)
    if isinstance(o, list):
        return [_lift(B2, x) for x in o]
    return o


def _is_upper(A0):
    n = len(A0)
    return all(not A0[i][j].t for i in range(n) for j in range(i))


def _homogeneous(A0, B):
    """(B2, g) with g = A0 g^sigma invertible over an extension B2."""
    n = len(A0)
    if _is_upper(A0):
        return _homogeneous_upper(A0, B)
    rev = [[A0[n - 1 - i][n - 1 - j] for j in range(n)] for i in range(n)]
    if _is_upper(rev):
        B2, g = _homogeneous_upper(rev, B)
        return B2, [[g[n - 1 - i][n - 1 - j] for j in range(n)] for i in range(n)]
    if all(not (x.t and min(x.t) < 0) for row in A0 for x in row):
        return _homogeneous_unit(A0, B)
    raise NotEtale("A(0) is neither triangular nor an integral unit matrix")


def _homogeneous_upper(A0, B):
    n = len(A0)
    q = B.q
    g = [[B.zero() for _ in range(n)] for _ in range(n)]
    for i in range(n):
        a = A0[i][i]
        if not a.t:
            raise NotEtale("A(0) is singular")
        if q == 2:
            root = a.inv()
        else:
            B2, root = kth_root(a.inv(), q - 1)
            if B2 is not B:
                g, A0 = _lift(B2, g), _lift(B2, A0)
                B = B2
            root = B.lift(root)
        g[i][i] = root
    # off-diagonal entries, bottom rows first
    for j in range(n):
        for i in range(j - 1, -1, -1):
            s = B.zero()
            for kk in range(i + 1, j + 1):
                s = s + A0[i][kk] * g[kk][j].frob(1)
            # g_ij - a_ii g_ij^q = s ; g_ij = g_ii y  =>  y^q - y = -s / g_ii
            c = -(s * g[i][i].inv())
            B2, y = as_solve_K(c)
            if B2 is not B:
                g, A0 = _lift(B2, g), _lift(B2, A0)
                B = B2
            g[i][j] = g[i][i] * B.lift(y)
    return B, g


def _residue_lang(Abar, tower, m, budget: int = 6):
    """g over F_{q^M} with g = Abar g^sigma (Abar a matrix over F_{q^m})."""
    n = len(Abar)
    src = tower.level(m)
    for j in range(1, budget + 1):
        M = m * j
        lev = tower.level(M)
        A = [[src.embed(x, lev) for x in row] for row in Abar]
        N = lev.N
        p = lev.p
        fr = lev.frob_matrix(tower.f)
        big = np.zeros((n * N, n * N), dtype=np.int64)
        for r in range(n):
            big[r * N:(r + 1) * N, r * N:(r + 1) * N] += np.eye(N, dtype=np.int64)
            for c in range(n):
                if A[r][c]:
                    blk = lev.mul_matrix(A[r][c]) @ fr % p
                    big[r * N:(r + 1) * N, c * N:(c + 1) * N] -= blk
        ns = fp_nullspace(big % p, p)
        chosen = []
        for vec in ns:
            col = [lev.from_digits(vec[r * N:(r + 1) * N]) for r in range(n)]
            if _ff_rank(chosen + [col], lev) > len(chosen):
                chosen.append(col)
            if len(chosen) == n:
                g = [[chosen[c][r] for c in range(n)] for r in range(n)]
                return M, g
    raise NotEtale("no residue Lang solution within the extension budget")


def _ff_rank(cols, lev):
    rows = [list(r) for r in zip(*cols)] if cols else []
    rank = 0
    if not rows:
        return 0
    ncol = len(cols)
    for c in range(ncol):
        piv = next((r for r in range(rank, len(rows)) if rows[r][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = lev.inv(rows[rank][c])
        rows[rank] = [lev.mul(x, inv) for x in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][c]:
                f = rows[r][c]
                rows[r] = [lev.sub(x, lev.mul(f, y)) for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def _homogeneous_unit(A0, B):
    n = len(A0)
    F = B.F
    Abar = [[x.t.get(0, 0) for x in row] for row in A0]
    M, gbar = _residue_lang(Abar, B.tower, B.m)
    B2 = B.extend_level(M)
    A0 = _lift(B2, A0)
    g = [[B2.const(x) for x in row] for row in gbar]
    for _ in range(4 * B2.P + 8):
        gs = [[x.frob(1) for x in row] for row in g]
        new = [[sum((A0[i][k] * gs[k][j] for k in range(1, n)), A0[i][0] * gs[0][j]).truncate(B2.P)
                for j in range(n)] for i in range(n)]
        if all(a.same(b) for r1, r2 in zip(new, g) for a, b in zip(r1, r2)):
            return B2, new
        g = new
    raise NoConvergence("Lang lift did not stabilise")


@dataclass
class SemilinearSolution:
    base: RamifiedBase
    basis: list            # n vectors, each a list of n PrecSeries mod z^m
    g: list                # homogeneous solution matrix for the constant term
    m: int
    info: dict


def solve_semilinear(A, m: int, base: RamifiedBase | None = None) -> SemilinearSolution:
    """F_q[z]/z^m-basis of {x : x = A x^sigma mod z^m} over an extension of K."""
    B = base if base is not None else A[0][0].R
    A = mat_map(A, lambda s: s if s.R is B else to_base(s, B))
    n = len(A)
    for row in A:
        for s in row:
            if s.c and min(s.c) < 0:
                raise NotEtale("A has a pole at z = 0")
    coeff = [[[A[r][c].coeff(i) for c in range(n)] for r in range(n)] for i in range(m)]
    B0 = B
    B, g = _homogeneous(coeff[0], B)
    coeff = _lift(B, coeff)
    basis_coeffs = []
    for e in range(n):
        xs = [[g[r][e] for r in range(n)]]
        basis_coeffs.append(xs)
    for j in range(1, m):
        ginv = _kmat_inv(g)
        for e in range(n):
            xs = basis_coeffs[e]
            r = [B.zero() for _ in range(n)]
            for i in range(1, j + 1):
                xsig = [x.frob(1) for x in xs[j - i]]
                r = [a + b for a, b in zip(r, _kmat_vec(coeff[i], xsig))]
            s = _kmat_vec(ginv, r)
            ys = []
            for comp in s:
                B2, y = as_solve_K(-B.lift(comp))
                if B2 is not B:
                    g, coeff, basis_coeffs, ys = _lift(B2, g), _lift(B2, coeff), \
                        _lift(B2, basis_coeffs), _lift(B2, ys)
                    s = _lift(B2, s)
                    ginv = _kmat_inv(g)
                    B = B2
                    xs = basis_coeffs[e]
                ys.append(B.lift(y))
            xs.append(_kmat_vec(g, ys))
    basis = [[PrecSeries(B, {j: xs[j][r] for j in range(m)}, m) for r in range(n)]
             for xs in basis_coeffs]
    info = {"level": B.m, "ramification": B.E // max(1, B0.E) if B.standard else None,
            "zeta_valuation": B.E, "base_level": B0.m}
    return SemilinearSolution(B, basis, g, m, info)


def semilinear_residual(A, x, m: int):
    """x - A x^sigma modulo z^m (all coefficients should vanish at precision)."""
    B = x[0].R
    A = mat_map(A, lambda s: s if s.R is B else PrecSeries(
        B, {i: B.lift(v) for i, v in s.c.items()}, s.N))
    xs = [s.frob(1) for s in x]
    n = len(x)
    out = []
    for i in range(n):
        acc = x[i]
        for j in range(n):
            acc = acc - A[i][j] * xs[j]
        out.append(acc.trunc(m))
    return out


# ---------------------------------------------------------------------------
# Tate modules

@dataclass
class TateModule:
    solution: SemilinearSolution
    m0: int                       # the automorphism is c -> c^(q^m0) on residues, w fixed
    action: list                  # n x n matrix over F_q[z]/z^m


def _galois_generator(Bf: RamifiedBase, B: RamifiedBase):
    """Least m0 (multiple of B.m) such that c -> c^(q^m0), w_f fixed, fixes K."""
    img_w = Bf.lift(B.w(1))
    img_z = Bf.zeta
    for j in range(1, Bf.m // B.m + 1):
        m0 = B.m * j
        if Bf.m % m0 and j > 1:
            continue
        if _tau(img_w, m0).same(img_w) and _tau(img_z, m0).same(img_z):
            return m0
    return Bf.m


def _tau(x: KElem, m0: int) -> KElem:
    B = x.B
    return KElem(B, {e: B.F.frobp(c, B.f * m0) for e, c in x.t.items()}, x.prec)


def _tau_series(s: PrecSeries, m0: int) -> PrecSeries:
    return PrecSeries(s.R, {i: _tau(v, m0) for i, v in s.c.items()}, s.N)


def coordinates(sol: SemilinearSolution, x) -> list:
    """Coefficients c_i(z) in F_q[z]/z^m with x = sum c_i b_i."""
    B = sol.base
    n, m = len(sol.basis), sol.m
    Fq = B.tower.level(1)
    ginv = _kmat_inv(sol.g)
    res = list(x)
    coords = [dict() for _ in range(n)]
    for j in range(m):
        v = _kmat_vec(ginv, [s.coeff(j) for s in res])
        cs = []
        for comp in v:
            if any(e != 0 for e in comp.t):
                raise ShapeViolation("coordinate is not a constant")
            c = comp.t.get(0, 0)
            if not B.F.contains(c, Fq):
                raise ShapeViolation("coordinate is not in F_q")
            cs.append(c)
        for i, c in enumerate(cs):
            if c:
                coords[i][j] = B.F.restrict(c, Fq)
                term = [s.shift(j).scale(B.const(c)) for s in sol.basis[i]]
                res = [(a - b).trunc(m) for a, b in zip(res, term)]
    if not all(all(not v.t for v in s.c.values()) for s in res):
        raise ShapeViolation("residual after peeling off coordinates")
    return [PrecSeries(Fq, coords[i], m) for i in range(n)]


def tate_module(M: LocalShtuka, m: int) -> TateModule:
    """Solutions of F_M(sigma* x) = x modulo z^m and a Galois automorphism on them."""
    B = M.base
    A = M.A0
    if M.d:
        raise NotEtale("the Tate module solver needs a shtuka without poles at z = zeta")
    sol = solve_semilinear(A, m, B)
    m0 = _galois_generator(sol.base, B)
    n = len(sol.basis)
    action = [[None] * n for _ in range(n)]
    for i, b in enumerate(sol.basis):
        img = [_tau_series(s, m0) for s in b]
        cs = coordinates(sol, img)
        for k in range(n):
            action[k][i] = cs[k]
    return TateModule(sol, m0, action)


def verify_tate_action(M: LocalShtuka, T: TateModule) -> bool:
    sol = T.solution
    B = sol.base
    n, m = len(sol.basis), sol.m
    for i, b in enumerate(sol.basis):
        img = [_tau_series(s, T.m0) for s in b]
        rebuilt = [PrecSeries(B, {}, m) for _ in range(n)]
        for k in range(n):
            c = T.action[k][i]
            for e, v in c.c.items():
                cv = B.const(B.tower.level(1).embed(v, B.F))
                rebuilt = [r + s.shift(e).scale(cv) for r, s in zip(rebuilt, sol.basis[k])]
        for a, bb in zip(img, rebuilt):
            if not all(not v.t for v in (a - bb).trunc(m).c.values()):
                return False
    return True


# ---------------------------------------------------------------------------
# valuation obstruction for a rigidification

def in_group(x: Fraction, q: int) -> bool:
    """x in Z[1/(q+1)]."""
    den = Fraction(x).denominator
    g = math.gcd(den, q + 1)
    while g > 1:
        while den % g == 0:
            den //= g
        g = math.gcd(den, q + 1)
    return den == 1


@dataclass
class ObstructionReport:
    """Outcome of the valuation ledger.

    escape_index is the first index at which some branch is forced outside
    the value group, reported only when no branch with determined
    valuations stays inside it up to I.  The branch in which val(v_i) stays
    below every a_i has no forced value; it is confined to
    val(v_-1) < residual_bound, which shrinks as I grows.
    """
    escape_index: int | None
    exponent: Fraction | None
    escapes: list
    residual_bound: Fraction | None
    surviving: list


def escape_obstruction(a, q: int | None = None, I: int | None = None, start=None,
                       group=None) -> ObstructionReport:
    """Forced valuations of solutions of v_i^q + zeta v_i = a_i + v_(i-1).

    ``a`` is a PrecSeries over a ramified base or a list of valuations in
    zeta-units (None for a zero coefficient).  Valuations of v are tracked
    as exact values or intervals, branching where cancellation cannot be
    excluded; a branch ends when its forced exact valuation leaves the
    value group (default Z[1/(q+1)]).  ``start`` fixes val(v_-1); by default
    only v_-1 in m_K is assumed.
    """
    if isinstance(a, PrecSeries):
        B = a.R
        q = B.q
        top = I if I is not None else (max(a.c) if a.c else 0)
        vals = [B.val(a.coeff(i)) if a.coeff(i).t else None for i in range(top + 1)]
    else:
        if q is None:
            raise ValueError("q is needed with a list of valuations")
        vals = [None if v is None else Fraction(v) for v in a]
    if I is None:
        I = len(vals) - 1
    group = group or (lambda x: in_group(x, q))
    thr = Fraction(q, q - 1)
    escapes, surviving = [], []
    first = ("exact", Fraction(start)) if start is not None else ("range", Fraction(0), INF)

    def walk(state, i, depth):
        if i > I:
            surviving.append((state, depth))
            return
        al = vals[i] if i < len(vals) else None
        for r in _combine(state, al):
            for v in _roots(r, q, thr):
                if v[0] == "exact" and not group(v[1]):
                    escapes.append((i, v[1]))
                    continue
                if len(escapes) + len(surviving) > 4096:
                    raise NoConvergence("valuation ledger branches too much")
                walk(v, i + 1, depth + 1)

    walk(first, 0, 0)
    residual = None
    for st, depth in surviving:
        if st[0] == "range" and st[1] == 0 and st[2] != INF:
            # in this branch val(v_-1) = q^(I+1) val(v_I)
            bound = st[2] * q ** (I + 1)
            residual = bound if residual is None else max(residual, bound)
    states = [st for st, _ in surviving]
    if not escapes or any(st[0] == "exact" for st in states):
        return ObstructionReport(None, None, escapes, residual, states)
    idx, ex = min(escapes, key=lambda e: e[0])
    return ObstructionReport(idx, ex, escapes, residual, states)


def _combine(state, al):
    """Possible valuation states of r = a_i + v_(i-1)."""
    if state[0] == "exact":
        x = state[1]
        if al is None or x < al:
            return [("exact", x)]
        if al < x:
            return [("exact", al)]
        return [("range", al, INF)]
    lo, hi = state[1], state[2]
    if al is None or al >= hi:
        return [state]
    if al < lo:
        return [("exact", al)]
    out = [("range", lo, al)] if lo < al else []
    # v above al leaves r = al exactly; v equal to al may cancel
    return out + [("exact", al), ("range", al, INF)]


def _roots(r, q, thr):
    """Valuation states of the roots of X^q + zeta X = r."""
    if r[0] == "exact":
        rho = r[1]
        if rho < thr:
            return [("exact", rho / q)]
        return [("exact", rho - 1), ("exact", Fraction(1, q - 1))]
    lo, hi = r[1], r[2]
    if hi != INF and hi <= thr:
        return [("range", lo / q, hi / q)]
    return [("range", min(lo / q, Fraction(1, q - 1)), INF)]
