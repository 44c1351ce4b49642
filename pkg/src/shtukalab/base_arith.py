"""Exact arithmetic underneath everything else.

* :class:`GFLevel` / :class:`FieldTower` -- finite fields F_{p^N} in
  polynomial representation over Conway polynomials, so that the
  embeddings F_{p^N} -> F_{p^N'} (N | N') are the canonical power maps.
* :class:`RamifiedBase` / :class:`KElem` -- truncated Laurent series in a
  uniformizer w over a finite field.  The element zeta is a fixed series in
  w (by default zeta = w^D).
* :class:`PrecSeries` -- Laurent series in z over either of the two
  coefficient rings above, with an explicit z-precision.
* :class:`ZetaJet` -- truncated expansions in y = z - zeta.

Precision is always explicit: a :class:`KElem` is known modulo w^prec and
a :class:`PrecSeries` modulo z^N.  ``INF`` marks exact data.
"""
from __future__ import annotations

import math
import threading
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (ExtensionBudgetExceeded, InsufficientPrecision,
                     PrecisionLoss, RamificationBudgetExceeded)

INF = float("inf")
MAX_FIELD_SIZE = 1 << 20


# ---------------------------------------------------------------------------
# finite fields

@lru_cache(maxsize=None)
def conway_coeffs(p: int, n: int) -> tuple:
    """Conway polynomial of F_{p^n}, highest coefficient first."""
    import galois
    try:
        poly = galois.conway_poly(p, n)
    except LookupError as exc:
        raise ExtensionBudgetExceeded(f"no Conway polynomial for F_{p}^{n}") from exc
    return tuple(int(c) for c in poly.coeffs)


def _power_table(p: int, n: int) -> np.ndarray:
    """Successive powers of the generator, as digit-encoded ints.

    Multiplication by x is a digit shift followed by reduction with the
    Conway polynomial; building the table this way avoids compiling a
    dedicated field class for every extension.
    """
    coeffs = conway_coeffs(p, n)
    order = p ** n - 1
    if n == 1:
        gen = (-coeffs[1]) % p
        out = np.empty(order, dtype=np.int64)
        v = 1
        for k in range(order):
            out[k] = v
            v = v * gen % p
        return out
    low = [c % p for c in reversed(coeffs[1:])]       # c_0 .. c_{n-1}
    out = np.empty(order, dtype=np.int64)
    if p == 2:
        red = sum(c << i for i, c in enumerate(low))
        top = 1 << n
        v = 1
        for k in range(order):
            out[k] = v
            v <<= 1
            if v & top:
                v ^= top ^ red
        return out
    digits = [1] + [0] * (n - 1)
    weights = [p ** i for i in range(n)]
    for k in range(order):
        out[k] = sum(d * w for d, w in zip(digits, weights))
        lead = digits[-1]
        digits = [0] + digits[:-1]
        if lead:
            digits = [(d - lead * c) % p for d, c in zip(digits, low)]
    return out


class GFLevel:
    """The field F_{p^N}.  Elements are ints 0..p^N-1 read as base-p digit
    vectors (digit i = coefficient of g^i, g a root of the Conway polynomial).
    """

    def __init__(self, p: int, N: int):
        Q = p ** N
        if Q > MAX_FIELD_SIZE:
            raise ExtensionBudgetExceeded(f"F_{p}^{N} exceeds the table budget")
        self.p, self.N, self.Q, self.order = p, N, Q, Q - 1
        exp = _power_table(p, N)
        log = np.full(Q, -1, dtype=np.int64)
        log[exp] = np.arange(Q - 1)
        self.exp = exp.tolist()
        self.log = log.tolist()
        self._np_exp, self._np_log = exp, log
        if p != 2:
            c0 = exp % p
            bumped = exp - c0 + (c0 + 1) % p
            self.zech = log[bumped].tolist()      # log(1 + g^d), -1 for zero
            self._minus_one = (Q - 1) // 2

    def __repr__(self):
        return f"GF({self.p}^{self.N})"

    # arithmetic -----------------------------------------------------------
    def add(self, a: int, b: int) -> int:
        if self.p == 2:
            return a ^ b
        if a == 0:
            return b
        if b == 0:
            return a
        la = self.log[a]
        z = self.zech[(self.log[b] - la) % self.order]
        if z < 0:
            return 0
        return self.exp[(la + z) % self.order]

    def neg(self, a: int) -> int:
        if self.p == 2 or a == 0:
            return a
        return self.exp[(self.log[a] + self._minus_one) % self.order]

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[(self.log[a] + self.log[b]) % self.order]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in a finite field")
        return self.exp[(-self.log[a]) % self.order]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, k: int) -> int:
        if a == 0:
            if k <= 0:
                raise ZeroDivisionError("0 to a non-positive power")
            return 0
        return self.exp[(self.log[a] * k) % self.order]

    def frobp(self, a: int, e: int = 1) -> int:
        """a^(p^e); negative e gives inverse Frobenius."""
        if a == 0:
            return 0
        return self.exp[(self.log[a] * pow(self.p, e % self.N, self.order)) % self.order]

    def from_int(self, n: int) -> int:
        return n % self.p

    def gen(self) -> int:
        return self.exp[1 % self.order] if self.order > 0 else 1

    # vectors ----------------------------------------------------------------
    def digits(self, a: int) -> list:
        p = self.p
        out = []
        for _ in range(self.N):
            out.append(a % p)
            a //= p
        return out

    def from_digits(self, ds) -> int:
        v = 0
        for d in reversed(list(ds)):
            v = v * self.p + int(d) % self.p
        return v

    def mul_matrix(self, c: int) -> np.ndarray:
        """F_p-matrix (N x N) of x -> c*x in the digit basis."""
        cols = [self.digits(self.mul(c, self.p ** i)) for i in range(self.N)]
        return np.array(cols, dtype=np.int64).T.reshape(self.N, self.N)

    def frob_matrix(self, e: int) -> np.ndarray:
        cols = [self.digits(self.frobp(self.p ** i, e)) for i in range(self.N)]
        return np.array(cols, dtype=np.int64).T.reshape(self.N, self.N)

    def embed(self, a: int, target: "GFLevel") -> int:
        if target.N % self.N:
            raise ValueError(f"{self} does not embed into {target}")
        if a == 0:
            return 0
        return target.exp[self.log[a] * (target.order // self.order)]

    def contains(self, a: int, target_sub: "GFLevel") -> bool:
        """Whether the element a of self lies in the subfield target_sub."""
        return a == 0 or (self.log[a] % (self.order // target_sub.order)) == 0

    def restrict(self, a: int, sub: "GFLevel") -> int:
        if a == 0:
            return 0
        step = self.order // sub.order
        la = self.log[a]
        if la % step:
            raise ValueError("element not in the subfield")
        return sub.exp[la // step]

    # text -------------------------------------------------------------------
    def fmt(self, a: int) -> str:
        if self.N == 1:
            return str(a)
        terms = []
        for i, d in reversed(list(enumerate(self.digits(a)))):
            if d == 0:
                continue
            mono = "1" if i == 0 else ("g" if i == 1 else f"g^{i}")
            if d == 1:
                terms.append(mono)
            else:
                terms.append(f"{d}" if i == 0 else f"{d}*{mono}")
        return "+".join(terms) if terms else "0"

    def parse(self, text: str) -> int:
        """Inverse of :meth:`fmt` (a sum of c*g^k terms)."""
        text = text.replace(" ", "")
        if text in ("", "0"):
            return 0
        ds = [0] * self.N
        for term in text.split("+"):
            coef, mono = 1, term
            if "*" in term:
                c, mono = term.split("*", 1)
                coef = int(c)
            if mono.startswith("g"):
                k = int(mono[2:]) if mono.startswith("g^") else 1
            else:
                coef, k = int(mono) * (coef if "*" in term else 1), 0
            if k >= self.N:
                raise ValueError(f"g^{k} is not reduced in {self}")
            ds[k] = (ds[k] + coef) % self.p
        return self.from_digits(ds)


_LEVELS: dict = {}
_LEVEL_LOCK = threading.Lock()


def gf(p: int, N: int) -> GFLevel:
    key = (p, N)
    lev = _LEVELS.get(key)
    if lev is None:
        with _LEVEL_LOCK:
            lev = _LEVELS.get(key)
            if lev is None:
                lev = GFLevel(p, N)
                _LEVELS[key] = lev
    return lev


class FieldTower:
    """The family F_{q^m}, q = p^f, with compatible embeddings."""

    def __init__(self, p: int, f: int = 1):
        self.p, self.f, self.q = p, f, p ** f

    @classmethod
    def for_q(cls, q: int) -> "FieldTower":
        for p in range(2, q + 1):
            if q % p == 0:
                f = round(math.log(q, p))
                if p ** f != q:
                    raise ValueError(f"{q} is not a prime power")
                return cls(p, f)
        raise ValueError(f"{q} is not a prime power")

    def __repr__(self):
        return f"FieldTower(q={self.q})"

    def __eq__(self, other):
        return isinstance(other, FieldTower) and (self.p, self.f) == (other.p, other.f)

    def __hash__(self):
        return hash((self.p, self.f))

    def level(self, m: int) -> GFLevel:
        return gf(self.p, self.f * m)

    def frob(self, lev: GFLevel, a: int, k: int = 1) -> int:
        """a^(q^k)."""
        return lev.frobp(a, self.f * k)

    def embed(self, a: int, m: int, m2: int) -> int:
        return self.level(m).embed(a, self.level(m2))


def artin_schreier_solve(c: int, tower: FieldTower, m: int):
    """Solve y^q - y = c for c in F_{q^m}.

    Returns ``(y, m2)`` with y in F_{q^m2} and m2 the least multiple of m
    over which a solution exists.
    """
    src = tower.level(m)
    for j in range(1, tower.p + 1):
        m2 = m * j
        lev = tower.level(m2)
        cc = src.embed(c, lev)
        A = (lev.frob_matrix(tower.f) - np.eye(lev.N, dtype=np.int64)) % lev.p
        x = fp_solve(A, np.array(lev.digits(cc)), lev.p)
        if x is not None:
            return lev.from_digits(x), m2
    raise AssertionError("Artin-Schreier equation unsolvable in degree p")


def qth_root(a: int, tower: FieldTower, m: int) -> int:
    """The unique y in F_{q^m} with y^q = a."""
    lev = tower.level(m)
    return lev.frobp(a, -tower.f)


# ---------------------------------------------------------------------------
# linear algebra over F_p (galois does the elimination)

@lru_cache(maxsize=None)
def _gfp(p: int):
    import galois
    return galois.GF(p)


def fp_rref(M: np.ndarray, p: int):
    """Row-reduced echelon form and pivot columns."""
    M = np.asarray(M, dtype=np.int64) % p
    if M.size == 0:
        return M, []
    R = np.asarray(_gfp(p)(M).row_reduce().view(np.ndarray), dtype=np.int64)
    pivots = []
    for row in R:
        nz = np.flatnonzero(row)
        if nz.size == 0:
            break
        pivots.append(int(nz[0]))
    return R[:len(pivots)], pivots


def fp_rank(M: np.ndarray, p: int) -> int:
    return len(fp_rref(M, p)[1])


def fp_nullspace(M: np.ndarray, p: int) -> np.ndarray:
    """Basis (as rows) of {x : M x = 0}."""
    M = np.asarray(M, dtype=np.int64) % p
    ncols = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(ncols, dtype=np.int64)
    R, pivots = fp_rref(M, p)
    free = [j for j in range(ncols) if j not in set(pivots)]
    basis = np.zeros((len(free), ncols), dtype=np.int64)
    for k, j in enumerate(free):
        basis[k, j] = 1
        for r, pc in enumerate(pivots):
            basis[k, pc] = (-R[r, j]) % p
    return basis


def fp_solve(M: np.ndarray, b: np.ndarray, p: int):
    """One solution of M x = b, or None."""
    M = np.asarray(M, dtype=np.int64) % p
    b = np.asarray(b, dtype=np.int64).reshape(-1, 1) % p
    aug = np.hstack([M, b])
    R, pivots = fp_rref(aug, p)
    ncols = M.shape[1]
    if ncols in pivots:
        return None
    x = np.zeros(ncols, dtype=np.int64)
    for r, pc in enumerate(pivots):
        x[pc] = R[r, ncols]
    return x


# ---------------------------------------------------------------------------
# ramified coefficient fields

class RamifiedBase:
    """F_{q^m}((w)) truncated, with a distinguished element zeta.

    By default zeta = w^D, i.e. w = zeta^(1/D).  Other bases arise when a
    wild extension is adjoined; zeta is then stored as a series in the new
    uniformizer.  ``P`` is the working precision in w-units used whenever an
    exact element has to be inverted or a limit truncated.
    """

    def __init__(self, tower: FieldTower, m: int = 1, D: int = 1, P: int = 40,
                 zeta: dict | None = None, zeta_prec=INF, q_divisible: bool = False,
                 label: str | None = None):
        self.tower, self.m = tower, m
        self.p, self.f, self.q = tower.p, tower.f, tower.q
        self.F = tower.level(m)
        self.P = int(P)
        self.q_divisible = q_divisible
        if zeta is None:
            zeta = {D: 1}
            self.standard = True
        else:
            self.standard = False
        self.zeta = KElem(self, dict(zeta), zeta_prec)
        self.E = self.zeta.valuation()
        self.D = self.E
        self.label = label
        self._zeta_pows = {0: self.one(), 1: self.zeta}
        self._children = {}

    def __repr__(self):
        kind = f"zeta=w^{self.D}" if self.standard else f"zeta=series(val {self.E})"
        flag = ", q-divisible" if self.q_divisible else ""
        return f"RamifiedBase(q={self.q}, m={self.m}, {kind}, P={self.P}{flag})"

    # element constructors
    def elem(self, terms: dict, prec=INF) -> "KElem":
        return KElem(self, terms, prec)

    def const(self, c: int) -> "KElem":
        return KElem(self, {0: c} if c else {}, INF)

    def from_int(self, n: int) -> "KElem":
        return self.const(n % self.p)

    def zero(self, prec=INF) -> "KElem":
        return KElem(self, {}, prec)

    def one(self) -> "KElem":
        return KElem(self, {0: 1}, INF)

    def w(self, k: int = 1, c: int = 1) -> "KElem":
        return KElem(self, {k: c}, INF)

    def zeta_pow(self, k: int) -> "KElem":
        got = self._zeta_pows.get(k)
        if got is None:
            if k < 0:
                got = self.zeta_pow(-k).inv()
            else:
                half = self.zeta_pow(k // 2)
                got = half * half
                if k % 2:
                    got = got * self.zeta
            self._zeta_pows[k] = got
        return got

    def zeta_monomial(self, e: Fraction, c: int = 1) -> "KElem":
        """c * zeta^e for rational e with e*D integral (standard bases)."""
        if not self.standard:
            raise ValueError("rational zeta powers need a standard base")
        a = Fraction(e) * self.D
        if a.denominator != 1:
            raise RamificationBudgetExceeded(f"zeta^{e} needs ramification beyond D={self.D}")
        return KElem(self, {int(a): c}, INF)

    def val(self, x: "KElem"):
        """Valuation in zeta-units (Fraction), None for zero at precision."""
        v = x.valuation()
        return None if v is None else Fraction(v, self.E)

    # ring protocol used by PrecSeries
    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def inv(self, a):
        return a.inv()

    def frob(self, a, k=1):
        return a.frob(k)

    def is_zero(self, a):
        return not a.t and a.prec == INF

    def coerce(self, c):
        if isinstance(c, KElem):
            return c if c.B is self else self.lift(c)
        return self.const(c)

    # base changes -----------------------------------------------------------
    def extend_level(self, m2: int) -> "RamifiedBase":
        if m2 == self.m:
            return self
        if m2 % self.m:
            raise ValueError("level must be a multiple of the current one")
        key = ("level", m2)
        if key not in self._children:
            F2 = self.tower.level(m2)
            zt = {e: self.F.embed(c, F2) for e, c in self.zeta.t.items()}
            B2 = RamifiedBase(self.tower, m2, P=self.P, zeta=zt, zeta_prec=self.zeta.prec,
                              q_divisible=self.q_divisible)
            B2.standard = self.standard
            B2._parent = (self, "level", None)
            self._children[key] = B2
        return self._children[key]

    def tame(self, e: int) -> "RamifiedBase":
        """Adjoin an e-th root of w: the new uniformizer w' has w = w'^e."""
        if e == 1:
            return self
        key = ("tame", e)
        if key not in self._children:
            zt = {a * e: c for a, c in self.zeta.t.items()}
            B2 = RamifiedBase(self.tower, self.m, P=self.P * e, zeta=zt,
                              zeta_prec=self.zeta.prec * e, q_divisible=self.q_divisible)
            B2.standard = self.standard
            B2._parent = (self, "tame", e)
            self._children[key] = B2
        return self._children[key]

    def lift(self, x: "KElem") -> "KElem":
        """Map an element of an ancestor base into this base."""
        if x.B is self:
            return x
        chain = []
        B = self
        while B is not x.B:
            par = getattr(B, "_parent", None)
            if par is None:
                raise ValueError("element does not come from an ancestor base")
            chain.append(B)
            B = par[0]
        for B in reversed(chain):
            parent, kind, data = B._parent
            if kind == "level":
                x = KElem(B, {e: parent.F.embed(c, B.F) for e, c in x.t.items()}, x.prec)
            elif kind == "tame":
                x = KElem(B, {a * data: c for a, c in x.t.items()}, x.prec * data)
            else:                                   # substitution w_parent -> series
                x = substitute(x, B, data)
        return x


def common_base(B1: RamifiedBase, B2: RamifiedBase) -> RamifiedBase:
    """Return whichever base descends from the other."""
    for a, b in ((B1, B2), (B2, B1)):
        cur = a
        while cur is not None:
            if cur is b:
                return a
            par = getattr(cur, "_parent", None)
            cur = par[0] if par else None
    raise ValueError("bases are unrelated")


class KElem:
    """sum c_a w^a known modulo w^prec (prec = INF for exact)."""

    __slots__ = ("B", "t", "prec")

    def __init__(self, B: RamifiedBase, t: dict, prec=INF):
        self.B = B
        self.prec = prec
        if prec != INF:
            t = {e: c for e, c in t.items() if c and e < prec}
        else:
            t = {e: c for e, c in t.items() if c}
        self.t = t

    # basic data
    def valuation(self):
        return min(self.t) if self.t else None

    def lowval(self):
        return min(self.t) if self.t else self.prec

    def is_zero(self) -> bool:
        return not self.t

    def is_exact(self) -> bool:
        return self.prec == INF

    def lead(self):
        v = self.valuation()
        return None if v is None else (v, self.t[v])

    def __repr__(self):
        return f"KElem({fmt_kelem(self)})"

    def __eq__(self, other):
        if isinstance(other, int) and other == 0:
            return not self.t
        if not isinstance(other, KElem):
            return NotImplemented
        return self.t == other.t and self.prec == other.prec

    def __hash__(self):
        return hash((tuple(sorted(self.t.items())), self.prec))

    def same(self, other: "KElem") -> bool:
        """Equality at the common precision."""
        return (self - other).is_zero()

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, KElem):
            if other.B is not self.B:
                B = common_base(self.B, other.B)
                return B.lift(self), B.lift(other)
            return self, other
        if isinstance(other, int):
            return self, self.B.from_int(other)
        return NotImplemented

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return pair
        a, b = pair
        F = a.B.F
        t = dict(a.t)
        for e, c in b.t.items():
            t[e] = F.add(t.get(e, 0), c)
        return KElem(a.B, t, min(a.prec, b.prec))

    __radd__ = __add__

    def __neg__(self):
        F = self.B.F
        return KElem(self.B, {e: F.neg(c) for e, c in self.t.items()}, self.prec)

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return pair
        a, b = pair
        return a + (-b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return pair
        a, b = pair
        if (not a.t and a.prec == INF) or (not b.t and b.prec == INF):
            return KElem(a.B, {}, INF)
        prec = min(a.prec + b.lowval(), b.prec + a.lowval())
        F = a.B.F
        mul, add = F.mul, F.add
        t = {}
        for ea, ca in a.t.items():
            for eb, cb in b.t.items():
                e = ea + eb
                if e >= prec:
                    continue
                t[e] = add(t.get(e, 0), mul(ca, cb))
        return KElem(a.B, t, prec)

    __rmul__ = __mul__

    def scale(self, c: int) -> "KElem":
        """Multiply by a residue-field element."""
        F = self.B.F
        if c == 0:
            return KElem(self.B, {}, INF)
        return KElem(self.B, {e: F.mul(c, x) for e, x in self.t.items()}, self.prec)

    def shift(self, k: int) -> "KElem":
        """Multiply by w^k."""
        return KElem(self.B, {e + k: c for e, c in self.t.items()}, self.prec + k)

    def inv(self, rel: int | None = None) -> "KElem":
        if not self.t:
            raise InsufficientPrecision("inverse of an element that is zero at precision")
        B, F = self.B, self.B.F
        v = min(self.t)
        c0inv = F.inv(self.t[v])
        if len(self.t) == 1 and self.prec == INF:
            return KElem(B, {-v: c0inv}, INF)
        R = self.prec - v if self.prec != INF else (rel if rel is not None else B.P)
        r = {e - v: F.mul(c, c0inv) for e, c in self.t.items() if e != v and e - v < R}
        w = [0] * int(R)
        w[0] = 1
        items = sorted(r.items())
        for n in range(1, int(R)):
            acc = 0
            for j, rj in items:
                if j > n:
                    break
                if w[n - j]:
                    acc = F.add(acc, F.mul(rj, w[n - j]))
            w[n] = F.neg(acc)
        t = {n - v: F.mul(c, c0inv) for n, c in enumerate(w) if c}
        return KElem(B, t, int(R) - v)

    def __truediv__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return pair
        a, b = pair
        return a * b.inv()

    def __pow__(self, n: int):
        if n < 0:
            return self.inv() ** (-n)
        result = self.B.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def frob(self, k: int = 1) -> "KElem":
        """x^(q^k) (k may be negative when all exponents allow it)."""
        if k == 0:
            return self
        B = self.B
        if k < 0:
            x = self
            for _ in range(-k):
                x = x.qth_root()
            return x
        Q = B.q ** k
        F = B.F
        return KElem(B, {e * Q: F.frobp(c, B.f * k) for e, c in self.t.items()},
                     self.prec * Q)

    def qth_root(self) -> "KElem":
        B, q = self.B, self.B.q
        if any(e % q for e in self.t):
            raise RamificationBudgetExceeded("q-th root needs further ramification")
        prec = self.prec if self.prec == INF else -(-self.prec // q)
        return KElem(B, {e // q: B.F.frobp(c, -B.f) for e, c in self.t.items()}, prec)

    def truncate(self, prec) -> "KElem":
        return KElem(self.B, self.t, min(self.prec, prec))

    def residue(self) -> int:
        """Constant coefficient of an integral element."""
        if self.t and min(self.t) < 0:
            raise ValueError("element is not integral")
        if self.prec <= 0:
            raise InsufficientPrecision("residue not determined")
        return self.t.get(0, 0)


def fmt_kelem(x: KElem) -> str:
    F = x.B.F
    parts = []
    for e in sorted(x.t):
        c = F.fmt(x.t[e])
        c = c if "+" not in c else f"({c})"
        if e == 0:
            parts.append(c)
        else:
            mono = "w" if e == 1 else f"w^{e}"
            parts.append(mono if c == "1" else f"{c}*{mono}")
    if x.prec != INF:
        parts.append(f"O(w^{x.prec})")
    return " + ".join(parts) if parts else "0"


def kelem_from_terms(B: RamifiedBase, text: str) -> KElem:
    """Parse the output of :func:`fmt_kelem`."""
    text = text.strip()
    prec = INF
    t = {}
    if text == "0":
        return B.zero()
    for part in [s.strip() for s in _split_top(text)]:
        if part.startswith("O(w^"):
            prec = int(part[4:-1])
            continue
        coef, mono = "1", part
        if "*w" in part:
            coef, mono = part.rsplit("*", 1)
        elif not part.startswith("w"):
            coef, mono = part, ""
        coef = coef.strip("()")
        if mono == "":
            e = 0
        elif mono == "w":
            e = 1
        else:
            e = int(mono[2:])
        t[e] = B.F.add(t.get(e, 0), B.F.parse(coef))
    return KElem(B, t, prec)


def _split_top(text: str):
    depth, cur, out = 0, [], []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and text.startswith(" + ", i):
            out.append("".join(cur))
            cur = []
            i += 3
            continue
        cur.append(ch)
        i += 1
    out.append("".join(cur))
    return out


def substitute(x: KElem, B2: RamifiedBase, w_img: KElem) -> KElem:
    """x(w) with w replaced by the series w_img of B2 (Horner scheme)."""
    if not x.t:
        vw = w_img.valuation()
        return B2.zero(x.prec * vw if x.prec != INF else INF)
    vw = w_img.valuation()
    w_img = w_img.truncate(B2.P + vw)
    lo, hi = min(x.t), max(x.t)
    F1, F2 = x.B.F, B2.F
    acc = B2.zero()
    for a in range(hi, lo - 1, -1):
        acc = acc * w_img
        c = x.t.get(a, 0)
        if c:
            acc = acc + B2.const(F1.embed(c, F2))
    acc = acc * (w_img ** lo) if lo else acc
    if x.prec != INF:
        acc = acc.truncate(x.prec * vw)
    return acc


# ---------------------------------------------------------------------------
# Laurent series in z

def _coeff_ring(R):
    return R


class PrecSeries:
    """sum_i c_i z^i known for i < N (N = INF for exact Laurent polynomials).

    The coefficient ring ``R`` is a :class:`GFLevel` (coefficients are ints)
    or a :class:`RamifiedBase` (coefficients are :class:`KElem`).
    ``tail_val`` is a lower bound for the w-valuation of unknown
    coefficients (0: the series is integral beyond the stored range).
    """

    __slots__ = ("R", "c", "N")

    def __init__(self, R, coeffs: dict, N=INF):
        self.R = R
        self.N = N
        if isinstance(R, GFLevel):
            self.c = {i: v for i, v in coeffs.items() if v and i < N}
        else:
            self.c = {i: v for i, v in coeffs.items()
                      if i < N and (v.t or v.prec != INF)}

    # constructors
    @classmethod
    def zero(cls, R, N=INF):
        return cls(R, {}, N)

    @classmethod
    def one(cls, R):
        return cls(R, {0: _one(R)})

    @classmethod
    def monomial(cls, R, k: int, c=None):
        return cls(R, {k: _one(R) if c is None else c})

    @classmethod
    def const(cls, R, c):
        return cls(R, {0: c})

    # inspection
    def __repr__(self):
        return f"PrecSeries({fmt_series(self)})"

    def is_exact(self):
        return self.N == INF and (isinstance(self.R, GFLevel)
                                  or all(v.prec == INF for v in self.c.values()))

    def _nz(self, v):
        return v != 0 if isinstance(self.R, GFLevel) else bool(v.t)

    def ord(self):
        """Least exponent with a coefficient known to be nonzero (None if none)."""
        ks = [i for i, v in self.c.items() if self._nz(v)]
        return min(ks) if ks else None

    def low(self):
        """Least stored exponent (a bound usable for precision estimates)."""
        if self.c:
            return min(self.c)
        return self.N if self.N != INF else INF

    def lead_is_exact(self) -> bool:
        o = self.ord()
        if o is None:
            return False
        if isinstance(self.R, GFLevel):
            return True
        return all(i >= o for i, v in self.c.items() if not v.t)

    def coeff(self, i: int):
        if i >= self.N:
            raise InsufficientPrecision(f"coefficient of z^{i} beyond z-precision {self.N}")
        v = self.c.get(i)
        if v is None:
            return 0 if isinstance(self.R, GFLevel) else self.R.zero()
        return v

    def is_zero(self):
        return not any(self._nz(v) for v in self.c.values())

    def trunc(self, N) -> "PrecSeries":
        return PrecSeries(self.R, self.c, min(self.N, N))

    def equals(self, other, N=INF) -> bool:
        d = (self - other).trunc(N)
        return d.is_zero()

    # arithmetic
    def __add__(self, other):
        other = _as_series(self.R, other)
        R = self.R
        N = min(self.N, other.N)
        c = dict(self.c)
        for i, v in other.c.items():
            c[i] = R.add(c[i], v) if i in c else v
        return PrecSeries(R, c, N)

    __radd__ = __add__

    def __neg__(self):
        R = self.R
        return PrecSeries(R, {i: R.neg(v) for i, v in self.c.items()}, self.N)

    def __sub__(self, other):
        return self + (-_as_series(self.R, other))

    def __rsub__(self, other):
        return _as_series(self.R, other) - self

    def __mul__(self, other):
        if not isinstance(other, PrecSeries):
            return self.scale(other)
        R = self.R
        if other.R is not R:
            if isinstance(R, GFLevel) and not isinstance(other.R, GFLevel):
                return to_base(self, other.R) * other
            if isinstance(other.R, GFLevel) and not isinstance(R, GFLevel):
                return self * to_base(other, R)
            if isinstance(R, RamifiedBase) and isinstance(other.R, RamifiedBase):
                B = common_base(R, other.R)
                return lift_series(self, B) * lift_series(other, B)
            raise ValueError("incompatible coefficient rings")
        if not self.c and self.N == INF:
            return PrecSeries(R, {}, INF)
        if not other.c and other.N == INF:
            return PrecSeries(R, {}, INF)
        N = min(self.N + other.low(), other.N + self.low())
        if isinstance(R, GFLevel) and R.N == 1 and len(self.c) * len(other.c) > 64:
            return _prime_field_mul(self, other, N)
        add, mul = R.add, R.mul
        c = {}
        for i, a in self.c.items():
            for j, b in other.c.items():
                k = i + j
                if k >= N:
                    continue
                prod = mul(a, b)
                c[k] = add(c[k], prod) if k in c else prod
        return PrecSeries(R, c, N)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, a) -> "PrecSeries":
        R = self.R
        if isinstance(R, GFLevel):
            if a == 0:
                return PrecSeries(R, {}, INF)
            return PrecSeries(R, {i: R.mul(a, v) for i, v in self.c.items()}, self.N)
        a = R.coerce(a)
        return PrecSeries(R, {i: a * v for i, v in self.c.items()}, self.N)

    def shift(self, k: int) -> "PrecSeries":
        """Multiply by z^k."""
        return PrecSeries(self.R, {i + k: v for i, v in self.c.items()}, self.N + k)

    def frob(self, k: int = 1) -> "PrecSeries":
        """Apply sigma^k coefficientwise (z fixed)."""
        R = self.R
        if isinstance(R, GFLevel):
            raise TypeError("use frob_ff with the tower's q for finite-field series")
        return PrecSeries(R, {i: v.frob(k) for i, v in self.c.items()}, self.N)

    def frob_ff(self, f: int, k: int = 1) -> "PrecSeries":
        R = self.R
        return PrecSeries(R, {i: R.frobp(v, f * k) for i, v in self.c.items()}, self.N)

    def inverse(self, zprec: int = 40) -> "PrecSeries":
        """1/self in the Laurent series ring (lowest term must be a unit).

        Exact non-monomial inputs are truncated at relative z-precision zprec.
        """
        o = self.ord()
        if o is None:
            raise PrecisionLoss("inverse of a series that is zero at precision")
        if not self.lead_is_exact():
            raise PrecisionLoss("leading coefficient not determined")
        R = self.R
        a0inv = R.inv(self.c[o])
        rel = self.N - o if self.N != INF else INF
        if rel == INF and len([v for v in self.c.values() if self._nz(v)]) == 1:
            return PrecSeries(R, {-o: a0inv}, INF)
        if rel == INF:
            rel = zprec
        rel = int(rel)
        r = {i - o: R.mul(v, a0inv) for i, v in self.c.items() if i > o and i - o < rel}
        items = sorted(r.items())
        w = [None] * rel
        w[0] = _one(R)
        for n in range(1, rel):
            acc = None
            for j, rj in items:
                if j > n:
                    break
                prod = R.mul(rj, w[n - j])
                acc = prod if acc is None else R.add(acc, prod)
            w[n] = R.neg(acc) if acc is not None else _zero(R)
        c = {n - o: R.mul(v, a0inv) for n, v in enumerate(w)}
        return PrecSeries(R, c, rel - o)

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = PrecSeries.one(self.R)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result


def _prime_field_mul(a: PrecSeries, b: PrecSeries, N) -> PrecSeries:
    # Over F_p the digits are the residues themselves, so convolve densely.
    p = a.R.p
    la, lb = min(a.c), min(b.c)
    va = np.zeros(max(a.c) - la + 1, dtype=np.int64)
    vb = np.zeros(max(b.c) - lb + 1, dtype=np.int64)
    for i, v in a.c.items():
        va[i - la] = v
    for i, v in b.c.items():
        vb[i - lb] = v
    prod = np.convolve(va, vb) % p
    nz = np.flatnonzero(prod)
    base = la + lb
    return PrecSeries(a.R, {int(k) + base: int(prod[k]) for k in nz}, N)


def _one(R):
    return 1 if isinstance(R, GFLevel) else R.one()


def _zero(R):
    return 0 if isinstance(R, GFLevel) else R.zero()


def _as_series(R, x) -> PrecSeries:
    if isinstance(x, PrecSeries):
        if x.R is R:
            return x
        if isinstance(x.R, GFLevel) and isinstance(R, RamifiedBase):
            return to_base(x, R)
        if isinstance(R, RamifiedBase) and isinstance(x.R, RamifiedBase):
            return lift_series(x, R)
        raise ValueError("incompatible coefficient rings")
    if isinstance(x, int) and isinstance(R, GFLevel):
        return PrecSeries(R, {0: x % R.p} if x % R.p else {})
    if isinstance(R, RamifiedBase):
        return PrecSeries(R, {0: R.coerce(x)})
    raise TypeError(f"cannot coerce {x!r}")


def to_base(s: PrecSeries, B: RamifiedBase) -> PrecSeries:
    """View a finite-field series as a series over the ramified base B."""
    if s.R is B:
        return s
    if isinstance(s.R, RamifiedBase):
        return lift_series(s, B)
    F = s.R
    return PrecSeries(B, {i: B.const(F.embed(v, B.F)) for i, v in s.c.items()}, s.N)


def lift_series(s: PrecSeries, B: RamifiedBase) -> PrecSeries:
    if s.R is B:
        return s
    return PrecSeries(B, {i: B.lift(v) for i, v in s.c.items()}, s.N)


def fmt_series(s: PrecSeries) -> str:
    R = s.R
    parts = []
    for i in sorted(s.c):
        v = s.c[i]
        cs = R.fmt(v) if isinstance(R, GFLevel) else fmt_kelem(v)
        if cs in ("0",) and isinstance(R, GFLevel):
            continue
        mono = "" if i == 0 else ("z" if i == 1 else f"z^{i}")
        if not mono:
            parts.append(cs if ("+" not in cs) else f"({cs})")
        elif cs == "1":
            parts.append(mono)
        else:
            parts.append(f"({cs})*{mono}")
    if s.N != INF:
        parts.append(f"O(z^{s.N})")
    return " + ".join(parts) if parts else "0"


def series_from_dict(R, d: dict, N=INF) -> PrecSeries:
    return PrecSeries(R, dict(d), N)


# ---------------------------------------------------------------------------
# matrices of series (lists of lists)

def mat_identity(R, n):
    return [[PrecSeries.one(R) if i == j else PrecSeries.zero(R) for j in range(n)]
            for i in range(n)]


def mat_zero(R, r, c):
    return [[PrecSeries.zero(R) for _ in range(c)] for _ in range(r)]


def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = A[i][0] * B[0][j]
            for l in range(1, k):
                acc = acc + A[i][l] * B[l][j]
            row.append(acc)
        out.append(row)
    return out


def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(A, c):
    return [[a * c if isinstance(c, PrecSeries) else a.scale(c) for a in row] for row in A]


def mat_map(A, fn):
    return [[fn(a) for a in row] for row in A]


def mat_trunc(A, N):
    return mat_map(A, lambda a: a.trunc(N))


def mat_transpose(A):
    return [list(col) for col in zip(*A)]


def mat_det(A):
    """Determinant by cofactor expansion with memoised minors (n <= 8)."""
    n = len(A)
    if n == 0:
        raise ValueError("empty matrix")
    memo = {}

    def minor(rows: tuple, cols: tuple):
        if len(rows) == 1:
            return A[rows[0]][cols[0]]
        key = (rows, cols)
        if key in memo:
            return memo[key]
        r0, rest = rows[0], rows[1:]
        acc = None
        for k, c in enumerate(cols):
            a = A[r0][c]
            if a.is_zero() and a.N == INF:
                continue
            term = a * minor(rest, cols[:k] + cols[k + 1:])
            if k % 2:
                term = -term
            acc = term if acc is None else acc + term
        if acc is None:
            acc = PrecSeries.zero(A[0][0].R)
        memo[key] = acc
        return acc

    return minor(tuple(range(n)), tuple(range(n)))


def mat_minor(A, rows, cols):
    return mat_det([[A[i][j] for j in cols] for i in rows])


def mat_adjugate(A):
    n = len(A)
    if n == 1:
        return [[PrecSeries.one(A[0][0].R)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            rows = [r for r in range(n) if r != j]
            cols = [c for c in range(n) if c != i]
            m = mat_minor(A, rows, cols)
            adj[i][j] = -m if (i + j) % 2 else m
    return adj


def mat_inverse(A, zprec: int = 40):
    d = mat_det(A)
    dinv = d.inverse(zprec)
    return mat_map(mat_adjugate(A), lambda a: a * dinv)


def mat_kron(A, B):
    out = []
    for ra in A:
        for rb in B:
            out.append([a * b for a in ra for b in rb])
    return out


def mat_block_diag(blocks):
    R = blocks[0][0][0].R
    n = sum(len(b) for b in blocks)
    M = mat_zero(R, n, n)
    o = 0
    for b in blocks:
        k = len(b)
        for i in range(k):
            for j in range(k):
                M[o + i][o + j] = b[i][j]
        o += k
    return M


def mat_ord(A):
    """Least z-order over all entries (None if all vanish at precision)."""
    ords = [a.ord() for row in A for a in row]
    ords = [o for o in ords if o is not None]
    return min(ords) if ords else None


def mat_zprec(A):
    return min(a.N for row in A for a in row)


# ---------------------------------------------------------------------------
# binomials, re-expansion at zeta, jets

def binom_mod_p(n: int, k: int, p: int) -> int:
    """binom(n, k) mod p for any integer n (Lucas' theorem)."""
    if k < 0:
        return 0
    if n < 0:
        sign = -1 if k % 2 else 1
        return (sign * binom_mod_p(-n + k - 1, k, p)) % p
    res = 1
    while n or k:
        a, b = n % p, k % p
        if b > a:
            return 0
        res = res * math.comb(a, b) % p
        n //= p
        k //= p
    return res


class ZetaJet:
    """sum_{rho<E} y_rho (z - a)^rho over a ramified base (a = expansion point)."""

    __slots__ = ("B", "E", "c")

    def __init__(self, B: RamifiedBase, coeffs):
        self.B = B
        self.c = list(coeffs)
        self.E = len(self.c)

    @classmethod
    def const(cls, B, x, E):
        return cls(B, [B.coerce(x)] + [B.zero() for _ in range(E - 1)])

    @classmethod
    def y_power(cls, B, k, E):
        return cls(B, [B.one() if i == k else B.zero() for i in range(E)])

    def __repr__(self):
        return "ZetaJet[" + ", ".join(fmt_kelem(x) for x in self.c) + "]"

    def __add__(self, other):
        return ZetaJet(self.B, [a + b for a, b in zip(self.c, other.c)])

    def __sub__(self, other):
        return ZetaJet(self.B, [a - b for a, b in zip(self.c, other.c)])

    def __neg__(self):
        return ZetaJet(self.B, [-a for a in self.c])

    def __mul__(self, other):
        if not isinstance(other, ZetaJet):
            x = self.B.coerce(other)
            return ZetaJet(self.B, [a * x for a in self.c])
        E = min(self.E, other.E)
        out = [self.B.zero() for _ in range(E)]
        for i in range(E):
            a = self.c[i]
            if not a.t and a.prec == INF:
                continue
            for j in range(E - i):
                b = other.c[j]
                if not b.t and b.prec == INF:
                    continue
                out[i + j] = out[i + j] + a * b
        return ZetaJet(self.B, out)

    __rmul__ = __mul__

    def ord(self):
        """(z-a)-order: first coefficient known nonzero; E if all vanish."""
        for i, a in enumerate(self.c):
            if a.t:
                return i
        return self.E

    def ord_is_certain(self) -> bool:
        o = self.ord()
        return all(a.prec == INF for a in self.c[:o])

    def is_zero(self):
        return all(not a.t for a in self.c)

    def inverse(self) -> "ZetaJet":
        if not self.c[0].t:
            raise InsufficientPrecision("jet is not a unit at precision")
        u0 = self.c[0].inv()
        out = [u0]
        for n in range(1, self.E):
            acc = self.B.zero()
            for j in range(1, n + 1):
                acc = acc + self.c[j] * out[n - j]
            out.append(-(acc * u0))
        return ZetaJet(self.B, out)

    def shift_up(self, k: int) -> "ZetaJet":
        """Multiply by y^k (k >= 0), truncating at E."""
        zero = self.B.zero()
        return ZetaJet(self.B, ([zero] * k + self.c)[:self.E])

    def shift_down(self, k: int) -> "ZetaJet":
        """Divide by y^k; the first k coefficients must vanish."""
        if any(a.t for a in self.c[:k]):
            raise ValueError("jet not divisible by y^k")
        zero = self.B.zero(INF)
        return ZetaJet(self.B, self.c[k:] + [zero] * k)

    def truncate(self, E: int) -> "ZetaJet":
        return ZetaJet(self.B, self.c[:E])

    def extend(self, E: int) -> "ZetaJet":
        """Pad with unknown coefficients (precision 0 is not claimed: O(w^-inf))."""
        return ZetaJet(self.B, self.c + [self.B.zero() for _ in range(E - self.E)])

    def min_prec(self):
        return min(a.prec for a in self.c)


def reexpand_at(f: PrecSeries, point: KElem, E: int, tail_val: int = 0) -> ZetaJet:
    """Image of f under z -> point + y, modulo y^E.

    Coefficient rho is sum_i binom(i, rho) f_i point^(i - rho).  When f is
    only known modulo z^N, the unknown tail is assumed to have coefficients
    of w-valuation >= tail_val and its contribution is folded into the
    precision.
    """
    B = point.B
    if isinstance(f.R, GFLevel):
        f = to_base(f, B)
    elif f.R is not B:
        B = common_base(f.R, B)
        f = lift_series(f, B)
        point = B.lift(point)
    vpt = point.valuation()
    if vpt is None:
        raise InsufficientPrecision("expansion point is zero at precision")
    p = B.p
    powers = {}

    def pt_pow(k):
        got = powers.get(k)
        if got is None:
            if point is B.zeta or (B.standard and point.t == B.zeta.t and point.prec == INF):
                got = B.zeta_pow(k)
            else:
                got = point ** k
            powers[k] = got
        return got

    out = []
    for rho in range(E):
        acc = B.zero()
        for i, b in f.c.items():
            bn = binom_mod_p(i, rho, p)
            if bn == 0:
                continue
            term = b * pt_pow(i - rho)
            if bn != 1:
                term = term.scale(B.F.from_int(bn))
            acc = acc + term
        if f.N != INF:
            acc = acc.truncate(tail_val + (f.N - rho) * vpt)
        if not acc.t and acc.prec != INF and acc.prec < 0:
            raise InsufficientPrecision(f"jet coefficient {rho} not determined by stored data")
        out.append(acc)
    return ZetaJet(B, out)


def reexpand_at_zeta(f: PrecSeries, E: int, B: RamifiedBase | None = None,
                     tail_val: int = 0) -> ZetaJet:
    if B is None:
        if isinstance(f.R, GFLevel):
            raise ValueError("pass the ramified base for finite-field series")
        B = f.R
    return reexpand_at(f, B.zeta, E, tail_val)


# ---------------------------------------------------------------------------
# norms, t, f_alpha, Frobenius chain

def norm_r(f: PrecSeries, r, tail_val: int = 0):
    """Exponent (in zeta-units) of ||f||_r = max |f_i| |zeta|^(r i).

    Returns ``(value, exact)``; ``value`` is the minimum over stored i of
    val(f_i) + r*i (None for the zero series) and ``exact`` is False when an
    untracked tail or a precision-limited coefficient could be smaller.
    """
    r = Fraction(r)
    if r <= 0:
        raise ValueError("r must be positive")
    B = f.R
    best = None
    bound = None
    for i, v in f.c.items():
        if v.t:
            val = Fraction(min(v.t), B.E) + r * i
            best = val if best is None or val < best else best
        if v.prec != INF:
            b = Fraction(v.prec, B.E) + r * i
            bound = b if bound is None or b < bound else bound
    if f.N != INF:
        b = Fraction(tail_val, B.E) + r * f.N
        bound = b if bound is None or b < bound else bound
    exact = bound is None or (best is not None and best < bound)
    return best, exact


def t_function(B: RamifiedBase, zeta_prec=None) -> PrecSeries:
    """Partial product of (1 - zeta^(q^i)/z) over the factors visible at
    precision; coefficients are known modulo w^P."""
    P = B.P if zeta_prec is None else int(math.ceil(Fraction(zeta_prec) * B.E))
    t = PrecSeries.one(B)
    i = 0
    while True:
        zq = B.zeta.frob(i)
        if zq.valuation() >= P:
            break
        t = t * PrecSeries(B, {0: B.one(), -1: -zq})
        i += 1
    return PrecSeries(B, {k: v.truncate(P) for k, v in t.c.items()}, INF)


def frobenius_chain(h0: KElem, steps: int, max_E: int = 4096):
    """Solutions h_i of h_i^q + zeta*h_i = h_{i-1}.

    h0 must be a uniformizer of its base.  Each step passes to the base
    whose uniformizer is h_i; the previous uniformizer is recovered as the
    fixed point w = R(h^q + zeta(w) h), R the compositional inverse of h0.
    Returns a list of (base, h_i) pairs, h_i expressed in its own base.
    """
    B = h0.B
    if h0.valuation() != 1:
        raise ValueError("h0 must be a uniformizer of its base")
    out = [(B, h0)]
    cur_B, cur_h = B, h0
    for _ in range(steps):
        q = cur_B.q
        if cur_B.E * q > max_E:
            raise RamificationBudgetExceeded(f"ramification {cur_B.E * q} exceeds {max_E}")
        new_B = _chain_base(cur_B, cur_h)
        out.append((new_B, new_B.w(1)))
        cur_B, cur_h = new_B, new_B.w(1)
    return out


def _chain_base(B: RamifiedBase, h_prev: KElem) -> RamifiedBase:
    """Base whose uniformizer h satisfies h^q + zeta h = h_prev."""
    q = B.q
    P = B.P
    new = RamifiedBase(B.tower, B.m, P=P, zeta={q * B.E: 1}, zeta_prec=INF,
                       q_divisible=B.q_divisible)
    # w (old uniformizer) as a series in h: w = R(h^q + Z(w) h)
    is_uniformizer = h_prev.t == {1: 1} and h_prev.prec == INF
    h = new.w(1)
    hq = new.w(q)
    w_img = hq
    for _ in range(P + 2):
        zw = substitute(B.zeta, new, w_img)
        arg = (hq + zw * h).truncate(P + q)
        if is_uniformizer:
            nxt = arg
        else:
            nxt = _apply_inverse_series(h_prev, new, arg)
        nxt = nxt.truncate(P + q)
        if nxt.same(w_img) and nxt.prec == w_img.prec:
            w_img = nxt
            break
        w_img = nxt
    zeta_new = substitute(B.zeta, new, w_img)
    new.zeta = KElem(new, zeta_new.t, zeta_new.prec)
    new.E = new.zeta.valuation()
    new.D = new.E
    new.standard = False
    new._zeta_pows = {0: new.one(), 1: new.zeta}
    new._parent = (B, "subst", w_img)
    return new


def _apply_inverse_series(u: KElem, B2: RamifiedBase, arg: KElem) -> KElem:
    """Solve u(x) = arg for x in B2 by fixed-point iteration (u has val 1)."""
    F = u.B.F
    c1 = F.embed(u.t[1], B2.F)
    c1inv = B2.F.inv(c1)
    rest = KElem(u.B, {e: c for e, c in u.t.items() if e != 1}, u.prec)
    x = arg.scale(c1inv)
    for _ in range(B2.P + 2):
        nxt = (arg - substitute(rest, B2, x)).scale(c1inv).truncate(B2.P + arg.valuation())
        if nxt.same(x):
            return nxt
        x = nxt
    return x


def carlitz_base(tower: FieldTower, m: int = 1, P: int = 40) -> RamifiedBase:
    """Base F_{q^m}((w)) with zeta = -w^(q-1), so that h0 = w solves h0^(q-1) = -zeta."""
    q = tower.q
    F = tower.level(m)
    B = RamifiedBase(tower, m, P=P, zeta={q - 1: F.neg(1)})
    B.standard = False
    return B


def f_alpha(alpha: KElem, window=(0, None)) -> PrecSeries:
    """Window-truncated product prod_{nu>=0}(1 - alpha^(q^nu)/z) *
    prod_{nu<0}(1 - z/alpha^(q^nu)).

    ``window = (nu_min, nu_max)``; nu_max = None runs until the factors are
    trivial at the working precision.  Negative nu need q-power roots of
    alpha inside the base.
    """
    B = alpha.B
    nu_min, nu_max = window
    f = PrecSeries.one(B)
    nu = max(nu_min, 0)
    while nu_max is None or nu <= nu_max:
        a = alpha.frob(nu)
        if a.valuation() is None or a.valuation() >= B.P:
            break
        f = f * PrecSeries(B, {0: B.one(), -1: -a})
        nu += 1
    for nu in range(-1, nu_min - 1, -1):
        a = alpha.frob(nu)
        f = f * PrecSeries(B, {0: B.one(), 1: -a.inv()})
    return PrecSeries(B, {k: v.truncate(B.P) for k, v in f.c.items()}, INF)


# ---------------------------------------------------------------------------
# root extraction over ramified bases (Kummer and Artin-Schreier)

def kth_root(c: KElem, k: int):
    """A k-th root (p does not divide k) of c, extending the base as needed.

    Returns ``(B2, y)`` with y^k = c in B2.
    """
    B = c.B
    if k % B.p == 0:
        raise ValueError("k must be prime to p")
    if not c.t:
        raise InsufficientPrecision("root of an element zero at precision")
    v = c.valuation()
    g = k // math.gcd(k, v)
    if g > 1:
        B = B.tame(g)
        c = B.lift(c)
        v = c.valuation()
    lead = c.t[v]
    m2 = B.m
    F = B.F
    root = None
    for j in range(1, 64):
        F2 = B.tower.level(B.m * j)
        if F2.Q > MAX_FIELD_SIZE:
            break
        a = F.embed(lead, F2)
        la = F2.log[a]
        gcd = math.gcd(k, F2.order)
        if la % gcd == 0:
            # solve k*x = la mod order
            x = (la // gcd) * pow(k // gcd, -1, F2.order // gcd) % (F2.order // gcd)
            root = F2.exp[x]
            m2 = B.m * j
            break
    if root is None:
        raise ExtensionBudgetExceeded("residue root not found within budget")
    B = B.extend_level(m2)
    c = B.lift(c)
    y = B.w(v // k, root)
    # Newton: y <- y - (y^k - c)/(k y^(k-1))
    kinv = B.F.inv(B.F.from_int(k))
    target = c.prec if c.prec != INF else v + B.P
    ytarget = target - v + v // k
    for _ in range(64):
        yk1 = y ** (k - 1)
        delta = ((yk1 * y - c) * yk1.inv()).scale(kinv)
        y = (y - delta).truncate(ytarget)
        if not delta.t or min(delta.t) >= ytarget:
            break
    return B, y


def as_solve_K(c: KElem, max_E: int = 4096):
    """Solve y^q - y = c over a ramified base, extending it as needed.

    Returns ``(B2, y)``.  Polar terms with exponent divisible by q are
    removed by q-th roots; a remaining polar term of exponent prime to p
    forces a wild extension of degree q whose uniformizer is constructed
    explicitly.  Integral right-hand sides are solved on the residue field
    and lifted by y = y0 - sum c'^(q^k).
    """
    B = c.B
    q, p = B.q, B.p
    y = B.zero()
    for _ in range(4 * B.P + 8):
        if not c.t or min(c.t) >= 0:
            break
        v = -min(c.t)
        if v % q == 0:
            a = B.F.frobp(c.t[-v], -B.f)
            s = B.w(-v // q, a)
            y = y + s
            c = c - (s.frob(1) - s)
            continue
        if v % p == 0:
            raise RamificationBudgetExceeded("Artin-Schreier term with p | v but q not dividing v")
        B2, y2 = _as_wild(c, v, max_E)
        y = B2.lift(y) + y2
        return B2, y
    # integral case
    c0 = c.t.get(0, 0) if c.prec > 0 else 0
    y0, m2 = artin_schreier_solve(c0, B.tower, B.m)
    B = B.extend_level(m2)
    c = B.lift(c)
    y = B.lift(y)
    y0e = B.const(y0)
    rest = c - (y0e.frob(1) - y0e)
    acc = B.zero()
    term = rest
    for _ in range(B.P + 2):
        if not term.t or min(term.t) >= B.P:
            break
        acc = acc + term
        term = term.frob(1)
    acc = acc.truncate(min(c.prec, B.P) if c.prec != INF else B.P)
    return B, y + y0e - acc


def _as_wild(c: KElem, v: int, max_E: int):
    """y^q - y = c with val(c) = -v, p prime to v: totally ramified step."""
    B = c.B
    q = B.q
    e = pow(v, -1, q) if math.gcd(v, q) == 1 else None
    if e is None:
        raise RamificationBudgetExceeded("unsupported wild shape")
    e = e % q or q
    if B.E * e * q > max_E:
        raise RamificationBudgetExceeded(f"ramification {B.E * e * q} exceeds {max_E}")
    Bt = B.tame(e)
    ct = Bt.lift(c)
    v2 = -min(ct.t)
    j = (v2 - 1) // q
    assert v2 == 1 + q * j
    # c = w^(-v2) * gamma(w), gamma a unit series
    gamma = ct.shift(v2)
    P = Bt.P
    new = RamifiedBase(Bt.tower, Bt.m, P=P, zeta={q * Bt.E: 1}, q_divisible=Bt.q_divisible)
    pi = new.w(1)
    # w = pi^q gamma(w) / (1 - pi^(q-1) w^((q-1) j))
    w_img = new.w(q).__mul__(new.const(Bt.F.embed(gamma.t.get(0, 0), new.F)))
    for _ in range(P + 4):
        g = substitute(gamma, new, w_img)
        den = new.one() - new.w(q - 1) * (w_img ** ((q - 1) * j) if j else new.one())
        nxt = (new.w(q) * g * den.inv()).truncate(P + q)
        if nxt.same(w_img):
            w_img = nxt
            break
        w_img = nxt
    zeta_new = substitute(Bt.zeta, new, w_img)
    new.zeta = KElem(new, zeta_new.t, zeta_new.prec)
    new.E = new.zeta.valuation()
    new.D = new.E
    new.standard = False
    new._zeta_pows = {0: new.one(), 1: new.zeta}
    new._parent = (Bt, "subst", w_img)
    # y = 1/(pi * w^j)
    y = (pi * (w_img ** j if j else new.one())).inv()
    return new, y


def qdiv_flag(B: RamifiedBase) -> bool:
    """The provenance flag that disables the weak-admissible => admissible rule."""
    return bool(B.q_divisible)
