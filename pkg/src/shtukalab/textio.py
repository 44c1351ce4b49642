"""Text formats: series and jet literals, YAML input files, report emission.

Literals are read with sympy in the symbols z (series variable), y
(= z - zeta, for jets), g (generator of F_{q^m}), w (uniformizer of the
base) and zeta (= w^D; rational exponents allowed when D permits).
"""
from __future__ import annotations

import re
from fractions import Fraction

import sympy
import yaml

from .base_arith import (INF, FieldTower, GFLevel, KElem, PrecSeries, RamifiedBase, ZetaJet,
                         fmt_kelem, fmt_series)
from .sigmamod import SigmaModule

_SYMS = {name: sympy.Symbol(name) for name in ("z", "y", "g", "w", "zeta")}
_O_TERM = re.compile(r"\+?\s*O\(\s*z\s*\^\s*(-?\d+)\s*\)")


class ParseError(ValueError):
    pass


def _terms(text: str):
    expr = sympy.sympify(text.replace("^", "**"), locals=_SYMS)
    expr = sympy.expand(expr)
    for term in sympy.Add.make_args(expr):
        if term == 0:
            continue
        coeff, rest = term.as_coeff_Mul()
        if not coeff.is_Rational or coeff.q != 1:
            raise ParseError(f"coefficient {coeff} is not an integer")
        powers = {k: 0 for k in _SYMS}
        for base, ex in rest.as_powers_dict().items():
            if base == 1:
                continue
            name = str(base)
            if name not in powers:
                raise ParseError(f"unknown symbol {name!r}")
            powers[name] += Fraction(int(ex.p), int(ex.q))
        yield int(coeff), powers


def _field_elem(F: GFLevel, c: int, gexp) -> int:
    if gexp.denominator != 1 or gexp < 0:
        raise ParseError("powers of g must be non-negative integers")
    v = F.pow(F.gen(), int(gexp)) if gexp else 1
    return F.mul(F.from_int(c % F.p), v)


def parse_field(text: str, F: GFLevel) -> int:
    acc = 0
    for c, pw in _terms(text):
        if any(pw[k] for k in ("z", "y", "w", "zeta")):
            raise ParseError("field literal must only involve g")
        acc = F.add(acc, _field_elem(F, c, pw["g"]))
    return acc


def _wexp(B: RamifiedBase, pw) -> int:
    e = pw["w"] + pw["zeta"] * B.E
    if e.denominator != 1:
        raise ParseError(f"zeta^{pw['zeta']} needs more ramification than D={B.D}")
    return int(e)


def parse_kelem(text: str, B: RamifiedBase) -> KElem:
    t = {}
    for c, pw in _terms(text):
        if pw["z"] or pw["y"]:
            raise ParseError("base literal must not involve z or y")
        e = _wexp(B, pw)
        t[e] = B.F.add(t.get(e, 0), _field_elem(B.F, c, pw["g"]))
    return KElem(B, t, INF)


def parse_series(text, R) -> PrecSeries:
    """Series literal over a finite field level or a ramified base."""
    text = str(text)
    N = INF
    m = _O_TERM.search(text)
    if m:
        N = int(m.group(1))
        text = _O_TERM.sub("", text).strip() or "0"
    coeffs = {}
    for c, pw in _terms(text):
        if pw["y"]:
            raise ParseError("series literal must not involve y")
        if pw["z"].denominator != 1:
            raise ParseError("z exponents must be integers")
        i = int(pw["z"])
        if isinstance(R, GFLevel):
            if pw["w"] or pw["zeta"]:
                raise ParseError("finite-field series must not involve w or zeta")
            v = _field_elem(R, c, pw["g"])
            coeffs[i] = R.add(coeffs.get(i, 0), v)
        else:
            e = _wexp(R, pw)
            v = KElem(R, {e: _field_elem(R.F, c, pw["g"])}, INF)
            coeffs[i] = coeffs[i] + v if i in coeffs else v
    return PrecSeries(R, coeffs, N)


def parse_jet(text, B: RamifiedBase, E: int) -> ZetaJet:
    """Polynomial in y with base coefficients, as a jet of order E."""
    cs = [KElem(B, {}, INF) for _ in range(E)]
    for c, pw in _terms(str(text)):
        if pw["z"]:
            raise ParseError("jet literal must be written in y = z - zeta")
        k = pw["y"]
        if k.denominator != 1 or k < 0:
            raise ParseError("y exponents must be non-negative integers")
        if k >= E:
            continue
        e = _wexp(B, pw)
        cs[int(k)] = cs[int(k)] + KElem(B, {e: _field_elem(B.F, c, pw["g"])}, INF)
    return ZetaJet(B, cs)


def parse_weights(text: str):
    return [int(x) for x in str(text).replace(" ", "").split(",") if x]


# ---------------------------------------------------------------------------
# files

def load_yaml(path):
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ParseError(f"{path}: expected a mapping")
    return data


def header(data: dict, cfg: dict) -> dict:
    out = dict(cfg)
    for k in ("q", "m", "D", "P", "zprec", "E"):
        if k in data:
            out[k] = int(data[k])
    return out


def make_base(h: dict, q_divisible: bool = False) -> tuple:
    T = FieldTower.for_q(h["q"])
    B = RamifiedBase(T, h.get("m", 1), D=h.get("D", 1), P=h.get("P", 40),
                     q_divisible=bool(q_divisible))
    return T, B


def read_matrix(rows, parse):
    return [[parse(x) for x in row] for row in rows]


def sigma_from_data(data: dict, cfg: dict) -> SigmaModule:
    h = header(data, cfg)
    T = FieldTower.for_q(h["q"])
    F = T.level(h.get("m", 1))
    key = "matrix" if "matrix" in data else "phi"
    Phi = read_matrix(data[key], lambda s: parse_series(s, F))
    return SigmaModule(Phi, T, h.get("m", 1))


# ---------------------------------------------------------------------------
# output

def fmt_value(v) -> str:
    if isinstance(v, KElem):
        return fmt_kelem(v)
    if isinstance(v, PrecSeries):
        return fmt_series(v)
    if isinstance(v, ZetaJet):
        return "[" + ", ".join(fmt_kelem(c) for c in v.c) + "]"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(fmt_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {fmt_value(x)}" for k, x in v.items()) + "}"
    return str(v)


class Report:
    """Ordered key/value report; machine mode renders ``key=value`` lines."""

    def __init__(self, machine: bool = False):
        self.machine = machine
        self.items = []

    def add(self, key, value):
        self.items.append((str(key), value))

    def section(self, title):
        self.items.append((None, title))

    def render(self) -> str:
        lines = []
        for k, v in self.items:
            if k is None:
                if not self.machine:
                    lines.append(f"== {v}")
                continue
            if self.machine:
                lines.append(f"{k}={fmt_value(v)}")
            else:
                lines.append(f"{k}: {fmt_value(v)}")
        return "\n".join(lines) + "\n"
