"""Polygons given by slope multisets."""
from __future__ import annotations

from collections import Counter
from fractions import Fraction

from .errors import EndpointMismatch


class NewtonPolygon:
    """Convex polygon starting at (0, 0) whose slopes are the sorted multiset."""

    __slots__ = ("slopes",)

    def __init__(self, slopes=()):
        self.slopes = tuple(sorted(Fraction(s) for s in slopes))

    def __repr__(self):
        return f"NewtonPolygon({self})"

    def __str__(self):
        if not self.slopes:
            return "{}"
        parts = []
        for s, m in sorted(Counter(self.slopes).items()):
            parts.append(f"{s}^{m}")
        return " + ".join(parts)

    def __eq__(self, other):
        return isinstance(other, NewtonPolygon) and self.slopes == other.slopes

    def __hash__(self):
        return hash(self.slopes)

    def __len__(self):
        return len(self.slopes)

    def __add__(self, other):
        return sum_polygons(self, other)

    @property
    def rank(self) -> int:
        return len(self.slopes)

    def multiplicities(self) -> dict:
        return dict(sorted(Counter(self.slopes).items()))

    def vertices(self):
        pts = [(0, Fraction(0))]
        h = Fraction(0)
        for i, s in enumerate(self.slopes, 1):
            h += s
            pts.append((i, h))
        return pts

    def value_at(self, x: int) -> Fraction:
        return sum(self.slopes[:x], Fraction(0))

    def breaks(self):
        """Vertices where the slope changes (plus the endpoints)."""
        v = self.vertices()
        out = [v[0]]
        for i in range(1, len(self.slopes)):
            if self.slopes[i] != self.slopes[i - 1]:
                out.append(v[i])
        if len(v) > 1:
            out.append(v[-1])
        return out

    def is_isoclinic(self) -> bool:
        return len(set(self.slopes)) <= 1


def from_slopes(slopes) -> NewtonPolygon:
    return NewtonPolygon(slopes)


def parse_polygon(text: str) -> NewtonPolygon:
    """Inverse of ``str``: "d1/n1^m1 + d2/n2^m2"."""
    text = text.strip()
    if text in ("", "{}"):
        return NewtonPolygon()
    slopes = []
    for part in text.split("+"):
        part = part.strip()
        s, _, m = part.partition("^")
        slopes += [Fraction(s)] * (int(m) if m else 1)
    return NewtonPolygon(slopes)


def sum_polygons(P: NewtonPolygon, Q: NewtonPolygon) -> NewtonPolygon:
    return NewtonPolygon(P.slopes + Q.slopes)


def endpoint(P: NewtonPolygon):
    return (len(P.slopes), sum(P.slopes, Fraction(0)))


def lies_above(P: NewtonPolygon, Q: NewtonPolygon) -> bool:
    """True iff no vertex of P lies below Q (endpoints must agree)."""
    if endpoint(P) != endpoint(Q):
        raise EndpointMismatch(f"endpoints {endpoint(P)} and {endpoint(Q)} differ")
    # Q is convex and piecewise linear with integral break abscissae, so
    # comparing at the integers 0..n suffices.
    return all(P.value_at(i) >= Q.value_at(i) for i in range(len(P.slopes) + 1))
