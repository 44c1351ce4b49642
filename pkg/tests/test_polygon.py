from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from shtukalab.errors import EndpointMismatch

from shtukalab.polygon import (NewtonPolygon, endpoint, from_slopes, lies_above, parse_polygon,
                               sum_polygons)

slope = st.fractions(min_value=-3, max_value=3, max_denominator=4)
polys = st.lists(slope, min_size=1, max_size=6).map(from_slopes)


def above_oracle(P, Q):
    """Pointwise comparison at the integer abscissae (both are piecewise linear there)."""
    return endpoint(P) == endpoint(Q) and all(
        P.value_at(x) >= Q.value_at(x) for x in range(P.rank + 1))


def straighten(P, i, j):
    """Replace slopes i..j-1 by their average: a polygon on or above P."""
    s = list(P.slopes)
    avg = sum(s[i:j], Fraction(0)) / (j - i)
    return from_slopes(s[:i] + [avg] * (j - i) + s[j:])


@given(polys)
def test_text_roundtrip(P):
    assert parse_polygon(str(P)) == P


def test_rendering_is_sorted_and_stable():
    P = from_slopes([Fraction(1, 2), Fraction(-1), Fraction(1, 2)])
    assert str(P) == "-1^1 + 1/2^2"
    assert str(NewtonPolygon()) == "{}"


@given(polys, polys)
def test_sum_is_commutative_and_adds_endpoints(P, Q):
    S = sum_polygons(P, Q)
    assert S == sum_polygons(Q, P)
    assert endpoint(S) == (P.rank + Q.rank, endpoint(P)[1] + endpoint(Q)[1])


@given(polys)
def test_vertices_are_convex(P):
    v = P.vertices()
    for a, b, c in zip(v, v[1:], v[2:]):
        assert (b[1] - a[1]) <= (c[1] - b[1])


@given(polys, st.data())
def test_partial_order_laws(P, data):
    n = P.rank
    i = data.draw(st.integers(0, n - 1))
    j = data.draw(st.integers(i + 1, n))
    Q = straighten(P, i, j)
    R = straighten(Q, 0, n)
    # reflexive
    assert lies_above(P, P)
    # straightening moves up; the isoclinic polygon is the top element
    assert lies_above(Q, P) and lies_above(R, Q)
    # transitive
    assert lies_above(R, P)
    # antisymmetric
    if lies_above(P, Q):
        assert P == Q
    assert lies_above(Q, P) == above_oracle(Q, P)


@given(polys, polys)
def test_lies_above_matches_pointwise_oracle(P, Q):
    if endpoint(P) != endpoint(Q):
        with pytest.raises(EndpointMismatch):
            lies_above(P, Q)
    else:
        assert lies_above(P, Q) == above_oracle(P, Q)
