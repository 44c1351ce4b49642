import pytest
from hypothesis import given, strategies as st

from shtukalab.base_arith import FieldTower, PrecSeries, RamifiedBase, fmt_kelem, fmt_series
from shtukalab.textio import (ParseError, Report, parse_field, parse_jet, parse_kelem,
                              parse_series, parse_weights)

T = FieldTower.for_q(2)
F4 = T.level(2)
B = RamifiedBase(T, 2, D=3, P=20)


def test_field_literal():
    g = F4.gen()
    assert parse_field("g", F4) == g
    assert parse_field("g^2 + g + 1", F4) == 0      # the minimal polynomial of g
    assert parse_field("3", F4) == 1
    with pytest.raises(ParseError):
        parse_field("z", F4)


def test_zeta_powers_use_ramification():
    assert parse_kelem("zeta^(2/3)", B).t == {2: 1}
    assert parse_kelem("zeta", B).t == {3: 1}
    with pytest.raises(ParseError):
        parse_kelem("zeta^(1/2)", B)


def test_precision_term():
    s = parse_series("1 + z + O(z^3)", F4)
    assert s.N == 3
    assert parse_series("1 + z", F4).N == float("inf")


@given(st.dictionaries(st.integers(-3, 6), st.integers(1, 3), max_size=5),
       st.one_of(st.none(), st.integers(7, 10)))
def test_series_roundtrip(coeffs, N):
    s = PrecSeries(F4, coeffs, N if N is not None else float("inf"))
    back = parse_series(fmt_series(s), F4)
    assert back.equals(s) and back.N == s.N


@given(st.dictionaries(st.integers(-4, 12), st.integers(1, 3), max_size=4))
def test_kelem_roundtrip(terms):
    x = B.elem(terms)
    assert parse_kelem(fmt_kelem(x), B) == x


def test_jet_truncates_and_rejects_z():
    j = parse_jet("1 + zeta*y + y^7", B, 3)
    assert [c.t for c in j.c] == [{0: 1}, {3: 1}, {}]
    with pytest.raises(ParseError):
        parse_jet("z", B, 3)


def test_weights_and_bad_coefficients():
    assert parse_weights("-2, 0,1") == [-2, 0, 1]
    with pytest.raises(ParseError):
        parse_series("z/2", F4)
    with pytest.raises(ParseError):
        parse_series("x*z", F4)


def test_report_modes():
    r = Report(machine=True)
    r.section("head")
    r.add("slopes", [1, 2])
    r.add("phi", PrecSeries(F4, {0: 1}))
    assert r.render() == "slopes=[1, 2]\nphi=1\n"
    r.machine = False
    assert r.render().splitlines()[0] == "== head"
