from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from proburel.numerics import (Unit, bounded_arith, clamp_to_unit, extrema, format_decimal,
                               format_rational, parse_rational, unit_to_real)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=50)
units = st.fractions(min_value=0, max_value=1, max_denominator=50).map(Unit)


def test_clamp_examples():
    assert clamp_to_unit(2) == 1
    assert clamp_to_unit(3) == 1
    assert clamp_to_unit(Fraction(1, 2)) == Fraction(1, 2)
    assert clamp_to_unit(Fraction(-7, 3)) == 0


def test_unit_to_real_examples():
    assert unit_to_real(Unit(1)) == 1
    assert unit_to_real(clamp_to_unit(Fraction(3, 4))) == Fraction(3, 4)
    assert unit_to_real(Unit(0)) == 0


def test_bounded_arith_examples():
    h, s = Unit(1, 2), Unit(7, 10)
    assert bounded_arith("add", h, s) == 1
    assert bounded_arith("sub", h, s) == 0
    assert bounded_arith("mul", h, h) == Fraction(1, 4)
    with pytest.raises(ValueError):
        bounded_arith("div", h, h)


def test_extrema_examples():
    assert extrema([Fraction(1, 4), Fraction(1, 2)], "sup") == Fraction(1, 2)
    assert extrema([Fraction(1, 4), Fraction(1, 2)], "inf") == Fraction(1, 4)
    assert extrema([], "inf") == 1
    assert extrema([], "sup") == 0


def test_unit_rejects_out_of_range():
    with pytest.raises(ValueError):
        Unit(Fraction(3, 2))
    with pytest.raises(ValueError):
        Unit(-1)


def test_lowest_terms_and_value_equality():
    r = Fraction(6, 8)
    assert (r.numerator, r.denominator) == (3, 4)
    assert Unit(6, 8) == Fraction(3, 4)


def test_parse_and_format():
    assert parse_rational("21/50") == Fraction(21, 50)
    assert parse_rational(" 3 ") == 3
    assert format_rational(Fraction(21, 50)) == "21/50"
    assert format_rational(4) == "4"
    for bad in ("0.5", "1e3", "a/b", "1/0"):
        with pytest.raises(ValueError):
            parse_rational(bad)


def test_format_decimal_half_even():
    assert format_decimal(Fraction(1, 3), 6) == "0.333333"
    assert format_decimal(Fraction(2, 3), 6) == "0.666667"
    assert format_decimal(Fraction(1, 8), 2) == "0.12"
    assert format_decimal(Fraction(3, 8), 2) == "0.38"
    assert format_decimal(Fraction(-1, 2), 0) == "0"
    assert format_decimal(Fraction(-3, 2), 1) == "-1.5"
    assert format_decimal(Fraction(89, 2584), 6) == "0.034443"


def test_default_precision_from_env(monkeypatch):
    monkeypatch.setenv("PROBUREL_PRECISION", "3")
    assert format_decimal(Fraction(1, 3)) == "0.333"
    monkeypatch.setenv("PROBUREL_PRECISION", "junk")
    assert format_decimal(Fraction(1, 3)) == "0.333333"


@given(rationals)
def test_clamp_idempotent_and_in_range(r):
    c = clamp_to_unit(r)
    assert 0 <= c <= 1
    assert clamp_to_unit(c) == c


@given(rationals, rationals)
def test_clamp_monotone(a, b):
    if a <= b:
        assert clamp_to_unit(a) <= clamp_to_unit(b)


@given(units)
def test_clamp_inverts_unit_to_real(u):
    assert clamp_to_unit(unit_to_real(u)) == u
    assert unit_to_real(clamp_to_unit(u)) == u


@given(units, units, st.sampled_from(["add", "sub", "mul"]))
def test_bounded_arith_stays_in_unit(x, y, op):
    r = bounded_arith(op, x, y)
    assert 0 <= r <= 1
    if op == "mul":
        assert r == Fraction(x) * Fraction(y)


@given(units, units, units)
def test_order_is_a_lattice(a, b, c):
    assert a <= a
    if a <= b and b <= c:
        assert a <= c
    if a <= b and b <= a:
        assert a == b
    lo, hi = extrema([a, b], "inf"), extrema([a, b], "sup")
    assert lo <= a and lo <= b and a <= hi and b <= hi
    assert lo in (a, b) and hi in (a, b)


@given(st.lists(units, max_size=6), units)
def test_inf_sup_bounds(vals, x):
    inf, sup = extrema(vals, "inf"), extrema(vals, "sup")
    assert all(inf <= v <= sup for v in vals)
    if all(x <= v for v in vals):
        assert x <= inf
    if all(v <= x for v in vals):
        assert sup <= x
