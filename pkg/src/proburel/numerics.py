"""Exact rationals and the bounded unit interval.

All probability arithmetic in the engine is done on :class:`fractions.Fraction`.
``Unit`` is a ``Fraction`` that is known to lie in ``[0, 1]``.
"""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Iterable, Union

Rational = Fraction
RationalLike = Union[int, Fraction]

DEFAULT_PRECISION = 6


class Unit(Fraction):
    """A rational in the closed unit interval."""

    def __new__(cls, value: RationalLike = 0, denominator: int | None = None):
        if denominator is not None:
            value = Fraction(value, denominator)
        self = super().__new__(cls, value)
        if self < 0 or self > 1:
            raise ValueError(f"{value} is outside [0, 1]")
        return self

    def __repr__(self) -> str:
        return f"Unit({format_rational(self)})"


ZERO = Unit(0)
ONE = Unit(1)


def clamp_to_unit(r: RationalLike) -> Unit:
    return Unit(min(max(Fraction(0), Fraction(r)), Fraction(1)))


def unit_to_real(u: Unit) -> Fraction:
    return Fraction(u)


def bounded_arith(op: str, x: Unit, y: Unit) -> Unit:
    """Unit-interval ``add``, ``sub`` and ``mul``; add and sub saturate at the bounds."""
    if op == "add":
        return clamp_to_unit(Fraction(x) + Fraction(y))
    if op == "sub":
        return clamp_to_unit(Fraction(x) - Fraction(y))
    if op == "mul":
        return Unit(Fraction(x) * Fraction(y))
    raise ValueError(f"unknown bounded operation {op!r}")


def extrema(values: Iterable[RationalLike], which: str) -> Unit:
    """Infimum or supremum of a finite set of unit values.

    The empty infimum is 1 and the empty supremum is 0, the lattice's top and bottom.
    """
    vals = [Unit(v) for v in values]
    if which == "inf":
        return min(vals) if vals else ONE
    if which == "sup":
        return max(vals) if vals else ZERO
    raise ValueError(f"expected 'inf' or 'sup', got {which!r}")


def parse_rational(text: str) -> Fraction:
    """Parse ``"n"`` or ``"num/den"``. Decimal points are rejected on purpose."""
    s = text.strip()
    if "." in s or "e" in s.lower():
        raise ValueError(f"not a rational literal: {text!r} (write a/b)")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational literal: {text!r}") from exc


def format_rational(r: RationalLike) -> str:
    return str(Fraction(r))


def format_decimal(r: RationalLike, precision: int | None = None) -> str:
    """Fixed-point rendering, rounding half to even at ``precision`` places."""
    if precision is None:
        precision = default_precision()
    q = round(Fraction(r) * 10**precision)  # Fraction.__round__ is half-even
    sign = "-" if q < 0 else ""
    q = abs(q)
    if precision == 0:
        return f"{sign}{q}"
    digits = str(q).rjust(precision + 1, "0")
    return f"{sign}{digits[:-precision]}.{digits[-precision:]}"


def default_precision() -> int:
    env = os.environ.get("PROBUREL_PRECISION")
    if env:
        try:
            return int(env)
        except ValueError:
            pass
    return DEFAULT_PRECISION
