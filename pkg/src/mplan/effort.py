"""Exact person-hour arithmetic.

All effort, capacity and placement hours are :class:`fractions.Fraction`
values so rollups and conservation identities reproduce exactly, with no
floating-point drift. JSON carries integers where possible and ``"p/q"``
strings otherwise.
"""

from __future__ import annotations

from fractions import Fraction

HoursLike = "int | float | str | Fraction"


def as_hours(value, *, allow_negative: bool = False) -> Fraction:
    """Coerce ``value`` to an exact Fraction of hours.

    Accepts ints, Fractions, ``"p/q"`` strings, decimal strings and floats
    (floats go through their decimal repr, so ``19.5`` becomes ``39/2``).
    """
    if isinstance(value, bool):
        raise ValueError("hours must be a number, not a bool")
    if isinstance(value, Fraction):
        hours = value
    elif isinstance(value, int):
        hours = Fraction(value)
    elif isinstance(value, float):
        hours = Fraction(repr(value))
    elif isinstance(value, str):
        try:
            hours = Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse hours from {value!r}") from exc
    else:
        raise ValueError(f"cannot parse hours from {type(value).__name__}")
    if not allow_negative and hours < 0:
        raise ValueError(f"hours must be >= 0, got {hours}")
    return hours


def hours_to_json(hours: Fraction):
    """Integral fractions serialize as JSON numbers, others as ``"p/q"``."""
    if hours.denominator == 1:
        return int(hours)
    return f"{hours.numerator}/{hours.denominator}"


def fmt_hours(hours: Fraction) -> str:
    """Exact human-readable form: ``"2600"`` or ``"600/31"``."""
    if hours.denominator == 1:
        return str(int(hours))
    return f"{hours.numerator}/{hours.denominator}"
