"""Exact dyadic rationals ``num / 2**log2_den``.

Every finite float is a dyadic rational, so conversion from float is exact.
Reciprocals are generally not dyadic (``1 / (3/4) = 4/3``) and come back as
:class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering
from numbers import Rational
from typing import Union

Number = Union[int, float, Fraction, "DyadicRational"]


def _canonical(num: int, log2_den: int) -> tuple[int, int]:
    if num == 0:
        return 0, 0
    if log2_den < 0:
        return num << -log2_den, 0
    # strip common factors of two
    tz = (num & -num).bit_length() - 1
    shift = min(tz, log2_den)
    return num >> shift, log2_den - shift


@total_ordering
class DyadicRational:
    __slots__ = ("num", "log2_den")

    num: int
    log2_den: int

    def __init__(self, num: int, log2_den: int = 0):
        if not isinstance(num, int) or not isinstance(log2_den, int):
            raise TypeError("num and log2_den must be integers")
        n, k = _canonical(num, log2_den)
        object.__setattr__(self, "num", n)
        object.__setattr__(self, "log2_den", k)

    def __setattr__(self, name, value):
        raise AttributeError("DyadicRational is immutable")

    def __reduce__(self):
        return (DyadicRational, (self.num, self.log2_den))

    @classmethod
    def from_float(cls, x: float) -> DyadicRational:
        if not math.isfinite(x):
            raise ValueError(f"cannot convert {x!r} to a dyadic rational")
        p, q = x.as_integer_ratio()
        return cls(p, q.bit_length() - 1)

    @classmethod
    def from_fraction(cls, x: Fraction) -> DyadicRational:
        q = x.denominator
        if q & (q - 1):
            raise ValueError(f"{x} has a non-dyadic denominator")
        return cls(x.numerator, q.bit_length() - 1)

    @classmethod
    def coerce(cls, x: Number) -> DyadicRational:
        if isinstance(x, DyadicRational):
            return x
        if isinstance(x, int):
            return cls(x, 0)
        if isinstance(x, float):
            return cls.from_float(x)
        if isinstance(x, Fraction):
            return cls.from_fraction(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to DyadicRational")

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.log2_den)

    def __float__(self) -> float:
        return math.ldexp(float(self.num), -self.log2_den) if abs(self.num) < 1 << 53 \
            else float(self.to_fraction())

    def __repr__(self) -> str:
        return f"DyadicRational({self.num}, {self.log2_den})"

    def __str__(self) -> str:
        return f"{self.num}/2^{self.log2_den}"

    def __hash__(self) -> int:
        return hash(self.to_fraction())

    def _align(self, other: DyadicRational) -> tuple[int, int, int]:
        k = max(self.log2_den, other.log2_den)
        return (self.num << (k - self.log2_den), other.num << (k - other.log2_den), k)

    def __eq__(self, other) -> bool:
        if isinstance(other, DyadicRational):
            return self.num == other.num and self.log2_den == other.log2_den
        if isinstance(other, (int, float, Rational)):
            return self.to_fraction() == other
        return NotImplemented

    def __lt__(self, other) -> bool:
        if isinstance(other, DyadicRational):
            a, b, _ = self._align(other)
            return a < b
        if isinstance(other, (int, float, Rational)):
            return self.to_fraction() < other
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, (int, DyadicRational)):
            other = DyadicRational.coerce(other)
            a, b, k = self._align(other)
            return DyadicRational(a + b, k)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self) -> DyadicRational:
        return DyadicRational(-self.num, self.log2_den)

    def __pos__(self) -> DyadicRational:
        return self

    def __abs__(self) -> DyadicRational:
        return self if self.num >= 0 else -self

    def __sub__(self, other):
        if isinstance(other, (int, DyadicRational)):
            return self + (-DyadicRational.coerce(other))
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, int):
            return DyadicRational(other) - self
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, DyadicRational)):
            other = DyadicRational.coerce(other)
            return DyadicRational(self.num * other.num, self.log2_den + other.log2_den)
        return NotImplemented

    __rmul__ = __mul__

    def __bool__(self) -> bool:
        return self.num != 0

    def scale2(self, k: int) -> DyadicRational:
        """Multiply by ``2**k`` (``k`` may be negative)."""
        return DyadicRational(self.num, self.log2_den - k)

    def reciprocal(self) -> Fraction:
        if self.num == 0:
            raise ZeroDivisionError("reciprocal of zero")
        return Fraction(1 << self.log2_den, self.num)


def format_number(x) -> str:
    """Render a distance for dumps: ``p/2^q`` when dyadic, decimal otherwise."""
    if isinstance(x, DyadicRational):
        return str(x)
    return repr(float(x))
