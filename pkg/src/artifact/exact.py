"""Exact comparisons against quantities of the form c * m ** (a / b)."""
from __future__ import annotations

from fractions import Fraction
from math import gcd


class Bound:
    """Non-negative real ``coeff * base ** (num / den)``, compared without floats."""

    __slots__ = ("coeff", "base", "num", "den")

    def __init__(self, coeff, base: int = 1, num: int = 0, den: int = 1):
        coeff = Fraction(coeff)
        if coeff < 0 or base < 0 or den <= 0 or num < 0:
            raise ValueError("bound must be a non-negative root expression")
        self.coeff, self.base, self.num, self.den = coeff, base, num, den

    def _cmp(self, x) -> int:
        """Sign of (self - x)."""
        if isinstance(x, Bound):
            return self._cmp_bound(x)
        x = Fraction(x)
        if self.coeff == 0 or (self.base == 0 and self.num):
            return (0 > x) - (0 < x)
        if x <= 0:
            return 1
        lhs = self.coeff ** self.den * self.base ** self.num
        rhs = x ** self.den
        return (lhs > rhs) - (lhs < rhs)

    def _cmp_bound(self, other: "Bound") -> int:
        D = self.den * other.den // gcd(self.den, other.den)
        lhs = self.coeff ** D * Fraction(self.base) ** (self.num * D // self.den)
        rhs = other.coeff ** D * Fraction(other.base) ** (other.num * D // other.den)
        return (lhs > rhs) - (lhs < rhs)

    def __ge__(self, x):
        return self._cmp(x) >= 0

    def __gt__(self, x):
        return self._cmp(x) > 0

    def __le__(self, x):
        return self._cmp(x) <= 0

    def __lt__(self, x):
        return self._cmp(x) < 0

    def __mul__(self, k):
        return Bound(self.coeff * Fraction(k), self.base, self.num, self.den)

    __rmul__ = __mul__

    def __float__(self):
        return float(self.coeff) * float(self.base) ** (self.num / self.den)

    def __repr__(self):
        return f"Bound({self.coeff} * {self.base}^({self.num}/{self.den}))"


def as_bound(x) -> Bound:
    return x if isinstance(x, Bound) else Bound(x)


def floor_log2(m: int) -> int:
    return max(1, m.bit_length() - 1)


def ceil_frac(x) -> int:
    x = Fraction(x)
    return -((-x.numerator) // x.denominator)
