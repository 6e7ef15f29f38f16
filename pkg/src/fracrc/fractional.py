"""Rational exponents with even numerators and their real-valued power map.

Exponents are stored exactly as integer numerator/denominator pairs; floats
only appear when a power is actually applied. Restricting numerators to even
integers keeps ``x ** (n/d)`` real for negative ``x``: the d-th root of an
even power of x equals ``|x| ** (n/d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = ["FracExponent", "frac_pow"]


@dataclass(frozen=True, order=False)
class FracExponent:
    """Exact rational exponent n/d with even numerator n."""

    numerator: int
    denominator: int = 50

    def __post_init__(self):
        if not isinstance(self.numerator, (int, np.integer)):
            raise TypeError(f"numerator must be an integer, got {self.numerator!r}")
        if not isinstance(self.denominator, (int, np.integer)):
            raise TypeError(f"denominator must be an integer, got {self.denominator!r}")
        if self.numerator <= 0:
            raise ValueError(f"numerator must be positive, got {self.numerator}")
        if self.numerator % 2 != 0:
            raise ValueError(f"numerator must be even, got {self.numerator}")
        if self.denominator < 1:
            raise ValueError(f"denominator must be >= 1, got {self.denominator}")
        object.__setattr__(self, "numerator", int(self.numerator))
        object.__setattr__(self, "denominator", int(self.denominator))

    @property
    def value(self) -> float:
        return self.numerator / self.denominator

    def as_fraction(self) -> Fraction:
        """Exact rational value, for ordering and equality-of-value tests."""
        return Fraction(self.numerator, self.denominator)

    def __lt__(self, other: "FracExponent") -> bool:
        return self.as_fraction() < other.as_fraction()

    def __le__(self, other: "FracExponent") -> bool:
        return self.as_fraction() <= other.as_fraction()

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"


def frac_pow(x, e: FracExponent):
    """Apply ``|x| ** (n/d)`` element-wise.

    For even n this equals the real d-th root of ``x ** n``, so the map is
    even in x and non-negative. Accepts scalars or arrays; raises on
    non-finite input.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("frac_pow requires finite input")
    result = np.abs(arr) ** (e.numerator / e.denominator)
    if np.isscalar(x) or arr.ndim == 0:
        return float(result)
    return result
