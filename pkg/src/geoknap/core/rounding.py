"""Exact geometric rounding to powers of (1 + eps).

Every comparison is done on :class:`fractions.Fraction` values, so class
boundaries never suffer from floating point error.  Powers are produced by
repeated multiplication and cached per epsilon.
"""

from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from functools import lru_cache
from math import ceil, floor
from typing import Union

Number = Union[int, Fraction]


def parse_eps(value) -> Fraction:
    """Return eps as a Fraction with ``1/eps`` integral.

    Accepts ``"1/8"``, ``8`` (meaning 1/8), ``Fraction(1, 8)``.
    """
    if isinstance(value, Fraction):
        eps = value
    elif isinstance(value, int):
        if value <= 0:
            raise ValueError(f"invalid epsilon {value!r}")
        eps = Fraction(1, value)
    elif isinstance(value, str):
        eps = Fraction(value.strip())
    else:
        raise TypeError(f"cannot interpret {value!r} as epsilon")
    if eps <= 0 or eps > 1 or eps.numerator != 1:
        raise ValueError(f"epsilon must be 1/k for a positive integer k, got {eps}")
    return eps


class PowerGrid:
    """Cached powers ``(1 + eps) ** t`` for integer ``t`` of either sign."""

    def __init__(self, eps: Fraction):
        self.eps = Fraction(eps)
        self.base = 1 + self.eps
        self._pos = [Fraction(1)]
        self._neg = [Fraction(1)]

    def power(self, t: int) -> Fraction:
        if t >= 0:
            while len(self._pos) <= t:
                self._pos.append(self._pos[-1] * self.base)
            return self._pos[t]
        while len(self._neg) <= -t:
            self._neg.append(self._neg[-1] / self.base)
        return self._neg[-t]

    def class_of(self, x: Number) -> int:
        """Largest ``t`` with ``(1+eps)**t <= x``."""
        if x <= 0:
            raise ValueError(f"rounding needs a positive value, got {x}")
        if x >= 1:
            while self._pos[-1] <= x:
                self._pos.append(self._pos[-1] * self.base)
            return bisect_right(self._pos, x) - 1
        u = 0
        while self.power(-u) > x:
            u += 1
        return -u

    def round_up(self, x: Number) -> Fraction:
        """Smallest power strictly greater than ``x``."""
        return self.power(self.class_of(x) + 1)

    def round_down(self, x: Number) -> Fraction:
        """Largest power not exceeding ``x``."""
        return self.power(self.class_of(x))

    # Integer views of a class [(1+eps)^t, (1+eps)^(t+1)).

    def int_hi(self, t: int) -> int:
        """Largest integer strictly below ``(1+eps)**(t+1)``.

        Every integer member ``x`` of class ``t`` has ``x <= int_hi(t) < (1+eps) x``.
        """
        return ceil(self.power(t + 1)) - 1

    def int_cap(self, t: int) -> int:
        """``ceil((1+eps)**(t+1))``: an integer upper bound on the rounded-up value."""
        return ceil(self.power(t + 1))

    def int_floor_power(self, t: int) -> int:
        return floor(self.power(t))

    def int_grid_down(self, lo: Number, hi: Number) -> list[int]:
        """Distinct integers ``floor((1+eps)**t)`` lying in ``[lo, hi]``, descending."""
        if hi < 1 or hi < lo:
            return []
        out: list[int] = []
        t = self.class_of(hi)
        last = None
        while True:
            v = floor(self.power(t))
            if v < lo or v < 1:
                break
            if v != last:
                out.append(v)
                last = v
            t -= 1
        return out


@lru_cache(maxsize=64)
def grid_for(eps: Fraction) -> PowerGrid:
    return PowerGrid(Fraction(eps))


def round_up_pow(x: Number, eps: Fraction) -> Fraction:
    """Smallest power of ``1+eps`` strictly larger than ``x``."""
    return grid_for(Fraction(eps)).round_up(Fraction(x))


def round_down_pow(x: Number, eps: Fraction) -> Fraction:
    """Largest power of ``1+eps`` that does not exceed ``x``."""
    return grid_for(Fraction(eps)).round_down(Fraction(x))


def class_of(x: Number, eps: Fraction) -> int:
    return grid_for(Fraction(eps)).class_of(Fraction(x))


def class_floor(t: int, eps: Fraction) -> Fraction:
    """Lower endpoint ``(1+eps)**t`` of class ``t``."""
    return grid_for(Fraction(eps)).power(t)


def class_value(t: int, eps: Fraction) -> Fraction:
    """Rounded representative ``(1+eps)**(t+1)`` of class ``t``."""
    return grid_for(Fraction(eps)).power(t + 1)
