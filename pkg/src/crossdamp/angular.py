"""Angular-momentum algebra on doubled integers.

Every quantum number is carried as ``2j`` so that half-integral values and the
selection rules stay exact.  Public functions accept ints, floats,
``fractions.Fraction`` or :class:`HalfInt`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Real
from typing import Union

__all__ = [
    "HalfInt",
    "twice",
    "wigner3j",
    "wigner3j_exact",
    "clebsch_gordan",
    "orthogonality_sum",
    "projections",
]


@dataclass(frozen=True, order=True)
class HalfInt:
    """An integer or half-integer stored as twice its value."""

    twice_value: int

    @classmethod
    def of(cls, value: "Number") -> "HalfInt":
        return cls(twice(value))

    def __float__(self) -> float:
        return self.twice_value / 2

    def __neg__(self) -> "HalfInt":
        return HalfInt(-self.twice_value)

    def __add__(self, other: "Number") -> "HalfInt":
        return HalfInt(self.twice_value + twice(other))

    def __sub__(self, other: "Number") -> "HalfInt":
        return HalfInt(self.twice_value - twice(other))

    def as_fraction(self) -> Fraction:
        return Fraction(self.twice_value, 2)

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __str__(self) -> str:
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"


Number = Union[HalfInt, Real, Fraction]


def twice(value: Number) -> int:
    """Return ``2*value`` as an int, rejecting anything that is not a multiple of 1/2."""
    if isinstance(value, HalfInt):
        return value.twice_value
    doubled = 2 * value
    rounded = round(doubled)
    if abs(doubled - rounded) > 1e-9:
        raise ValueError(f"{value!r} is not an integer or half-integer")
    return int(rounded)


def projections(j: Number) -> list[HalfInt]:
    """All projections -j, -j+1, ..., j."""
    tj = twice(j)
    return [HalfInt(tm) for tm in range(-tj, tj + 1, 2)]


def _selection_ok(tj1, tj2, tj3, tm1, tm2, tm3) -> bool:
    if tm1 + tm2 + tm3 != 0:
        return False
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if tj < 0 or abs(tm) > tj or (tj - tm) % 2:
            return False
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2) or (tj1 + tj2 + tj3) % 2:
        return False
    return True


@lru_cache(maxsize=65536)
def _wigner3j_doubled(tj1, tj2, tj3, tm1, tm2, tm3) -> float:
    sign, square = _racah_exact(tj1, tj2, tj3, tm1, tm2, tm3)
    if sign == 0:
        return 0.0
    # float(Fraction) is correctly rounded, so the result is within ~1 ulp
    return sign * math.sqrt(float(square))


def _racah_exact(tj1, tj2, tj3, tm1, tm2, tm3) -> tuple[int, Fraction]:
    if not _selection_ok(tj1, tj2, tj3, tm1, tm2, tm3):
        return 0, Fraction(0)
    f = math.factorial
    a = (tj1 + tj2 - tj3) // 2
    b = (tj1 - tj2 + tj3) // 2
    c = (-tj1 + tj2 + tj3) // 2
    big = (tj1 + tj2 + tj3) // 2 + 1
    j1pm, j1mm = (tj1 + tm1) // 2, (tj1 - tm1) // 2
    j2pm, j2mm = (tj2 + tm2) // 2, (tj2 - tm2) // 2
    j3pm, j3mm = (tj3 + tm3) // 2, (tj3 - tm3) // 2
    radicand = Fraction(
        f(a) * f(b) * f(c) * f(j1pm) * f(j1mm) * f(j2pm) * f(j2mm) * f(j3pm) * f(j3mm), f(big)
    )
    k1 = (tj3 - tj2 + tm1) // 2   # j3 - j2 + m1
    k2 = (tj3 - tj1 - tm2) // 2   # j3 - j1 - m2
    s = Fraction(0)
    for k in range(max(0, -k1, -k2), min(a, j1mm, j2pm) + 1):
        term = Fraction(1, f(k) * f(a - k) * f(j1mm - k) * f(j2pm - k) * f(k1 + k) * f(k2 + k))
        s += -term if k % 2 else term
    if s == 0:
        return 0, Fraction(0)
    sign = 1 if s > 0 else -1
    if ((tj1 - tj2 - tm3) // 2) % 2:
        sign = -sign
    return sign, radicand * s * s


def wigner3j(j1: Number, j2: Number, j3: Number, m1: Number, m2: Number, m3: Number) -> float:
    """Wigner 3j symbol ``(j1 j2 j3; m1 m2 m3)``.

    Returns exactly 0.0 whenever a selection rule fails.
    """
    return _wigner3j_doubled(twice(j1), twice(j2), twice(j3), twice(m1), twice(m2), twice(m3))


def wigner3j_exact(j1: Number, j2: Number, j3: Number, m1: Number, m2: Number, m3: Number):
    """Exact 3j symbol as ``(sign, square)`` with value ``sign * sqrt(square)``.

    ``square`` is a :class:`fractions.Fraction`; ``sign`` is 0 for a vanishing symbol.
    """
    return _racah_exact(*(twice(x) for x in (j1, j2, j3, m1, m2, m3)))


def clebsch_gordan(j1: Number, m1: Number, j2: Number, m2: Number, j: Number, m: Number) -> float:
    """``<j1 m1; j2 m2 | j m>`` in the Condon-Shortley convention."""
    tj1, tj2, tj, tm = twice(j1), twice(j2), twice(j), twice(m)
    phase = (tj1 - tj2 + tm) // 2
    value = math.sqrt(tj + 1) * _wigner3j_doubled(tj1, tj2, tj, twice(m1), twice(m2), -tm)
    return -value if phase % 2 else value


def orthogonality_sum(j_g: Number, j_e: Number, j_e2: Number, m_e: Number, m_e2: Number) -> float:
    """Sum over M_g and q of ``3j(J_g,1,J_e;-M_g,q,M_e) * 3j(J_g,1,J_e';-M_g,q,M_e')``.

    Equals ``delta(J_e,J_e') delta(M_e,M_e') / (2 J_e + 1)`` whenever the
    triangle condition allows the coupling.
    """
    tjg, tje, tje2, tme, tme2 = twice(j_g), twice(j_e), twice(j_e2), twice(m_e), twice(m_e2)
    terms = []
    for tmg in range(-tjg, tjg + 1, 2):
        for tq in (-2, 0, 2):
            terms.append(
                _wigner3j_doubled(tjg, 2, tje, -tmg, tq, tme)
                * _wigner3j_doubled(tjg, 2, tje2, -tmg, tq, tme2)
            )
    return math.fsum(terms)
