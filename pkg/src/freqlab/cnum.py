"""Complex numbers with exact rational parts, and their certified-interval twins.

The interval variants carry exact rational endpoints; the only outward-rounded
steps in the whole library are the elementary enclosures produced here
(exp, log, rational powers), each computed with directed rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from mpmath import libmp

from .exact import ExactReal, Interval, _tup_to_fraction


@dataclass(frozen=True)
class RationalComplex:
    """Complex number with exact rational real and imaginary parts."""

    re: Fraction
    im: Fraction

    @staticmethod
    def of(re, im=0) -> "RationalComplex":
        return RationalComplex(Fraction(re), Fraction(im))

    def __add__(self, other: "RationalComplex") -> "RationalComplex":
        return RationalComplex(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "RationalComplex") -> "RationalComplex":
        return RationalComplex(self.re - other.re, self.im - other.im)

    def __mul__(self, other: "RationalComplex") -> "RationalComplex":
        return RationalComplex(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def conjugate(self) -> "RationalComplex":
        return RationalComplex(self.re, -self.im)

    def scale(self, c: Fraction) -> "RationalComplex":
        return RationalComplex(self.re * c, self.im * c)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))


RC_ZERO = RationalComplex(Fraction(0), Fraction(0))
RC_ONE = RationalComplex(Fraction(1), Fraction(0))


@dataclass(frozen=True)
class ComplexInterval:
    """Rectangular complex enclosure with exact rational endpoints."""

    re: Interval
    im: Interval

    @staticmethod
    def of(z: RationalComplex) -> "ComplexInterval":
        return ComplexInterval(Interval.point(z.re), Interval.point(z.im))

    def __add__(self, other: "ComplexInterval") -> "ComplexInterval":
        return ComplexInterval(self.re + other.re, self.im + other.im)

    def __mul__(self, other: "ComplexInterval") -> "ComplexInterval":
        return ComplexInterval(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    def scale_interval(self, s: Interval) -> "ComplexInterval":
        return ComplexInterval(self.re * s, self.im * s)

    def abs2(self) -> Interval:
        re2 = _interval_square(self.re)
        im2 = _interval_square(self.im)
        return re2 + im2


def _interval_square(iv: Interval) -> Interval:
    if iv.lo >= 0:
        return Interval(iv.lo * iv.lo, iv.hi * iv.hi)
    if iv.hi <= 0:
        return Interval(iv.hi * iv.hi, iv.lo * iv.lo)
    m = max(iv.lo * iv.lo, iv.hi * iv.hi)
    return Interval(Fraction(0), m)


def _frac_tuple(x: Fraction, prec: int, rnd: str):
    return libmp.from_rational(x.numerator, x.denominator, prec, rnd)


def exp_enclosure(x: Interval, prec: int = 128) -> Interval:
    """Certified enclosure of exp over a rational interval."""
    lo = libmp.mpf_exp(_frac_tuple(x.lo, prec + 8, "d"), prec + 8, "d")
    hi = libmp.mpf_exp(_frac_tuple(x.hi, prec + 8, "u"), prec + 8, "u")
    return Interval(_tup_to_fraction(lo), _tup_to_fraction(hi))


def log_enclosure_of(x: Interval, prec: int = 128) -> Interval:
    if x.lo <= 0:
        raise ValueError("log enclosure requires a positive interval")
    lo = libmp.mpf_log(_frac_tuple(x.lo, prec + 8, "d"), prec + 8, "d")
    hi = libmp.mpf_log(_frac_tuple(x.hi, prec + 8, "u"), prec + 8, "u")
    return Interval(_tup_to_fraction(lo), _tup_to_fraction(hi))


def pow_enclosure(x: Interval, e: Fraction, prec: int = 128) -> Interval:
    """Certified x**e for a positive rational interval and rational exponent."""
    e = Fraction(e)
    if x.lo < 0:
        raise ValueError("power enclosure requires a non-negative interval")
    if x.lo == 0:
        if e < 0:
            raise ValueError("negative power of an interval touching zero")
        hi = pow_enclosure(Interval(x.hi, x.hi), e, prec).hi if x.hi > 0 else Fraction(0)
        return Interval(Fraction(0), hi)
    if e == 0:
        return Interval.point(Fraction(1))
    if e.denominator == 1 and 0 < e.numerator <= 8:
        out = Interval.point(Fraction(1))
        for _ in range(e.numerator):
            out = out * x
        return out
    le = log_enclosure_of(x, prec).scale(e)
    return exp_enclosure(le, prec)


def exp_of_value(x: ExactReal, scale: Fraction = Fraction(1), prec: int | None = None) -> Interval:
    """Certified enclosure of exp(scale * x) for an exact value."""
    prec = prec or x.registry.precision
    return exp_enclosure(x.enclosure(prec).scale(Fraction(scale)), prec)
