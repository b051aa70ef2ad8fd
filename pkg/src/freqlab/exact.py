"""Exact arithmetic over a registry of reals declared linearly independent over Q.

A value is a finite rational combination of *atoms*: the rational unit 1,
logarithms of primes, or formal symbols carrying a user-supplied interval
enclosure. Equality is decided exactly from the coefficient maps (sound
because the atoms of one registry are declared Q-linearly independent); order
comparisons fall back on certified interval enclosures, refining precision up
to a configured cap and failing loudly instead of guessing when two distinct
values cannot be separated.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from mpmath import libmp

from .errors import (
    RegistryMismatchError,
    UndecidableComparisonError,
    UndecidableFloorError,
)

DEFAULT_PRECISION = 128
PRECISION_CAP = 1024

LESS, EQUAL, GREATER = -1, 0, 1

UNIT_KEY = ("unit",)


def _tup_to_fraction(t) -> Fraction:
    """Exact value of an mpf endpoint tuple (sign, man, exp, bc)."""
    sign, man, exp, _ = t
    man = int(man)
    v = Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2**-exp)
    return -v if sign else v


@dataclass(frozen=True)
class Interval:
    """Closed interval with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval endpoints out of order")

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other: "Interval") -> "Interval":
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other: "Interval") -> "Interval":
        ps = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(ps), max(ps))

    def scale(self, c: Fraction) -> "Interval":
        if c >= 0:
            return Interval(self.lo * c, self.hi * c)
        return Interval(self.hi * c, self.lo * c)

    @staticmethod
    def point(c: Fraction) -> "Interval":
        c = Fraction(c)
        return Interval(c, c)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def sign(self):
        """-1, 0 or 1 if decided by the endpoints, else None."""
        if self.lo > 0:
            return GREATER
        if self.hi < 0:
            return LESS
        if self.lo == self.hi == 0:
            return EQUAL
        return None

    def __float__(self) -> float:
        return float(self.mid)


@functools.lru_cache(maxsize=None)
def _log_enclosure(n: int, prec: int) -> Interval:
    """Certified enclosure of ln(n) at `prec` bits, endpoints exact rationals."""
    lo = libmp.mpf_log(libmp.from_int(n), prec + 8, "d")
    hi = libmp.mpf_log(libmp.from_int(n), prec + 8, "u")
    return Interval(_tup_to_fraction(lo), _tup_to_fraction(hi))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class Atom:
    """One declared-independent basis element of a registry.

    ``key`` doubles as the identity and the canonical sort key:
    ``("unit",)``, ``("log", p)`` or ``("formal", namespace, label)``.
    """

    key: tuple
    enclosure: Interval | None = None  # fixed enclosure; formal atoms only

    @property
    def kind(self) -> str:
        return self.key[0]

    def enclosure_at(self, prec: int) -> Interval:
        if self.kind == "unit":
            return Interval.point(Fraction(1))
        if self.kind == "log":
            return _log_enclosure(self.key[1], prec)
        return self.enclosure

    @property
    def refinable(self) -> bool:
        return self.kind == "log"

    def describe(self) -> str:
        if self.kind == "unit":
            return "1"
        if self.kind == "log":
            return f"log {self.key[1]}"
        return f"{self.key[2]}@{self.key[1]}"


class AtomRegistry:
    """Interning table of atoms plus the Q-linear-independence declaration.

    Atoms are append-only and values never mutate, so registries are safe to
    share across workers. The independence of formal atoms is an assumption
    recorded in ``provenance``, never verified.
    """

    def __init__(
        self,
        provenance: str = "",
        precision: int = DEFAULT_PRECISION,
        precision_cap: int = PRECISION_CAP,
    ):
        self._atoms: dict[tuple, Atom] = {}
        self.provenance = provenance
        self.precision = precision
        self.precision_cap = precision_cap

    def __contains__(self, key: tuple) -> bool:
        return key in self._atoms

    def __len__(self) -> int:
        return len(self._atoms)

    def atom(self, key: tuple) -> Atom:
        return self._atoms[key]

    def atoms(self) -> list[Atom]:
        return [self._atoms[k] for k in sorted(self._atoms)]

    def unit(self) -> Atom:
        return self._intern(Atom(UNIT_KEY))

    def log_prime(self, p: int) -> Atom:
        if not _is_prime(p):
            raise ValueError(f"log atom requires a prime, got {p}")
        return self._intern(Atom(("log", p)))

    def formal(self, label: str, namespace: str, enclosure: Interval) -> Atom:
        if enclosure.width <= 0:
            raise ValueError("formal atoms need an enclosure of positive width")
        return self._intern(Atom(("formal", namespace, label), enclosure))

    def _intern(self, atom: Atom) -> Atom:
        existing = self._atoms.get(atom.key)
        if existing is not None:
            if existing.enclosure != atom.enclosure:
                raise RegistryMismatchError(
                    f"atom {atom.key} redeclared with a different enclosure"
                )
            return existing
        self._atoms[atom.key] = atom
        return atom

    # -- value constructors ------------------------------------------------

    def zero(self) -> "ExactReal":
        return ExactReal(self, ())

    def rational(self, c) -> "ExactReal":
        c = Fraction(c)
        if c == 0:
            return self.zero()
        return ExactReal(self, ((self.unit().key, c),))

    def log_of_integer(self, n: int) -> "ExactReal":
        """ln(n) for n >= 1, represented over log-prime atoms by factoring."""
        if n < 1:
            raise ValueError("log_of_integer requires n >= 1")
        terms = {}
        m = n
        f = 2
        while f * f <= m:
            while m % f == 0:
                terms[f] = terms.get(f, 0) + 1
                m //= f
            f += 1 if f == 2 else 2
        if m > 1:
            terms[m] = terms.get(m, 0) + 1
        items = []
        for p in sorted(terms):
            items.append((self.log_prime(p).key, Fraction(terms[p])))
        return ExactReal(self, tuple(items))

    def log_of_rational(self, q) -> "ExactReal":
        q = Fraction(q)
        if q <= 0:
            raise ValueError("log_of_rational requires a positive argument")
        return self.log_of_integer(q.numerator) - self.log_of_integer(q.denominator)

    def value(self, terms: Iterable[tuple[Atom, Fraction]]) -> "ExactReal":
        acc: dict[tuple, Fraction] = {}
        for atom, c in terms:
            self._intern(atom)
            c = Fraction(c)
            if c:
                acc[atom.key] = acc.get(atom.key, Fraction(0)) + c
        return ExactReal(self, tuple(sorted((k, c) for k, c in acc.items() if c)))


class ExactReal:
    """A rational combination of registry atoms; the exact zero is the empty map."""

    __slots__ = ("registry", "terms", "_hash")

    def __init__(self, registry: AtomRegistry, terms: tuple):
        self.registry = registry
        self.terms = terms  # sorted tuple of (atom key, nonzero Fraction)
        self._hash = None

    # -- structure ----------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_rational(self) -> bool:
        return all(k == UNIT_KEY for k, _ in self.terms)

    def rational_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_rational():
            raise ValueError("value is not represented as a plain rational")
        return self.terms[0][1]

    def coefficient(self, key: tuple) -> Fraction:
        for k, c in self.terms:
            if k == key:
                return c
        return Fraction(0)

    def atom_keys(self) -> list[tuple]:
        return [k for k, _ in self.terms]

    # -- arithmetic ----------------------------------------------------------

    def _check_registry(self, other: "ExactReal"):
        if self.registry is not other.registry:
            raise RegistryMismatchError("values from different registries were mixed")

    def __add__(self, other: "ExactReal") -> "ExactReal":
        self._check_registry(other)
        acc = dict(self.terms)
        for k, c in other.terms:
            s = acc.get(k, Fraction(0)) + c
            if s:
                acc[k] = s
            else:
                acc.pop(k, None)
        return ExactReal(self.registry, tuple(sorted(acc.items())))

    def __sub__(self, other: "ExactReal") -> "ExactReal":
        return self + other.scale(-1)

    def scale(self, c) -> "ExactReal":
        c = Fraction(c)
        if c == 0:
            return ExactReal(self.registry, ())
        return ExactReal(self.registry, tuple((k, v * c) for k, v in self.terms))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactReal):
            return NotImplemented
        return self.registry is other.registry and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.terms)
        return self._hash

    # -- numerics -------------------------------------------------------------

    def enclosure(self, prec: int | None = None) -> Interval:
        prec = prec or self.registry.precision
        acc = Interval.point(Fraction(0))
        for k, c in self.terms:
            acc = acc + self.registry.atom(k).enclosure_at(prec).scale(c)
        return acc

    def refinable(self) -> bool:
        return any(self.registry.atom(k).refinable for k, _ in self.terms)

    def __float__(self) -> float:
        return float(self.enclosure(64))

    def __repr__(self):
        if not self.terms:
            return "ExactReal<0>"
        parts = [
            f"{c}*{self.registry.atom(k).describe()}" for k, c in self.terms
        ]
        return "ExactReal<" + " + ".join(parts) + ">"


def linear_combine(terms: Sequence[tuple]) -> ExactReal:
    """Exact rational combination sum(c_i * x_i) of values on one registry."""
    terms = list(terms)
    if not terms:
        raise ValueError("linear_combine needs at least one term")
    registry = terms[0][1].registry
    acc: dict[tuple, Fraction] = {}
    for c, x in terms:
        if x.registry is not registry:
            raise RegistryMismatchError("values from different registries were mixed")
        c = Fraction(c)
        for k, v in x.terms:
            s = acc.get(k, Fraction(0)) + c * v
            if s:
                acc[k] = s
            else:
                acc.pop(k, None)
    return ExactReal(registry, tuple(sorted(acc.items())))


def _certified_sign(x: ExactReal, error: type) -> int:
    """Sign of a value known to be nonzero, by enclosure refinement."""
    if x.is_rational():
        c = x.rational_value()
        return GREATER if c > 0 else LESS
    prec = x.registry.precision
    while True:
        s = x.enclosure(prec).sign()
        if s is not None and s != EQUAL:
            return s
        if not x.refinable() or prec >= x.registry.precision_cap:
            raise error(
                f"enclosure of {x!r} straddles zero at precision cap "
                f"{x.registry.precision_cap}"
            )
        prec = min(2 * prec, x.registry.precision_cap)


def compare(a: ExactReal, b: ExactReal) -> int:
    """LESS/EQUAL/GREATER; EQUAL iff the coefficient maps are identical."""
    a._check_registry(b)
    if a.terms == b.terms:
        return EQUAL
    return _certified_sign(a - b, UndecidableComparisonError)


def floor_exact(x: ExactReal) -> int:
    """Certified floor; exact for plain rationals."""
    if x.is_rational():
        return math.floor(x.rational_value())
    prec = x.registry.precision
    while True:
        iv = x.enclosure(prec)
        flo, fhi = math.floor(iv.lo), math.floor(iv.hi)
        if flo == fhi:
            return flo
        if not x.refinable() or prec >= x.registry.precision_cap:
            raise UndecidableFloorError(
                f"enclosure of {x!r} straddles an integer at precision cap "
                f"{x.registry.precision_cap}"
            )
        prec = min(2 * prec, x.registry.precision_cap)


def _rational_gcd(values: Sequence[Fraction]) -> Fraction:
    """Largest rational g with every value an integer multiple of g.

    With lowest-term inputs this is gcd(numerators)/lcm(denominators), and the
    resulting integer multipliers have overall gcd 1.
    """
    num = 0
    den = 1
    for v in values:
        num = math.gcd(num, v.numerator)
        den = den * v.denominator // math.gcd(den, v.denominator)
    if num == 0:
        raise ValueError("rational gcd of all-zero values is undefined")
    return Fraction(num, den)


def qli_basis(values: Sequence[ExactReal]) -> tuple[list[ExactReal], list[list[int]]]:
    """Q-basis of the rational span of ``values`` plus an integer exponent matrix.

    Returns ``(basis, R)`` with ``values[i] == sum_m R[i][m] * basis[m]``
    exactly. Each basis element is scaled so the exponents of every column are
    integers with overall gcd 1. Exact rational Gaussian elimination; the basis
    order follows the first value in which each new direction appears.
    """
    values = list(values)
    if not values:
        raise ValueError("qli_basis needs at least one value")
    registry = values[0].registry
    for v in values[1:]:
        if v.registry is not registry:
            raise RegistryMismatchError("values from different registries were mixed")

    atom_keys = sorted({k for v in values for k in v.atom_keys()})
    index = {k: i for i, k in enumerate(atom_keys)}
    dim = len(atom_keys)

    pivots: list[int] = []  # pivot column of each basis row
    rows: list[list[Fraction]] = []  # echelon rows, pivot coefficient 1
    coords: list[list[Fraction]] = []

    for v in values:
        vec = [Fraction(0)] * dim
        for k, c in v.terms:
            vec[index[k]] = c
        cs = [Fraction(0)] * len(rows)
        for m, (p, row) in enumerate(zip(pivots, rows)):
            c = vec[p]
            if c:
                cs[m] = c
                for i in range(dim):
                    vec[i] -= c * row[i]
        lead = next((i for i, c in enumerate(vec) if c), None)
        if lead is not None:
            lead_coeff = vec[lead]
            inv = 1 / lead_coeff
            rows.append([c * inv for c in vec])
            pivots.append(lead)
            cs.append(lead_coeff)
        coords.append(cs)

    n_basis = len(rows)
    for cs in coords:
        cs.extend([Fraction(0)] * (n_basis - len(cs)))

    basis: list[ExactReal] = []
    exponents: list[list[int]] = [[0] * n_basis for _ in values]
    for m in range(n_basis):
        col = [coords[i][m] for i in range(len(values))]
        nz = [c for c in col if c]
        g = _rational_gcd(nz)
        scaled = ExactReal(
            registry,
            tuple(
                (atom_keys[i], rows[m][i] * g)
                for i in range(dim)
                if rows[m][i]
            ),
        )
        basis.append(scaled)
        for i, c in enumerate(col):
            q = c / g
            assert q.denominator == 1
            exponents[i][m] = int(q)
    return basis, exponents
