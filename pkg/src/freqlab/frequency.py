"""Finite frequency prefixes: generators, unit-block decomposition, density.

A frequency here is a strictly increasing finite list of non-negative exact
values. All asymptotic quantities derived from one are reported as
finite-prefix estimates (sequence plus tail maximum), never as limits.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from mpmath import libmp

from .errors import (
    CollisionError,
    SizeError,
    SpanError,
    UndecidableComparisonError,
    WindowError,
)
from .exact import (
    LESS,
    UNIT_KEY,
    AtomRegistry,
    ExactReal,
    Interval,
    _certified_sign,
    _tup_to_fraction,
    compare,
    floor_exact,
)

DEFAULT_SIZE_BUDGET = 1 << 21
DEFAULT_TAIL_WINDOW = 4


@dataclass
class BlockDecomposition:
    """Partition of value indices by unit block: j -> indices with value in [j, j+1)."""

    blocks: dict[int, list[int]]

    def nonempty(self) -> list[int]:
        return sorted(j for j, idx in self.blocks.items() if idx)

    def size(self, j: int) -> int:
        return len(self.blocks.get(j, ()))


class Frequency:
    """Strictly increasing finite list of non-negative exact values."""

    def __init__(self, registry: AtomRegistry, values, provenance=None, validate=True):
        self.registry = registry
        self.values = tuple(values)
        self.provenance = provenance or {"type": "custom"}
        self._blocks: BlockDecomposition | None = None
        if validate:
            self._validate()

    def _validate(self):
        if not self.values:
            return
        first = self.values[0]
        if not first.is_zero() and _certified_sign(first, UndecidableComparisonError) == LESS:
            raise ValueError("frequency values must be non-negative")
        for a, b in zip(self.values, self.values[1:]):
            if compare(a, b) != LESS:
                raise ValueError("frequency values must be strictly increasing")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> ExactReal:
        return self.values[i]

    def blocks(self) -> BlockDecomposition:
        """Exact unit-block decomposition (certified floors)."""
        if self._blocks is None:
            by_j: dict[int, list[int]] = {}
            for i, v in enumerate(self.values):
                by_j.setdefault(floor_exact(v), []).append(i)
            self._blocks = BlockDecomposition(by_j)
        return self._blocks

    def block_values(self, j: int) -> list[ExactReal]:
        return [self.values[i] for i in self.blocks().blocks.get(j, ())]


@dataclass
class DensityProfile:
    """Per-block log-count ratios and the tail-max estimate of the density limit.

    ``tail_max`` estimates the limsup of log(#block_j)/j from the last
    ``tail_window`` nonempty blocks of the finite prefix; it is an estimate,
    never a proof.
    """

    entries: list[tuple[int, int, float]]  # (j, block size, log(size)/j)
    tail_window: int
    tail_max: float
    finite_prefix: bool = True


def density_profile(freq: Frequency, tail_window: int = DEFAULT_TAIL_WINDOW) -> DensityProfile:
    """Block-density sequence log(#block_j)/j for j >= 1 plus its tail maximum."""
    if tail_window < 1:
        raise ValueError("tail_window must be >= 1")
    dec = freq.blocks()
    entries = [
        (j, dec.size(j), math.log(dec.size(j)) / j)
        for j in dec.nonempty()
        if j >= 1
    ]
    if len(entries) < tail_window:
        raise WindowError(
            f"{len(entries)} nonempty blocks with j >= 1, need {tail_window}"
        )
    tail = entries[-tail_window:]
    return DensityProfile(entries, tail_window, max(r for _, _, r in tail))


# ---------------------------------------------------------------------------
# generators


def _spf_sieve(n: int) -> list[int]:
    spf = list(range(n + 1))
    for p in range(2, int(n**0.5) + 1):
        if spf[p] == p:
            for q in range(p * p, n + 1, p):
                if spf[q] == q:
                    spf[q] = p
    return spf


def gen_log_integers(N: int, registry: AtomRegistry | None = None) -> Frequency:
    """The logs of 1..N, each represented exactly over log-prime atoms."""
    if N < 1:
        raise ValueError("N must be >= 1")
    registry = registry or AtomRegistry(provenance=f"log_integers(N={N})")
    spf = _spf_sieve(N)
    values = [registry.zero()]
    for n in range(2, N + 1):
        fac: dict[int, int] = {}
        m = n
        while m > 1:
            p = spf[m]
            fac[p] = fac.get(p, 0) + 1
            m //= p
        terms = tuple(
            (registry.log_prime(p).key, Fraction(e)) for p, e in sorted(fac.items())
        )
        values.append(ExactReal(registry, terms))
    # log is monotone on 1..N, so the order is structural
    return Frequency(registry, values, {"type": "log_integers", "N": N}, validate=False)


def gen_hurwitz(
    alphas,
    box: int,
    cutoff,
    registry: AtomRegistry | None = None,
    size_budget: int = DEFAULT_SIZE_BUDGET,
) -> Frequency:
    """Logs of the lattice sums sum_j alpha_j * m_j, 0 <= m_j <= box.

    Only arguments >= 1 are kept (values stay non-negative) and only values
    below ``cutoff``. Each value is exact over log-prime atoms after factoring
    the rational argument.
    """
    alphas = [Fraction(a) for a in alphas]
    if not alphas or any(a <= 0 for a in alphas):
        raise ValueError("alphas must be a nonempty list of positive rationals")
    if box < 1:
        raise ValueError("box must be >= 1")
    cutoff = Fraction(cutoff)
    if (box + 1) ** len(alphas) > size_budget:
        raise SizeError(
            f"hurwitz enumeration of {(box+1)**len(alphas)} tuples exceeds budget"
        )
    registry = registry or AtomRegistry(
        provenance=f"hurwitz(alphas={[str(a) for a in alphas]},box={box})"
    )
    args: set[Fraction] = set()
    for m in itertools.product(range(box + 1), repeat=len(alphas)):
        s = sum((a * k for a, k in zip(alphas, m)), Fraction(0))
        if s >= 1:
            args.add(s)
    cutoff_value = registry.rational(cutoff)
    values = []
    for arg in sorted(args):
        v = registry.log_of_rational(arg)
        if compare(v, cutoff_value) == LESS:
            values.append(v)
    prov = {
        "type": "hurwitz",
        "alphas": [str(a) for a in alphas],
        "box": box,
        "cutoff": str(cutoff),
    }
    # sorted rational arguments and monotone log fix the order
    return Frequency(registry, values, prov, validate=False)


BAYART_MARGIN = Fraction(255, 256)  # block spacing factor; keeps k*step < 1


def gen_bayart(
    J: int,
    registry: AtomRegistry | None = None,
    size_budget: int = DEFAULT_SIZE_BUDGET,
) -> Frequency:
    """Formal arithmetic progressions of length 2^j + 1 inside each block [j, j+1).

    Block j is start_j + k*step_j for 0 <= k <= 2^j, where start_j and step_j
    are formal atoms (declared jointly Q-li) with numeric enclosures centered
    at j and (255/256)*2^-j.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    total = sum((1 << j) + 1 for j in range(1, J + 1))
    if total > size_budget:
        raise SizeError(f"bayart frequency of {total} values exceeds budget {size_budget}")
    registry = registry or AtomRegistry(provenance=f"bayart(J={J})")
    prec = registry.precision
    half = Fraction(1, 2 ** (prec + 1))
    values = []
    for j in range(1, J + 1):
        start = registry.formal(
            f"start_{j}", "bayart", Interval(j - half, j + half)
        )
        step_center = BAYART_MARGIN / (1 << j)
        step = registry.formal(
            f"step_{j}",
            "bayart",
            Interval(step_center - half / (1 << j), step_center + half / (1 << j)),
        )
        for k in range((1 << j) + 1):
            terms = [(start.key, Fraction(1))]
            if k:
                terms.append((step.key, Fraction(k)))
            terms.sort()
            values.append(ExactReal(registry, tuple(terms)))
    return Frequency(registry, values, {"type": "bayart", "J": J})


def _floor_power_of_two(e: Fraction) -> int:
    """floor(2**e) for rational e >= 0, exact or by certified enclosure."""
    if e.denominator == 1:
        return 1 << e.numerator
    # 2**e is irrational for non-integer rational e, so refinement terminates
    prec = 64
    while True:
        e_lo = libmp.from_rational(e.numerator, e.denominator, prec, "d")
        e_hi = libmp.from_rational(e.numerator, e.denominator, prec, "u")
        ln2_lo = libmp.mpf_log(libmp.from_int(2), prec, "d")
        ln2_hi = libmp.mpf_log(libmp.from_int(2), prec, "u")
        lo = libmp.mpf_exp(libmp.mpf_mul(e_lo, ln2_lo, prec, "d"), prec, "d")
        hi = libmp.mpf_exp(libmp.mpf_mul(e_hi, ln2_hi, prec, "u"), prec, "u")
        flo = math.floor(_tup_to_fraction(lo))
        fhi = math.floor(_tup_to_fraction(hi))
        if flo == fhi:
            return flo
        prec *= 2


def gen_bourgain(
    p,
    J: int,
    seed: int,
    registry: AtomRegistry | None = None,
    size_budget: int = DEFAULT_SIZE_BUDGET,
) -> Frequency:
    """Random sparse blocks j + 2^-j * A_j with #A_j = floor(4^(j/p)).

    A_j is drawn uniformly without replacement from {1, ..., 2^j - 1} with
    Floyd's algorithm, deterministically from (seed, j). Whether a particular
    draw satisfies the moment inequality its construction is modeled on is a
    measured property, not a guarantee.
    """
    p = Fraction(p)
    if p <= 2:
        raise ValueError("p must be > 2")
    if J < 1:
        raise ValueError("J must be >= 1")
    registry = registry or AtomRegistry(
        provenance=f"bourgain(p={p},J={J},seed={seed})"
    )
    values = []
    total = 0
    for j in range(1, J + 1):
        m = (1 << j) - 1
        size = min(_floor_power_of_two(Fraction(2 * j) / p), m)
        total += size
        if total > size_budget:
            raise SizeError("bourgain frequency exceeds size budget")
        rng = random.Random(f"freqlab.bourgain:{seed}:{j}")
        chosen: set[int] = set()
        if size == m:
            chosen = set(range(1, m + 1))
        else:
            for t in range(m - size + 1, m + 1):
                r = rng.randint(1, t)
                if r in chosen:
                    chosen.add(t)
                else:
                    chosen.add(r)
        for n in sorted(chosen):
            values.append(registry.rational(Fraction(j) + Fraction(n, 1 << j)))
    prov = {"type": "bourgain", "p": str(p), "J": J, "seed": seed}
    # within a block n is increasing, across blocks j jumps; order structural
    return Frequency(registry, values, prov, validate=False)


def union(f: Frequency, g: Frequency, disjoint_span: bool = False) -> Frequency:
    """Merge two frequencies onto a fresh registry.

    With ``disjoint_span`` the operands' non-unit atoms must be disjoint and
    the unit atom may appear in at most one of them (a syntactic guarantee
    that the rational spans intersect trivially). Identical values collide.
    """
    used_f = {k for v in f.values for k in v.atom_keys()}
    used_g = {k for v in g.values for k in v.atom_keys()}
    if disjoint_span:
        shared = {k for k in used_f & used_g if k[0] != "unit"}
        if shared:
            raise SpanError(f"operands share non-unit atoms: {sorted(shared)}")
        if UNIT_KEY in used_f and UNIT_KEY in used_g:
            raise SpanError("unit atom appears in both operands")
    merged = AtomRegistry(
        provenance=f"union({f.registry.provenance} | {g.registry.provenance})",
        precision=max(f.registry.precision, g.registry.precision),
        precision_cap=max(f.registry.precision_cap, g.registry.precision_cap),
    )
    for reg in (f.registry, g.registry):
        for atom in reg.atoms():
            merged._intern(atom)

    def remap(v: ExactReal) -> ExactReal:
        return ExactReal(merged, v.terms)

    out = []
    i = jdx = 0
    fv = [remap(v) for v in f.values]
    gv = [remap(v) for v in g.values]
    while i < len(fv) and jdx < len(gv):
        c = compare(fv[i], gv[jdx])
        if c == 0:
            raise CollisionError(f"duplicate value across operands: {fv[i]!r}")
        if c == LESS:
            out.append(fv[i])
            i += 1
        else:
            out.append(gv[jdx])
            jdx += 1
    out.extend(fv[i:])
    out.extend(gv[jdx:])
    prov = {"type": "union", "parts": [f.provenance, g.provenance]}
    return Frequency(merged, out, prov, validate=False)
