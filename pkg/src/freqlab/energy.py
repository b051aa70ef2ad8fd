"""Exact additive energies of finite sets of exact values.

Representation counts r_k(s) (ordered k-tuples summing to s), the k-th
additive energy E_k = sum r_k(s)^2, and the subset supremum of
E_k(A')^(1/2k)/sqrt(#A') that controls the moment-comparison constants.

Three key strategies keep sums exact and affordable:

* ``lattice``  - all values on a rational lattice c*Z + d; sums become
  integer offsets and counts come from integer polynomial convolution.
* ``product``  - all values are logs of positive rationals; sums become exact
  rational products.
* ``generic``  - sums stay coefficient maps.

Every path is exact; budgets convert infeasible requests into loud errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BudgetError, ModeError
from .exact import ExactReal, linear_combine

DEFAULT_BUDGET = 10**7
EXACT_SUBSET_CAP = 20
LOCAL_MOVE_CAP = 2048


# ---------------------------------------------------------------------------
# value tokenization


@dataclass
class _Strategy:
    kind: str  # "lattice" | "product_int" | "product" | "generic"
    tokens: list
    base: ExactReal | None = None  # lattice: value_i = base + offset_i * step
    step: ExactReal | None = None


def _detect_strategy(values: Sequence[ExactReal]) -> _Strategy:
    values = list(values)
    lat = _try_lattice(values)
    if lat is not None:
        return lat
    prod = _try_product(values)
    if prod is not None:
        return prod
    return _Strategy("generic", values)


def _try_lattice(values) -> _Strategy | None:
    v0 = values[0]
    ref = None
    ratios = [Fraction(0)]
    for v in values[1:]:
        d = v - v0
        if ref is None:
            ref = d
            ratios.append(Fraction(1))
            continue
        rk = ref.terms[0][0]
        c_ref = ref.coefficient(rk)
        c_d = d.coefficient(rk)
        if c_ref == 0:
            return None
        q = c_d / c_ref
        if d.terms != ref.scale(q).terms:
            return None
        ratios.append(q)
    if ref is None:  # single value
        return _Strategy("lattice", [0], base=v0, step=v0.registry.rational(1))
    den_lcm = 1
    for q in ratios:
        den_lcm = den_lcm * q.denominator // math.gcd(den_lcm, q.denominator)
    ints = [int(q * den_lcm) for q in ratios]
    g = 0
    for m in ints:
        g = math.gcd(g, m)
    offs = [m // g for m in ints]
    step = ref.scale(Fraction(g, den_lcm))
    omin = min(offs)
    base = v0 + step.scale(omin)
    return _Strategy("lattice", [o - omin for o in offs], base=base, step=step)


def _try_product(values) -> _Strategy | None:
    toks = []
    for v in values:
        q = Fraction(1)
        for key, c in v.terms:
            if key[0] != "log" or c.denominator != 1:
                return None
            q *= Fraction(key[1]) ** c.numerator
        toks.append(q)
    if all(t.denominator == 1 for t in toks):
        return _Strategy("product_int", [t.numerator for t in toks])
    return _Strategy("product", toks)


def _tok_mul(kind: str, a, j: int):
    if kind == "lattice":
        return a * j
    if kind in ("product_int", "product"):
        return a**j
    return a.scale(j)


def _tok_add(kind: str, s, a):
    if kind == "lattice":
        return s + a
    if kind in ("product_int", "product"):
        return s * a
    return s + a


def _tok_identity(kind: str, values):
    if kind == "lattice":
        return 0
    if kind == "product_int":
        return 1
    if kind == "product":
        return Fraction(1)
    return values[0].registry.zero()


# ---------------------------------------------------------------------------
# representation counts and energy


@dataclass
class RepCounts:
    """Counts of ordered k-tuples by their exact sum."""

    k: int
    table: dict[ExactReal, int]

    def total(self) -> int:
        return sum(self.table.values())

    def energy(self) -> int:
        return sum(c * c for c in self.table.values())


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def charge(self, n: int):
        self.used += n
        if self.used > self.limit:
            raise BudgetError(
                f"enumeration budget {self.limit} exceeded; "
                "try the lattice path, a smaller k, or a larger --budget"
            )


def _counts_by_token(strategy: _Strategy, k: int, budget: _Budget) -> dict:
    """r_k over token sums by iterated convolution r_{i+1}(s) = sum_a r_i(s-a)."""
    kind = strategy.kind
    toks = strategy.tokens
    if kind == "lattice":
        return _lattice_counts(toks, k, budget)
    r = {t: 0 for t in toks}
    for t in toks:
        r[t] += 1
    for _ in range(k - 1):
        budget.charge(len(r) * len(toks))
        nxt: dict = {}
        for s, c in r.items():
            for t in toks:
                key = _tok_add(kind, s, t)
                nxt[key] = nxt.get(key, 0) + c
        r = nxt
    return r


def _pack_poly(coeffs: list[int], width: int) -> int:
    b = width // 8
    return int.from_bytes(
        b"".join(c.to_bytes(b, "little") for c in coeffs), "little"
    )


def _unpack_poly(n: int, width: int, length: int) -> list[int]:
    b = width // 8
    raw = n.to_bytes(b * length, "little")
    return [int.from_bytes(raw[i * b : (i + 1) * b], "little") for i in range(length)]


def _poly_mul_counts(a: list[int], b: list[int]) -> list[int]:
    """Exact product of integer polynomials with non-negative coefficients."""
    out_len = len(a) + len(b) - 1
    bound = min(len(a), len(b)) * max(a) * max(b)
    width = ((bound.bit_length() + 8) // 8 + 1) * 8
    prod = _pack_poly(a, width) * _pack_poly(b, width)
    return _unpack_poly(prod, width, out_len)


def _lattice_counts(offsets: list[int], k: int, budget: _Budget) -> dict[int, int]:
    top = max(offsets)
    budget.charge(k * (top + 1))
    poly = [0] * (top + 1)
    for o in offsets:
        poly[o] += 1
    acc = poly
    for _ in range(k - 1):
        acc = _poly_mul_counts(acc, poly)
    return {t: c for t, c in enumerate(acc) if c}


def representation_counts(
    values: Sequence[ExactReal], k: int, budget: int = DEFAULT_BUDGET
) -> RepCounts:
    """Exact table of r_k(s) keyed by the sum value."""
    if k < 1:
        raise ValueError("k must be >= 1")
    values = list(values)
    if not values:
        raise ValueError("representation_counts needs a nonempty set")
    strat = _detect_strategy(values)
    counts = _counts_by_token(strat, k, _Budget(budget))
    table: dict[ExactReal, int] = {}
    if strat.kind == "lattice":
        for t, c in counts.items():
            key = linear_combine([(k, strat.base), (t, strat.step)])
            table[key] = c
    elif strat.kind in ("product", "product_int"):
        reg = values[0].registry
        primes = sorted({key[1] for v in values for key, _ in v.terms})
        for t, c in counts.items():
            table[_log_over_primes(reg, Fraction(t), primes)] = c
    else:
        table = counts
    return RepCounts(k, table)


def _log_over_primes(reg, q: Fraction, primes: list[int]) -> ExactReal:
    """log(q) when q factors over a known prime list (token sums always do)."""
    terms = []
    for sign, n in ((1, q.numerator), (-1, q.denominator)):
        for p in primes:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            if e:
                terms.append((sign * e, reg.log_of_integer(p)))
        if n != 1:
            raise ValueError("token does not factor over the expected primes")
    if not terms:
        return reg.zero()
    return linear_combine(terms)


def additive_energy(
    values: Sequence[ExactReal], k: int, budget: int = DEFAULT_BUDGET
) -> int:
    """E_k: the number of ordered 2k-tuples with equal k-fold sums."""
    if k < 1:
        raise ValueError("k must be >= 1")
    values = list(values)
    if not values:
        raise ValueError("additive_energy needs a nonempty set")
    strat = _detect_strategy(values)
    counts = _counts_by_token(strat, k, _Budget(budget))
    return sum(c * c for c in counts.values())


# ---------------------------------------------------------------------------
# incremental engines for subset search


class _DictEnergy:
    """Maintains r_1..r_k and E_k under element insertion/removal."""

    def __init__(self, kind: str, identity, k: int, budget: _Budget):
        self.kind = kind
        self.k = k
        self.budget = budget
        self.r = [dict() for _ in range(k + 1)]
        self.r[0][identity] = 1
        self.energy = 0
        self.size = 0
        self.members: list = []

    def add(self, tok):
        k, kind = self.k, self.kind
        powers = [None] + [_tok_mul(kind, tok, j) for j in range(1, k + 1)]
        for i in range(k, 0, -1):
            delta: dict = {}
            cost = 0
            for j in range(1, i + 1):
                cmb = math.comb(i, j)
                src = self.r[i - j]
                cost += len(src)
                pj = powers[j]
                for s, c in src.items():
                    key = _tok_add(kind, s, pj)
                    delta[key] = delta.get(key, 0) + cmb * c
            self.budget.charge(cost)
            ri = self.r[i]
            if i == k:
                for key, d in delta.items():
                    old = ri.get(key, 0)
                    self.energy += (old + d) ** 2 - old * old
                    ri[key] = old + d
            else:
                for key, d in delta.items():
                    ri[key] = ri.get(key, 0) + d
        self.size += 1
        self.members.append(tok)

    def remove(self, tok):
        k, kind = self.k, self.kind
        powers = [None] + [_tok_mul(kind, tok, j) for j in range(1, k + 1)]
        self.members.remove(tok)
        for i in range(1, k + 1):
            delta: dict = {}
            cost = 0
            for j in range(1, i + 1):
                cmb = math.comb(i, j)
                src = self.r[i - j]  # already restored for i-j < i
                cost += len(src)
                pj = powers[j]
                for s, c in src.items():
                    key = _tok_add(kind, s, pj)
                    delta[key] = delta.get(key, 0) + cmb * c
            self.budget.charge(cost)
            ri = self.r[i]
            if i == k:
                for key, d in delta.items():
                    old = ri[key]
                    new = old - d
                    self.energy += new * new - old * old
                    if new:
                        ri[key] = new
                    else:
                        del ri[key]
            else:
                for key, d in delta.items():
                    new = ri[key] - d
                    if new:
                        ri[key] = new
                    else:
                        del ri[key]
        self.size -= 1


class _LatticePairEnergy:
    """Dense integer-offset engine for k = 2; O(#set) vectorized per update.

    Budget is charged per 256-lane chunk: dense updates cost a vector
    addition per member, not a keyed product like the dict engine.
    """

    def __init__(self, max_offset: int, budget: _Budget):
        self.r = np.zeros(2 * max_offset + 1, dtype=np.int64)
        self.offsets = np.empty(0, dtype=np.int64)
        self.energy = 0
        self.size = 0
        self.budget = budget

    def add(self, o: int):
        self.budget.charge(self.size // 256 + 1)
        idx = self.offsets + o
        if len(idx):
            rold = self.r[idx]
            self.energy += int(4 * rold.sum()) + 4 * len(idx)
            self.r[idx] += 2
        self.energy += int(2 * self.r[2 * o]) + 1
        self.r[2 * o] += 1
        self.offsets = np.append(self.offsets, o)
        self.size += 1

    def remove(self, o: int):
        self.budget.charge(self.size // 256 + 1)
        keep = self.offsets != o
        rest = self.offsets[keep]
        idx = rest + o
        if len(idx):
            rold = self.r[idx]
            self.energy += int(-4 * rold.sum()) + 4 * len(idx)
            self.r[idx] -= 2
        self.energy += -int(2 * self.r[2 * o]) + 1
        self.r[2 * o] -= 1
        self.offsets = rest
        self.size -= 1


@dataclass
class SubsetEnergySup:
    """Best subset found for the ratio E_k^(1/2k)/sqrt(#subset).

    ``exact`` marks a full enumeration; otherwise the ratio is a lower bound
    on the true supremum.
    """

    indices: list[int]
    k: int
    energy: int
    ratio: float
    log_ratio: float
    exact: bool

    @property
    def lower_bound_only(self) -> bool:
        return not self.exact


def _log_ratio(energy: int, m: int, k: int) -> float:
    return _log_int(energy) / (2 * k) - 0.5 * math.log(m)


def _log_int(n: int) -> float:
    # math.log overflows float conversion for huge exact energies
    if n < 2**53:
        return math.log(n)
    b = n.bit_length() - 53
    return math.log(n >> b) + b * math.log(2)


def subset_energy_sup(
    values: Sequence[ExactReal],
    k: int,
    mode: str = "auto",
    budget: int = DEFAULT_BUDGET,
) -> SubsetEnergySup:
    """Maximize E_k(A')^(1/2k)/sqrt(#A') over nonempty subsets.

    ``exact`` enumerates every subset (input capped at 20 elements);
    ``greedy`` sweeps all prefixes and suffixes of the input order plus local
    add/remove moves, and reports a flagged lower bound. ``auto`` picks exact
    for small inputs.
    """
    values = list(values)
    n = len(values)
    if n == 0:
        raise ValueError("subset_energy_sup needs a nonempty set")
    if k < 1:
        raise ValueError("k must be >= 1")
    if mode == "auto":
        mode = "exact" if n <= 16 else "greedy"
    if mode == "exact":
        if n > EXACT_SUBSET_CAP:
            raise ModeError(
                f"exact subset enumeration capped at {EXACT_SUBSET_CAP} elements, got {n}"
            )
        return _subset_sup_exact(values, k, _Budget(budget))
    if mode == "greedy":
        return _subset_sup_greedy(values, k, _Budget(budget))
    raise ValueError(f"unknown mode {mode!r}")


def _subset_sup_exact(values, k, budget) -> SubsetEnergySup:
    strat = _detect_strategy(values)
    kind = strat.kind
    toks = strat.tokens if kind != "generic" else list(values)
    eng = _DictEnergy(kind, _tok_identity(kind, values), k, budget)
    n = len(values)
    included = [False] * n
    best = None
    # Gray-code walk: consecutive subsets differ in one element
    for i in range(1, 1 << n):
        bit = (i & -i).bit_length() - 1
        if included[bit]:
            eng.remove(toks[bit])
            included[bit] = False
        else:
            eng.add(toks[bit])
            included[bit] = True
        if eng.size:
            lr = _log_ratio(eng.energy, eng.size, k)
            if best is None or lr > best[0] + 1e-15:
                best = (lr, [m for m in range(n) if included[m]], eng.energy)
    lr, idx, energy = best
    return SubsetEnergySup(idx, k, energy, math.exp(lr), lr, exact=True)


def _greedy_caps(kind: str, k: int, budget: _Budget, n: int) -> int:
    if kind == "lattice" and k == 2:
        return n
    return max(1, min(n, int((k * budget.limit) ** (1.0 / k))))


def _make_engine(strat, k, budget, values):
    if strat.kind == "lattice" and k == 2:
        return _LatticePairEnergy(max(strat.tokens), budget)
    return _DictEnergy(strat.kind, _tok_identity(strat.kind, values), k, budget)


def _subset_sup_greedy(values, k, budget) -> SubsetEnergySup:
    strat = _detect_strategy(values)
    toks = strat.tokens if strat.kind != "generic" else list(values)
    n = len(values)
    cap = _greedy_caps(strat.kind, k, budget, n)

    best = None  # (log_ratio, index list, energy)

    def sweep(order):
        nonlocal best
        eng = _make_engine(strat, k, budget, values)
        taken = []
        for pos in order[:cap]:
            eng.add(toks[pos])
            taken.append(pos)
            lr = _log_ratio(eng.energy, eng.size, k)
            if best is None or lr > best[0] + 1e-15:
                best = (lr, sorted(taken), eng.energy)

    sweep(list(range(n)))
    sweep(list(range(n - 1, -1, -1)))

    # local refinement around the best candidate
    if best is not None and len(best[1]) <= LOCAL_MOVE_CAP and n <= 4 * LOCAL_MOVE_CAP:
        current = set(best[1])
        eng = _make_engine(strat, k, budget, values)
        for pos in sorted(current):
            eng.add(toks[pos])
        improved = True
        passes = 0
        while improved and passes < 16:
            improved = False
            passes += 1
            for pos in range(n):
                if pos in current:
                    if eng.size == 1:
                        continue
                    eng.remove(toks[pos])
                    current.discard(pos)
                else:
                    eng.add(toks[pos])
                    current.add(pos)
                lr = _log_ratio(eng.energy, eng.size, k)
                if lr > best[0] + 1e-12:
                    best = (lr, sorted(current), eng.energy)
                    improved = True
                else:  # undo
                    if pos in current:
                        eng.remove(toks[pos])
                        current.discard(pos)
                    else:
                        eng.add(toks[pos])
                        current.add(pos)

    lr, idx, energy = best
    return SubsetEnergySup(idx, k, energy, math.exp(lr), lr, exact=False)
