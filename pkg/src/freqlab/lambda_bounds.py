"""Certified lower/upper bounds on the best constant comparing q- and p-norms
of polynomials supported on a finite value set.

Lower bounds come from subset energies (the all-ones witness) or from
numerical ascent over coefficient vectors; upper bounds from the counting
(Nikolskii) inequality or from the energy supremum times an unspecified
universal constant, in which case they carry a caveat flag and are excluded
from any violation verdict.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .energy import (
    DEFAULT_BUDGET,
    SubsetEnergySup,
    _detect_strategy,
    subset_energy_sup,
)
from .errors import ExponentDomainError
from .exact import ExactReal

INF = math.inf


def _inv(x) -> Fraction:
    """1/x as an exact rational, with 1/inf = 0."""
    if x == INF:
        return Fraction(0)
    x = Fraction(x)
    if x <= 0:
        raise ExponentDomainError(f"exponent must be positive, got {x}")
    return 1 / x


@dataclass(frozen=True)
class PowerProduct:
    """Exact positive real of the form prod(base_i ** exp_i)."""

    factors: tuple[tuple[Fraction, Fraction], ...]

    @staticmethod
    def of(*factors) -> "PowerProduct":
        return PowerProduct(
            tuple((Fraction(b), Fraction(e)) for b, e in factors if Fraction(e) != 0)
        )

    def __float__(self) -> float:
        out = 1.0
        for b, e in self.factors:
            out *= float(b) ** float(e)
        return out

    def pow(self, a: Fraction) -> "PowerProduct":
        a = Fraction(a)
        return PowerProduct(tuple((b, e * a) for b, e in self.factors))

    def log(self) -> float:
        return sum(float(e) * math.log(b) for b, e in self.factors)

    def as_rational(self, factor_limit: int = 10**12) -> Fraction | None:
        """The exact rational value, when the prime exponents all turn out integral."""
        primes: dict[int, Fraction] = {}
        for b, e in self.factors:
            for n, sign in ((b.numerator, 1), (b.denominator, -1)):
                if n > factor_limit:
                    if e.denominator == 1:
                        primes[n] = primes.get(n, Fraction(0)) + sign * e
                        continue
                    return None
                f = 2
                while f * f <= n:
                    while n % f == 0:
                        primes[f] = primes.get(f, Fraction(0)) + sign * e
                        n //= f
                    f += 1 if f == 2 else 2
                if n > 1:
                    primes[n] = primes.get(n, Fraction(0)) + sign * e
        out = Fraction(1)
        for p, e in primes.items():
            if e.denominator != 1:
                return None
            out *= Fraction(p) ** e.numerator
        return out


@dataclass
class Bound:
    """One side of a constant estimate, with provenance and caveat flags."""

    value: float
    method: str
    power: PowerProduct | None = None
    caveats: tuple[str, ...] = ()

    @property
    def caveat_free(self) -> bool:
        return not self.caveats


@dataclass
class LambdaBoundReport:
    descriptor: str
    set_size: int
    p: float
    q: float
    lower: Bound
    upper: Bound
    witness: dict | None = None

    def consistent(self) -> bool:
        if self.lower.caveat_free and self.upper.caveat_free:
            return self.lower.value <= self.upper.value * (1 + 1e-12)
        return True


def lambda_lower_energy(
    values,
    k: int,
    mode: str = "auto",
    budget: int = DEFAULT_BUDGET,
) -> tuple[Bound, SubsetEnergySup]:
    """Lower bound on the (2k, 2) constant from the subset-energy supremum.

    Valid regardless of search mode (any subset is a witness); greedy mode
    only affects tightness.
    """
    sup = subset_energy_sup(values, k, mode=mode, budget=budget)
    m = len(sup.indices)
    power = PowerProduct.of((sup.energy, Fraction(1, 2 * k)), (m, Fraction(-1, 2)))
    bound = Bound(
        value=math.exp(sup.log_ratio),
        method=f"energy-subset-sup[{'exact' if sup.exact else 'greedy'}]",
        power=power,
    )
    return bound, sup


def lambda_upper_nikolskii(set_size: int, p, q) -> Bound:
    """(#A)^(1/p - 1/q); needs 1 <= p <= 2 and p <= q <= inf."""
    ip, iq = _inv(p), _inv(q)
    if not (Fraction(1, 2) <= ip <= 1):
        raise ExponentDomainError(f"p must lie in [1, 2], got {p}")
    if iq > ip:
        raise ExponentDomainError(f"q must be >= p, got p={p}, q={q}")
    e = ip - iq
    power = PowerProduct.of((set_size, e))
    return Bound(float(power), f"nikolskii[#A^{e}]", power)


def lambda_upper_energy(
    values,
    k: int,
    mode: str = "auto",
    budget: int = DEFAULT_BUDGET,
) -> tuple[Bound, SubsetEnergySup]:
    """sqrt(log(#A+2)) times the subset-energy sup, up to a universal constant.

    Reported with C = 1 and a constant caveat; never used to certify a
    violation. Greedy search adds a second caveat since it underestimates the
    supremum.
    """
    sup = subset_energy_sup(values, k, mode=mode, budget=budget)
    n = len(values)
    caveats = ["unspecified-universal-constant"]
    if not sup.exact:
        caveats.append("greedy-sup-underestimates")
    value = math.sqrt(math.log(n + 2)) * math.exp(sup.log_ratio)
    return (
        Bound(value, "energy-sup log-factor upper (C=1)", None, tuple(caveats)),
        sup,
    )


def interpolation_exponent(source_pq, target_pq) -> Fraction:
    """alpha with Lambda(target) <= Lambda(source)^alpha."""
    p2, q2 = source_pq
    p1, q1 = target_pq
    ip1, iq1, ip2, iq2 = _inv(p1), _inv(q1), _inv(p2), _inv(q2)
    if not (ip1 >= ip2 > iq2):
        raise ExponentDomainError(
            f"need 0 < p1 <= p2 < q2, got p1={p1}, p2={p2}, q2={q2}"
        )
    if not (ip1 >= iq1 >= iq2):
        raise ExponentDomainError(f"need p1 <= q1 <= q2, got q1={q1}")
    return (ip1 - iq1) / (ip2 - iq2)


def interpolate_bound(source: Bound, source_pq, target_pq) -> Bound:
    """Transfer an upper bound between exponent pairs; exact on power forms."""
    alpha = interpolation_exponent(source_pq, target_pq)
    power = source.power.pow(alpha) if source.power is not None else None
    value = float(power) if power is not None else source.value ** float(alpha)
    return Bound(
        value,
        f"interpolated[alpha={alpha}] <- {source.method}",
        power,
        source.caveats,
    )


# ---------------------------------------------------------------------------
# ascent lower bound


class _MomentObjective:
    """||D||_{2k}^{2k} as a polynomial in the coefficients, with gradient.

    Products of k coefficients are grouped by the exact k-fold sum of their
    support values; the objective and its holomorphic derivative are evaluated
    with numpy over that fixed structure.
    """

    def __init__(self, values, k: int):
        n = len(values)
        self.n = n
        self.k = k
        strat = _detect_strategy(list(values))
        toks = strat.tokens if strat.kind != "generic" else list(values)
        from .energy import _tok_add  # local import to avoid cycle noise

        msets = list(itertools.combinations_with_replacement(range(n), k))
        kfact = math.factorial(k)
        kappa = []
        keys = []
        for combo in msets:
            mult = kfact
            for c in Counter(combo).values():
                mult //= math.factorial(c)
            kappa.append(mult)
            key = None
            for i in combo:
                key = toks[i] if key is None else _tok_add(strat.kind, key, toks[i])
            keys.append(key)
        uniq = {key: g for g, key in enumerate(dict.fromkeys(keys))}
        self.idx = np.array(msets, dtype=np.int64)
        self.kappa = np.array(kappa, dtype=np.float64)
        self.grp = np.array([uniq[key] for key in keys], dtype=np.int64)
        self.n_groups = len(uniq)

    def value_and_grad(self, a: np.ndarray):
        prods = np.prod(a[self.idx], axis=1)
        c = np.zeros(self.n_groups, dtype=np.complex128)
        np.add.at(c, self.grp, self.kappa * prods)
        f = float((c.conj() * c).real.sum())
        cbar = c.conj()[self.grp] * self.kappa
        grad = np.zeros(self.n, dtype=np.complex128)
        for pos in range(self.k):
            loo = np.ones(len(self.idx), dtype=np.complex128)
            for other in range(self.k):
                if other != pos:
                    loo *= a[self.idx[:, other]]
            np.add.at(grad, self.idx[:, pos], cbar * loo)
        # steepest ascent direction in the real parametrization is conj(grad)
        return f, grad.conj()


def lambda_lower_ascent(
    values,
    q: int,
    restarts: int = 32,
    seed: int = 0,
    budget: int = DEFAULT_BUDGET,
    max_iters: int = 200,
) -> tuple[Bound, np.ndarray]:
    """Maximize ||D||_q / ||D||_2 over unit coefficient vectors, q in {4, 6, 8}.

    Projected gradient ascent on the exact even-moment objective with
    backtracking and multi-restart; one restart starts from the all-ones
    indicator of the best energy subset, so the result is never worse than
    the energy lower bound (up to float rounding). Always a valid lower bound.
    """
    if q not in (4, 6, 8):
        raise ExponentDomainError(f"ascent supports even q in {{4, 6, 8}}, got {q}")
    values = list(values)
    n = len(values)
    k = q // 2
    obj = _MomentObjective(values, k)
    _, sup = lambda_lower_energy(values, k, budget=budget)

    from .dirichletpoly import _substream

    starts = []
    witness0 = np.zeros(n, dtype=np.complex128)
    witness0[sup.indices] = 1.0
    starts.append(witness0 / np.linalg.norm(witness0))
    starts.append(np.ones(n, dtype=np.complex128) / math.sqrt(n))
    rng = _substream(seed, "ascent")
    for _ in range(max(0, restarts - len(starts))):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        starts.append(v / np.linalg.norm(v))

    best_f = -1.0
    best_a = starts[0]
    for a0 in starts:
        a = a0.copy()
        f, g = obj.value_and_grad(a)
        step = 0.1
        for _ in range(max_iters):
            trial = a + step * g
            trial /= np.linalg.norm(trial)
            ft, gt = obj.value_and_grad(trial)
            if ft > f * (1 + 1e-14):
                if ft < f * (1 + 1e-12):
                    a, f, g = trial, ft, gt
                    break
                a, f, g = trial, ft, gt
                step *= 1.5
            else:
                step *= 0.5
                if step < 1e-14:
                    break
        if f > best_f:
            best_f = f
            best_a = a
    ratio = best_f ** (1.0 / q)
    bound = Bound(ratio, f"ascent[q={q},restarts={len(starts)}]")
    return bound, best_a
