"""Block-localized asymptotic profiles.

Everything here is a finite-prefix diagnostic: per-block quantities are
computed exactly or as flagged bounds, and limit-type numbers are reported as
(sequence, tail maximum over a configurable window), never as proven limits.

The tail of the hypercontractivity index runs over the last window of block
*positions* up to ``j_max``; an empty block carries no additive structure and
contributes 0, exactly like a singleton.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .energy import DEFAULT_BUDGET, subset_energy_sup
from .errors import ExponentDomainError, ProfileError
from .frequency import DEFAULT_TAIL_WINDOW, Frequency, density_profile
from .lambda_bounds import (
    Bound,
    interpolation_exponent,
    lambda_lower_ascent,
    lambda_lower_energy,
    lambda_upper_nikolskii,
)

EXACT_BLOCK_CAP = 16  # automatic exact subset enumeration below this size
ASCENT_BLOCK_CAP = 24  # ascent refinement of per-block lower bounds below this


@dataclass
class TProfileEntry:
    j: int
    size: int
    lower: float
    lower_log_rate: float
    lower_method: str
    upper: float
    upper_log_rate: float
    upper_method: str


@dataclass
class TProfile:
    """Per-block two-sided constants for one exponent pair, plus tail maxima."""

    p: float
    q: float
    certified: bool
    entries: list[TProfileEntry]
    tail_window: int
    tail_lower: float
    tail_upper: float
    caveats: tuple[str, ...] = ()


def _block_t_entry(args):
    (j, values, k, budget, use_ascent, restarts, seed) = args
    mode = "exact" if len(values) <= EXACT_BLOCK_CAP else "greedy"
    lower, _ = lambda_lower_energy(values, k, mode=mode, budget=budget)
    method = lower.method
    lv = lower.value
    if use_ascent and len(values) <= ASCENT_BLOCK_CAP:
        asc, _ = lambda_lower_ascent(values, 2 * k, restarts=restarts, seed=seed)
        if asc.value > lv:
            lv = asc.value
            method = asc.method
    upper = lambda_upper_nikolskii(len(values), 2, 2 * k)
    return TProfileEntry(
        j,
        len(values),
        lv,
        math.log(max(lv, 1.0)) / j,
        method,
        upper.value,
        math.log(max(upper.value, 1.0)) / j,
        upper.method,
    )


def t_profile(
    freq: Frequency,
    p,
    q,
    j_max: int | None = None,
    tail_window: int = DEFAULT_TAIL_WINDOW,
    budget: int = DEFAULT_BUDGET,
    use_ascent: bool = False,
    restarts: int = 8,
    seed: int = 0,
    jobs: int = 1,
) -> TProfile:
    """Per-block log-rate bounds whose tail estimates the translation gap.

    Certified two-sided bounds need p = 2 and even q >= 4; other pairs with
    1 <= p <= 2 get the counting upper bound only and are stamped
    numeric-only. Empty blocks are skipped.
    """
    pf, qf = float(p), float(q)
    certified = pf == 2.0 and qf == int(qf) and int(qf) % 2 == 0 and qf >= 4
    if not certified and not (1 <= pf <= 2 and pf <= qf):
        raise ExponentDomainError(f"unsupported exponent pair ({p}, {q})")
    dec = freq.blocks()
    top = j_max if j_max is not None else max(dec.nonempty(), default=0)
    js = [j for j in range(1, top + 1) if dec.size(j)]
    if not js:
        raise ProfileError("no nonempty blocks with j >= 1")

    if certified:
        k = int(qf) // 2
        tasks = [
            (j, freq.block_values(j), k, budget, use_ascent, restarts, seed)
            for j in js
        ]
        if jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
                entries = list(ex.map(_block_t_entry, tasks))
        else:
            entries = [_block_t_entry(t) for t in tasks]
        caveats = ()
    else:
        entries = []
        for j in js:
            size = dec.size(j)
            upper = lambda_upper_nikolskii(size, pf, qf)
            entries.append(
                TProfileEntry(
                    j,
                    size,
                    1.0,
                    0.0,
                    "trivial lower (constant >= 1)",
                    upper.value,
                    math.log(max(upper.value, 1.0)) / j,
                    upper.method,
                )
            )
        caveats = ("numeric-only exponent pair",)

    tail = entries[-tail_window:]
    return TProfile(
        pf,
        qf,
        certified,
        entries,
        tail_window,
        max(e.lower_log_rate for e in tail),
        max(e.upper_log_rate for e in tail),
        caveats,
    )


# ---------------------------------------------------------------------------
# hypercontractivity index


@dataclass
class HyperEntry:
    j: int
    size: int
    h: float
    exact: bool
    subset_size: int


@dataclass
class HyperProfile:
    """Per-position index h_j plus tail-max, growth guard sample, and verdict."""

    k: int
    entries: list[HyperEntry]
    tail_window: int
    tail_max: float
    growth_guard: float
    threshold: float
    verdict: str


def _block_hyper_entry(args):
    (j, values, k, budget) = args
    if not values:
        return HyperEntry(j, 0, 0.0, True, 0)
    mode = "exact" if len(values) <= EXACT_BLOCK_CAP else "greedy"
    sup = subset_energy_sup(values, k, mode=mode, budget=budget)
    return HyperEntry(j, len(values), sup.log_ratio / j, sup.exact, len(sup.indices))


def hyper_index(
    freq: Frequency,
    k: int,
    j_max: int | None = None,
    tail_window: int = DEFAULT_TAIL_WINDOW,
    budget: int = DEFAULT_BUDGET,
    threshold: float = 0.02,
    jobs: int = 1,
) -> HyperProfile:
    """Subset-energy growth index h_j per block position.

    h_j is the best value of log(E_k(A)^(1/k)/#A)/(2j) over searched subsets
    of block j (exact enumeration for small blocks, budgeted greedy sweep for
    large ones; greedy values are lower bounds). The verdict compares the
    tail-max against ``threshold``; the growth guard samples
    loglog(n)/value_n over the tail blocks and is reported, not asserted.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    dec = freq.blocks()
    top = j_max if j_max is not None else max(dec.nonempty(), default=0)
    if top < 1:
        raise ProfileError("no blocks with j >= 1")
    tasks = [(j, freq.block_values(j), k, budget) for j in range(1, top + 1)]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
            entries = list(ex.map(_block_hyper_entry, tasks))
    else:
        entries = [_block_hyper_entry(t) for t in tasks]

    tail = entries[-tail_window:]
    tail_max = max(e.h for e in tail)

    guard = 0.0
    tail_js = {e.j for e in tail if e.size}
    if tail_js:
        offset = 0
        for j in sorted(dec.blocks):
            for i in dec.blocks[j]:
                n = i + 1
                if j in tail_js and n >= 3:
                    lam = float(freq.values[i])
                    guard = max(guard, math.log(math.log(n)) / lam)

    if tail_max <= threshold:
        verdict = "consistent-with-hypercontractive"
    elif tail_max >= 2 * threshold:
        verdict = "inconsistent"
    else:
        verdict = "inconclusive"
    return HyperProfile(k, entries, tail_window, tail_max, guard, threshold, verdict)


# ---------------------------------------------------------------------------
# strip-width brackets


@dataclass
class StripInterval:
    p: float
    lower: float
    upper: float
    upper_certified: float
    provenance: str
    caveats: tuple[str, ...] = ()


@dataclass
class StripReport:
    """Density estimate, translation-gap profiles, strip brackets, index profiles."""

    descriptor: dict
    l_entries: list[tuple[int, int, float]]
    l_estimate: float
    tail_window: int
    t_profiles: dict[tuple[float, float], TProfile]
    hyper_profiles: dict[int, HyperProfile]
    s_intervals: dict[float, StripInterval]
    p0_bracket: tuple[float, float]


def strip_bounds(
    freq: Frequency,
    p_grid,
    q_list=(4,),
    k_list=(2,),
    j_max: int | None = None,
    tail_window: int = DEFAULT_TAIL_WINDOW,
    budget: int = DEFAULT_BUDGET,
    use_ascent: bool = False,
    restarts: int = 8,
    seed: int = 0,
    jobs: int = 1,
) -> StripReport:
    """Bracket the strip widths over a grid of exponents.

    For p >= 2 the interval is degenerate at L/2. For p < 2 the certified
    bracket is [L/2, L/p]; the refined upper adds the localization transfer of
    the energy-characterization estimate of the (4, 2) gap, which assumes the
    sampled growth condition and an unspecified universal constant, and is
    flagged as such in the provenance.
    """
    dens = density_profile(freq, tail_window)
    L = dens.tail_max
    t_profiles = {}
    for q in q_list:
        prof = t_profile(
            freq,
            2,
            q,
            j_max=j_max,
            tail_window=tail_window,
            budget=budget,
            use_ascent=use_ascent,
            restarts=restarts,
            seed=seed,
            jobs=jobs,
        )
        t_profiles[(2.0, float(q))] = prof
    hyper_profiles = {}
    for k in k_list:
        hyper_profiles[k] = hyper_index(
            freq,
            k,
            j_max=j_max,
            tail_window=tail_window,
            budget=budget,
            jobs=jobs,
        )

    # transfer coefficient source: the k=2 energy-characterization estimate
    t42 = hyper_profiles[2].tail_max if 2 in hyper_profiles else None

    s_intervals: dict[float, StripInterval] = {}
    for p in sorted(float(p) for p in p_grid):
        if p < 1:
            raise ExponentDomainError(f"p must be >= 1, got {p}")
        if p >= 2:
            s_intervals[p] = StripInterval(
                p,
                L / 2,
                L / 2,
                L / 2,
                "degenerate: strip width equals L/2 for p >= 2",
            )
            continue
        ip = 1 / Fraction(p)
        upper_cert = L / p
        prov = "bracket [L/2, L/p] from density bounds"
        caveats = ()
        upper = upper_cert
        if t42 is not None:
            coef = float((ip - Fraction(1, 2)) / Fraction(1, 4))
            refined = L / 2 + coef * t42
            if refined < upper:
                upper = refined
                prov = (
                    "strip monotonicity + localization transfer of the "
                    "energy-characterization gap estimate"
                )
                caveats = (
                    "growth-condition sampled, not proven",
                    "unspecified-universal-constant",
                )
        s_intervals[p] = StripInterval(p, L / 2, upper, upper_cert, prov, caveats)

    p0_hi = 2.0
    for p in sorted(s_intervals):
        si = s_intervals[p]
        if si.upper <= L / 2 + 1e-9:
            p0_hi = min(p0_hi, p)
            break
    return StripReport(
        freq.provenance,
        dens.entries,
        L,
        tail_window,
        t_profiles,
        hyper_profiles,
        s_intervals,
        (1.0, p0_hi),
    )
