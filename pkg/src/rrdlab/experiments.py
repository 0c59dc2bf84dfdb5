"""Monte Carlo and exact experiments: singularity rates, the d = 2 cycle-parity
benchmark, sums of permutation matrices, the Erdos anti-concentration oracle and
coupling audits.

Every trial draws from its own Philox stream keyed by (seed, cell, trial), so
hit counts do not depend on how trials are scheduled across workers.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats
from statsmodels.stats.proportion import proportion_confint

from .coupling import apply_plan, make_restricted_plan, pushforward_law, total_variation
from .exact_rank import is_singular
from .rng import make_rng
from .sampler import (
    BudgetExceeded,
    count_in_budget,
    enumerate_all,
    enumerate_in_budget,
    sample_permutation,
    sample_rrd,
    sample_signs,
)

__all__ = [
    "MCEstimate",
    "ExperimentSpec",
    "wilson",
    "mc_singularity",
    "D2Row",
    "d2_cycle_experiment",
    "odd_cycle_derangement_probability",
    "weighted_singular_probability",
    "perm_sum_experiment",
    "even_cycle_probability",
    "ErdosResult",
    "erdos_oracle",
    "CouplingVerdict",
    "coupling_audit",
    "run_report",
]

CSV_FIELDS = ("n", "d", "kind", "trials", "hits", "p_hat", "ci_low", "ci_high", "seed")


def wilson(hits: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    """Wilson score interval, clamped so it always contains hits/trials."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    lo, hi = proportion_confint(hits, trials, alpha=alpha, method="wilson")
    p = hits / trials
    return float(max(0.0, min(lo, p))), float(min(1.0, max(hi, p)))


@dataclass(frozen=True)
class MCEstimate:
    trials: int
    hits: int
    p_hat: Fraction
    ci_low: float
    ci_high: float
    seed: int
    wall_time: float = 0.0

    @classmethod
    def from_counts(cls, hits: int, trials: int, seed: int, wall_time: float = 0.0) -> "MCEstimate":
        if not 0 <= hits <= trials:
            raise ValueError("need 0 <= hits <= trials")
        lo, hi = wilson(hits, trials)
        return cls(trials, hits, Fraction(hits, trials), lo, hi, seed, wall_time)

    def contains(self, value) -> bool:
        return self.ci_low <= float(value) <= self.ci_high


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    grid: tuple[tuple[int, int], ...]
    trials: int
    mode: str = "auto"
    seed: int = 0
    out: str | None = None
    signed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple((int(n), int(d)) for n, d in self.grid))
        if not self.grid:
            raise ValueError("experiment grid is empty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for n, d in self.grid:
            if not 1 <= d <= n:
                raise ValueError(f"infeasible cell (n={n}, d={d})")
            if self.mode in ("exact-dp", "enumerate") and not count_in_budget(n, d):
                raise BudgetExceeded(f"cell (n={n}, d={d}) is outside the exact sampler budget")


# -- singularity Monte Carlo -----------------------------------------------------------

def _trial_block(args) -> tuple[int, int]:
    n, d, mode, seed, cell, start, stop, signed = args
    hits_m = hits_s = 0
    for t in range(start, stop):
        rng = make_rng(seed, cell, t)
        M = sample_rrd(n, d, rng, mode=mode)
        if is_singular(M, rng):
            hits_m += 1
        if signed:
            H = M.to_dense().astype(np.int64) * sample_signs(n, rng)
            if is_singular(H, rng):
                hits_s += 1
    return hits_m, hits_s


def _run_blocks(jobs: list[tuple], threads: int) -> list[tuple[int, int]]:
    if threads <= 1 or len(jobs) <= 1:
        return [_trial_block(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_trial_block, jobs))


def mc_singularity(spec: ExperimentSpec, threads: int = 1) -> list[dict]:
    """Singularity rate of M (and of the signed M±) per grid cell."""
    rows = []
    for cell, (n, d) in enumerate(spec.grid):
        t0 = time.perf_counter()
        nblocks = max(1, min(spec.trials, 4 * max(threads, 1)))
        edges = np.linspace(0, spec.trials, nblocks + 1).astype(int)
        jobs = [
            (n, d, spec.mode, spec.seed, cell, int(a), int(b), spec.signed)
            for a, b in zip(edges[:-1], edges[1:])
            if b > a
        ]
        parts = _run_blocks(jobs, threads)
        wall = time.perf_counter() - t0
        hits_m = sum(p[0] for p in parts)
        rows.append({"n": n, "d": d, "kind": "M", "estimate": MCEstimate.from_counts(hits_m, spec.trials, spec.seed, wall)})
        if spec.signed:
            hits_s = sum(p[1] for p in parts)
            rows.append({"n": n, "d": d, "kind": "Mpm", "estimate": MCEstimate.from_counts(hits_s, spec.trials, spec.seed, wall)})
    return rows


# -- d = 2 cycle parity ------------------------------------------------------------------

@lru_cache(maxsize=None)
def _cycle_weighted_counts(n: int, weight: Fraction, odd_only: bool) -> Fraction:
    """Sum over derangements of [n] (restricted to odd cycles if asked) of weight^#cycles."""
    if n == 0:
        return Fraction(1)
    total = Fraction(0)
    # the cycle through element 1 has length L >= 2
    for L in range(2, n + 1):
        if odd_only and L % 2 == 0:
            continue
        ways = math.comb(n - 1, L - 1) * math.factorial(L - 1)
        total += ways * weight * _cycle_weighted_counts(n - L, weight, odd_only)
    return total


def odd_cycle_derangement_probability(n: int) -> Fraction:
    """q_n: probability that a uniform derangement of [n] has only odd cycles."""
    if n < 2:
        raise ValueError("derangements need n >= 2")
    one = Fraction(1)
    return _cycle_weighted_counts(n, one, True) / _cycle_weighted_counts(n, one, False)


def weighted_singular_probability(n: int) -> Fraction:
    """Exact P(det M = 0) for M uniform on M(n, 2).

    M = P(I + P0) has 2^{#cycles(P0)} such factorizations, so the law of P0
    induced by uniform M weights each derangement by 2^{-#cycles}.
    """
    half = Fraction(1, 2)
    return 1 - _cycle_weighted_counts(n, half, True) / _cycle_weighted_counts(n, half, False)


@dataclass(frozen=True)
class D2Row:
    n: int
    estimate: MCEstimate
    benchmark_uniform_derangement: Fraction
    benchmark_exact: Fraction
    exhaustive: bool

    @property
    def within_uniform_benchmark(self) -> bool:
        return self.estimate.contains(self.benchmark_uniform_derangement)

    @property
    def within_exact_benchmark(self) -> bool:
        return self.estimate.contains(self.benchmark_exact)


def d2_cycle_experiment(
    n_list: Sequence[int], trials: int, seed: int = 0, mode: str = "auto", steps: int | None = None
) -> list[D2Row]:
    """Empirical singular fraction of M uniform on M(n, 2) against two benchmarks.

    ``benchmark_uniform_derangement`` is 1 - q_n, from treating P0 as a uniform
    derangement; ``benchmark_exact`` weights derangements by 2^{-#cycles},
    which is the law uniform M actually induces.  ``mode="enumerate"`` runs
    over all of M(n, 2) once, so the fraction is exact.
    """
    out = []
    for cell, n in enumerate(n_list):
        if n < 2:
            raise ValueError("need n >= 2")
        exhaustive = mode == "enumerate"
        t0 = time.perf_counter()
        if exhaustive:
            pool = enumerate_all(n, 2)
            hits = sum(is_singular(M, make_rng(seed, cell, k)) for k, M in enumerate(pool))
            count = len(pool)
        else:
            hits = 0
            for t in range(trials):
                rng = make_rng(seed, cell, t)
                hits += is_singular(sample_rrd(n, 2, rng, mode=mode, steps=steps), rng)
            count = trials
        est = MCEstimate.from_counts(int(hits), count, seed, time.perf_counter() - t0)
        out.append(
            D2Row(
                n=n,
                estimate=est,
                benchmark_uniform_derangement=1 - odd_cycle_derangement_probability(n),
                benchmark_exact=weighted_singular_probability(n),
                exhaustive=exhaustive,
            )
        )
    return out


# -- sums of two permutation matrices ---------------------------------------------------------

def even_cycle_probability(n: int) -> Fraction:
    """P(a uniform permutation of [n] has an even cycle): exact law of det(P1 + P2) = 0."""
    if n == 0:
        return Fraction(0)

    @lru_cache(maxsize=None)
    def odd_only(k: int) -> int:
        if k == 0:
            return 1
        return sum(
            math.comb(k - 1, L - 1) * math.factorial(L - 1) * odd_only(k - L) for L in range(1, k + 1, 2)
        )

    return 1 - Fraction(odd_only(n), math.factorial(n))


def perm_sum_experiment(n_list: Sequence[int], trials: int, seed: int = 0, exhaustive_upto: int = 0) -> list[dict]:
    """Singular fraction of P1 + P2 for independent uniform permutation matrices."""
    out = []
    for cell, n in enumerate(n_list):
        if n < 1:
            raise ValueError("need n >= 1")
        hits = 0
        if n <= exhaustive_upto:
            perms = list(itertools.permutations(range(n)))
            count = len(perms) ** 2
            for p1 in perms:
                for p2 in perms:
                    A = np.zeros((n, n), dtype=np.int64)
                    A[np.arange(n), p1] += 1
                    A[np.arange(n), p2] += 1
                    hits += is_singular(A, primes=())
        else:
            count = trials
            for t in range(trials):
                rng = make_rng(seed, cell, t)
                A = np.zeros((n, n), dtype=np.int64)
                A[np.arange(n), sample_permutation(n, rng)] += 1
                A[np.arange(n), sample_permutation(n, rng)] += 1
                hits += is_singular(A, rng)
        out.append(
            {
                "n": n,
                "estimate": MCEstimate.from_counts(int(hits), count, seed),
                "exhaustive": n <= exhaustive_upto,
                "exact": even_cycle_probability(n),
            }
        )
    return out


# -- Erdos anti-concentration -----------------------------------------------------------------

@dataclass(frozen=True)
class ErdosResult:
    m: int
    max_atom: Fraction
    bound: Fraction
    atom_at: Fraction

    @property
    def within_bound(self) -> bool:
        return self.max_atom <= self.bound

    @property
    def within_inverse_sqrt(self) -> bool:
        return self.max_atom**2 * self.m <= 1


def _signed_sum_hist(vals: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    sums = np.zeros(1, dtype=np.int64)
    for v in vals:
        sums = np.concatenate((sums + v, sums - v))
    return np.unique(sums, return_counts=True)


def erdos_oracle(x: Sequence | str, exact_limit: int = 24) -> ErdosResult:
    """Largest atom of sum_i x(i) xi(i) with iid uniform signs, by exact enumeration.

    ``x`` may be a rational vector or the string "all-ones m".  Zero
    coordinates are dropped.  Above 20 nonzero coordinates the two halves are
    enumerated separately and their histograms convolved.
    """
    if isinstance(x, str):
        parts = x.split()
        if len(parts) != 2 or parts[0] != "all-ones":
            raise ValueError("expected 'all-ones m'")
        x = [1] * int(parts[1])
    fx = [Fraction(v) for v in x if Fraction(v) != 0]
    m = len(fx)
    if m == 0:
        raise ValueError("x must have nonempty support")
    if m > exact_limit:
        raise ValueError(f"support size {m} exceeds the exact limit {exact_limit}")
    den = math.lcm(*(v.denominator for v in fx))
    ints = [int(v * den) for v in fx]
    if sum(abs(v) for v in ints) >= 1 << 62:
        raise OverflowError("scaled coefficients do not fit in 64 bits")
    if m <= 20:
        values, counts = _signed_sum_hist(ints)
    else:
        lv, lc = _signed_sum_hist(ints[: m // 2])
        rv, rc = _signed_sum_hist(ints[m // 2 :])
        sums = np.add.outer(lv, rv).ravel()
        weights = np.multiply.outer(lc, rc).ravel()
        values, inv = np.unique(sums, return_inverse=True)
        counts = np.bincount(inv, weights=weights).astype(np.int64)
    k = int(np.argmax(counts))
    return ErdosResult(
        m=m,
        max_atom=Fraction(int(counts[k]), 1 << m),
        bound=Fraction(math.comb(m, m // 2), 1 << m),
        atom_at=Fraction(int(values[k]), den),
    )


# -- coupling audit --------------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingVerdict:
    mode: str
    passed: bool
    tv: Fraction | None = None
    chi2: float | None = None
    p_value: float | None = None
    trials: int = 0
    support: int = 0


def coupling_audit(
    n: int,
    d: int,
    rows: tuple[int, int] = (0, 1),
    mode: str = "exact",
    trials: int = 10**5,
    seed: int = 0,
    frozen: Sequence[int] = (),
    s: int | None = None,
    alpha: float = 0.01,
) -> CouplingVerdict:
    """Check that shuffling preserves the uniform law on M(n, d).

    ``exact`` sums over every matrix, subset choice, bijection and sign
    pattern; ``chi2`` samples (M, plan) pairs and tests the shuffled matrix
    against uniform over the enumerated support.
    """
    if not enumerate_in_budget(n, d):
        raise BudgetExceeded(f"M({n},{d}) is too large to enumerate")
    i1, i2 = rows
    support = enumerate_all(n, d)
    if mode == "exact":
        tv = total_variation(pushforward_law(support, i1, i2, frozen, s), support)
        return CouplingVerdict("exact", tv == 0, tv=tv, support=len(support))
    if mode != "chi2":
        raise ValueError("mode must be 'exact' or 'chi2'")
    index = {M.key(): k for k, M in enumerate(support)}
    rng = make_rng(seed)
    tally = np.zeros(len(support), dtype=np.int64)
    for _ in range(trials):
        M = support[int(rng.integers(0, len(support)))]
        A1 = len(set(M.neighborhood(i1)) - set(M.neighborhood(i2)) - set(frozen))
        A2 = len(set(M.neighborhood(i2)) - set(M.neighborhood(i1)) - set(frozen))
        size = min(A1, A2) if s is None else min(s, A1, A2)
        plan = make_restricted_plan(M, i1, i2, frozen, size, rng)
        tally[index[apply_plan(M, plan).key()]] += 1
    res = stats.chisquare(tally)
    return CouplingVerdict(
        "chi2",
        bool(res.pvalue >= alpha),
        chi2=float(res.statistic),
        p_value=float(res.pvalue),
        trials=trials,
        support=len(support),
    )


# -- report files ---------------------------------------------------------------------------------

def _estimate_record(row: dict) -> dict:
    est: MCEstimate = row["estimate"]
    return {
        "n": row["n"],
        "d": row["d"],
        "kind": row.get("kind", "M"),
        "trials": est.trials,
        "hits": est.hits,
        "p_hat": f"{est.p_hat.numerator}/{est.p_hat.denominator}",
        "ci_low": round(est.ci_low, 12),
        "ci_high": round(est.ci_high, 12),
        "seed": est.seed,
    }


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write report file {path}: {exc}") from exc


def run_report(spec: ExperimentSpec, out: str | None = None, threads: int = 1) -> tuple[str, str]:
    """Run ``mc_singularity`` and write ``<out>.json`` and ``<out>.csv``.

    Wall times are left out of the files so reruns with the same seed are
    byte-identical.  Both files are rendered before either is written.
    """
    base = out or spec.out
    if not base:
        raise ValueError("no output path given")
    rows = [_estimate_record(r) for r in mc_singularity(spec, threads)]
    doc = {
        "experiment": spec.name,
        "grid": [list(c) for c in spec.grid],
        "trials": spec.trials,
        "mode": spec.mode,
        "seed": spec.seed,
        "cells": rows,
    }
    json_text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    json_path, csv_path = base + ".json", base + ".csv"
    _atomic_write(json_path, json_text)
    _atomic_write(csv_path, buf.getvalue())
    return json_path, csv_path
