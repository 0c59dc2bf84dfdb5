"""Sampling and counting over M(n, d), the n x n 0/1 matrices with all
row and column sums equal to d.

Exact counting is a dynamic program over column-deficit profiles: after some
rows are filled, only the multiset of remaining column deficits matters.  The
same completion counts drive an exactly uniform sequential sampler.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import mpmath
import numpy as np

from ._kernels import switch_chain
from .matrix_core import Matrix01, SignedMatrix, complement, hadamard
from .rng import as_rng

__all__ = [
    "BudgetExceeded",
    "SampleConfig",
    "CountResult",
    "count_in_budget",
    "enumerate_all",
    "count",
    "sample_exact",
    "sample_mcmc",
    "sample_rrd",
    "default_mcmc_steps",
    "sample_signs",
    "sample_signed_rrd",
    "sample_permutation",
    "sample_derangement",
    "sample_derangement_counted",
    "derangement_count",
    "evaluate_asymptotic_count",
]

MODES = ("exact-dp", "mcmc", "enumerate")
ENUMERATE_LIMIT = 10**7


class BudgetExceeded(ValueError):
    """The requested (n, d) is outside the exact-computation budget."""


@dataclass(frozen=True)
class SampleConfig:
    n: int
    d: int
    mode: str = "exact-dp"
    mcmc_steps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.d <= self.n:
            raise ValueError(f"need 1 <= d <= n, got n={self.n}, d={self.d}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "enumerate" and not enumerate_in_budget(self.n, self.d):
            raise BudgetExceeded(f"enumeration of M({self.n},{self.d}) exceeds the budget")


@dataclass(frozen=True)
class CountResult:
    n: int
    d: int
    asymptotic: mpmath.mpf
    exact: int | None = None
    ratio: mpmath.mpf | None = None


# -- exact counting ------------------------------------------------------------

def count_in_budget(n: int, d: int) -> bool:
    if not 0 <= d <= n:
        return False
    return n <= 14 if min(d, n - d) <= 4 else n <= 10


def enumerate_in_budget(n: int, d: int) -> bool:
    if n <= 6:
        return True
    return count_in_budget(n, d) and count(n, d) < ENUMERATE_LIMIT


def _compositions(profile: tuple[int, ...], d: int) -> Iterator[tuple[int, ...]]:
    """Ways to pick d columns from deficit classes 1..len(profile): (t_1, ..., t_d)."""
    k = len(profile)

    def rec(level: int, left: int, acc: list[int]):
        if level == k:
            if left == 0:
                yield tuple(acc)
            return
        for t in range(min(profile[level], left) + 1):
            acc.append(t)
            yield from rec(level + 1, left - t, acc)
            acc.pop()

    yield from rec(0, d, [])


def _next_profile(profile: tuple[int, ...], take: tuple[int, ...]) -> tuple[int, ...]:
    # profile[k] counts columns with deficit k+1; taking one lowers its deficit by one
    out = list(profile)
    for k, t in enumerate(take):
        out[k] -= t
        if k > 0:
            out[k - 1] += t
    return tuple(out)


@lru_cache(maxsize=None)
def _completions(profile: tuple[int, ...], d: int) -> int:
    """Number of ways to fill the remaining rows given the deficit profile."""
    if all(c == 0 for c in profile):
        return 1
    total = 0
    for take in _compositions(profile, d):
        ways = 1
        for c, t in zip(profile, take):
            ways *= math.comb(c, t)
        total += ways * _completions(_next_profile(profile, take), d)
    return total


def count(n: int, d: int) -> int:
    """|M(n, d)| exactly."""
    if not count_in_budget(n, d):
        raise BudgetExceeded(f"count({n},{d}) is outside the exact-count budget")
    if d in (0, n):
        return 1
    if d > n - d:
        d = n - d
    profile = tuple([0] * (d - 1) + [n])
    return _completions(profile, d)


def enumerate_all(n: int, d: int) -> list[Matrix01]:
    """Every matrix of M(n, d) once, ordered lexicographically by row strings."""
    if not enumerate_in_budget(n, d):
        raise BudgetExceeded(f"enumeration of M({n},{d}) exceeds the budget")
    row_vectors = sorted(
        (tuple(1 if j in combo else 0 for j in range(n)) for combo in itertools.combinations(range(n), d))
    )
    rows_np = [np.array(r, dtype=np.int64) for r in row_vectors]
    out: list[Matrix01] = []
    chosen: list[int] = []

    def rec(i: int, deficit: np.ndarray):
        if i == n:
            out.append(Matrix01.from_dense(np.array([row_vectors[k] for k in chosen], dtype=np.uint8)))
            return
        rows_left = n - i - 1
        for k, r in enumerate(rows_np):
            nd = deficit - r
            if nd.min() < 0 or nd.max() > rows_left:
                continue
            chosen.append(k)
            rec(i + 1, nd)
            chosen.pop()

    rec(0, np.full(n, d, dtype=np.int64))
    return out


def _randbelow(rng: np.random.Generator, bound: int) -> int:
    """Uniform integer in [0, bound) for arbitrary-precision bound."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    if bound <= 1 << 62:
        return int(rng.integers(0, bound))
    k = bound.bit_length()
    nwords = (k + 31) // 32
    while True:
        words = rng.integers(0, 1 << 32, size=nwords, dtype=np.uint64)
        value = 0
        for w in words:
            value = (value << 32) | int(w)
        value &= (1 << k) - 1
        if value < bound:
            return value


def sample_exact(n: int, d: int, rng=None) -> Matrix01:
    """Exactly uniform draw from M(n, d) by sequential completion-count weighting."""
    if not count_in_budget(n, d):
        raise BudgetExceeded(f"sample_exact({n},{d}) is outside the exact-count budget")
    rng = as_rng(rng)
    if d in (0, n):
        return Matrix01.zeros(n) if d == 0 else Matrix01.ones(n)
    if d > n - d:
        return complement(sample_exact(n, n - d, rng))
    deficit = np.full(n, d, dtype=np.int64)
    dense = np.zeros((n, n), dtype=np.uint8)
    for i in range(n):
        profile = tuple(int((deficit == k).sum()) for k in range(1, d + 1))
        options = []
        for take in _compositions(profile, d):
            ways = 1
            for c, t in zip(profile, take):
                ways *= math.comb(c, t)
            weight = ways * _completions(_next_profile(profile, take), d)
            if weight:
                options.append((take, weight))
        total = sum(w for _, w in options)
        pick = _randbelow(rng, total)
        for take, w in options:
            if pick < w:
                break
            pick -= w
        for k, t in enumerate(take, start=1):
            if t:
                pool = np.flatnonzero(deficit == k)
                cols = rng.choice(pool, size=t, replace=False)
                dense[i, cols] = 1
        deficit -= dense[i].astype(np.int64)
    return Matrix01.from_dense(dense)


# -- switching chain -------------------------------------------------------------

def default_mcmc_steps(n: int, d: int) -> int:
    """4 n d ceil(ln n) attempted switchings (a heuristic; no mixing bound is known)."""
    return 4 * n * d * max(1, math.ceil(math.log(n))) if n > 1 else 0


def sample_mcmc(n: int, d: int, steps: int | None = None, rng=None, start: Matrix01 | None = None) -> Matrix01:
    """Simple-switching chain started from the canonical circulant.

    Each step picks rows i1 != i2 and columns j1 != j2 uniformly and swaps the
    2x2 minor between I and J if it is one of them.
    """
    if not 0 <= d <= n:
        raise ValueError(f"need 0 <= d <= n, got n={n}, d={d}")
    if d in (0, n):
        return Matrix01.circulant(n, d)
    rng = as_rng(rng)
    if steps is None:
        steps = default_mcmc_steps(n, d)
    M = Matrix01.circulant(n, d) if start is None else start.copy()
    if steps > 0:
        r1 = rng.integers(0, n, size=steps)
        r2 = (r1 + 1 + rng.integers(0, n - 1, size=steps)) % n
        c1 = rng.integers(0, n, size=steps)
        c2 = (c1 + 1 + rng.integers(0, n - 1, size=steps)) % n
        switch_chain(M.bits, r1, r2, c1, c2)
    return M


def sample_rrd(n: int, d: int, rng=None, mode: str = "auto", steps: int | None = None) -> Matrix01:
    """Draw from M(n, d); ``auto`` uses the exact sampler when in budget, else MCMC."""
    rng = as_rng(rng)
    if mode == "auto":
        mode = "exact-dp" if count_in_budget(n, d) else "mcmc"
    if mode == "exact-dp":
        return sample_exact(n, d, rng)
    if mode == "mcmc":
        return sample_mcmc(n, d, steps, rng)
    if mode == "enumerate":
        pool = _enumeration_cache(n, d)
        return pool[int(rng.integers(0, len(pool)))].copy()
    raise ValueError(f"unknown sampling mode {mode!r}")


@lru_cache(maxsize=8)
def _enumeration_cache(n: int, d: int) -> tuple[Matrix01, ...]:
    return tuple(enumerate_all(n, d))


# -- signs and permutations ----------------------------------------------------------

def sample_signs(n: int, rng=None) -> np.ndarray:
    rng = as_rng(rng)
    return (2 * rng.integers(0, 2, size=(n, n)) - 1).astype(np.int8)


def sample_signed_rrd(n: int, d: int, rng=None, mode: str = "auto", steps: int | None = None) -> SignedMatrix:
    rng = as_rng(rng)
    support = sample_rrd(n, d, rng, mode=mode, steps=steps)
    return hadamard(support, sample_signs(n, rng))


def sample_permutation(n: int, rng=None) -> np.ndarray:
    return as_rng(rng).permutation(n)


def sample_derangement_counted(n: int, rng=None) -> tuple[np.ndarray, int]:
    """Rejection sampling of a uniform derangement; also returns the number of attempts."""
    if n < 2:
        raise ValueError("derangements need n >= 2")
    rng = as_rng(rng)
    idx = np.arange(n)
    attempts = 0
    while True:
        attempts += 1
        perm = rng.permutation(n)
        if not (perm == idx).any():
            return perm, attempts


def sample_derangement(n: int, rng=None) -> np.ndarray:
    return sample_derangement_counted(n, rng)[0]


def derangement_count(n: int) -> int:
    a, b = 1, 0  # D_0, D_1
    if n == 0:
        return 1
    for k in range(2, n + 1):
        a, b = b, (k - 1) * (a + b)
    return b


# -- asymptotic count ------------------------------------------------------------------

def evaluate_asymptotic_count(n: int, d: int, dps: int = 40) -> CountResult:
    """Asymptotic |M(n, d)| from the iid-Bernoulli conditioning formula.

    P(E) ~ sqrt(2 pi d (n-d)) exp(-n log(2 pi d (n-d) / n)) and
    |M(n, d)| = P(E) / (p^{dn} (1-p)^{(n-d)n}) with p = d/n.
    """
    if not 1 <= d <= n - 1:
        raise ValueError(f"need 1 <= d <= n-1, got n={n}, d={d}")
    with mpmath.workdps(dps):
        p = mpmath.mpf(d) / n
        pe = mpmath.sqrt(2 * mpmath.pi * d * (n - d)) * mpmath.exp(
            -n * mpmath.log(2 * mpmath.pi * d * (n - d) / n)
        )
        asym = pe / (p ** (d * n) * (1 - p) ** ((n - d) * n))
        exact = count(n, d) if count_in_budget(n, d) else None
        ratio = mpmath.mpf(exact) / asym if exact is not None else None
    return CountResult(n=n, d=d, asymptotic=asym, exact=exact, ratio=ratio)
