"""Exact rank, corank and kernels of integer matrices, plus null-vector structure.

Singularity is screened by rank over GF(p) for large primes p < 2**31 and
confirmed by fraction-free Gauss-Jordan elimination over Python integers.
Rank mod p never exceeds the rational rank, so a full-rank screen is a proof
of invertibility; a rank-deficient screen is never reported without exact
confirmation.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

from ._kernels import rank_mod_p_kernel
from .matrix_core import Matrix01, SignedMatrix, co_ex_sets, neighborhood
from .rng import as_rng

__all__ = [
    "RankResult",
    "LevelSetProfile",
    "SCREEN_PRIMES",
    "rank_mod_p",
    "corank_exact",
    "rank_exact",
    "is_singular",
    "level_profile",
    "sls_witness_to_sparse",
    "sparse_to_sls_witness",
    "structured_set_membership",
    "h2_membership",
    "xi0_kernel_check",
    "Xi0Result",
    "row_in_span",
    "kernel_to_json",
]

# the 20 largest primes below 2**31; products of residues fit in int64
SCREEN_PRIMES = (
    2147483647, 2147483629, 2147483587, 2147483579, 2147483563,
    2147483549, 2147483543, 2147483497, 2147483489, 2147483477,
    2147483423, 2147483399, 2147483353, 2147483323, 2147483269,
    2147483249, 2147483237, 2147483179, 2147483171, 2147483137,
)


@dataclass
class RankResult:
    rank: int
    corank: int
    kernel_basis: list[list[Fraction]] = field(default_factory=list)
    method: str = "exact"

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "corank": self.corank,
            "method": self.method,
            "kernel_basis": kernel_to_json(self.kernel_basis),
        }


@dataclass(frozen=True)
class LevelSetProfile:
    max_level_fraction: Fraction
    support_fraction: Fraction
    level_map: dict


def kernel_to_json(basis: Sequence[Sequence[Fraction]]) -> list[list[str]]:
    return [[f"{x.numerator}/{x.denominator}" for x in vec] for vec in basis]


def _as_int_matrix(A) -> np.ndarray:
    if isinstance(A, Matrix01):
        return A.to_dense().astype(np.int64)
    if isinstance(A, SignedMatrix):
        return A.to_dense().astype(np.int64)
    arr = np.asarray(A)
    if arr.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return arr


def rank_mod_p(A, prime: int) -> int:
    """Rank of the integer matrix A over the field with ``prime`` elements."""
    if not sympy.isprime(prime):
        raise ValueError(f"{prime} is not prime")
    arr = _as_int_matrix(A)
    if prime < 1 << 31:
        work = np.array(arr, dtype=np.int64) % prime
        return int(rank_mod_p_kernel(work, np.int64(prime)))
    return _rank_mod_p_python([[int(x) % prime for x in row] for row in arr.tolist()], prime)


def _rank_mod_p_python(rows: list[list[int]], p: int) -> int:
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][col], p - 2, p)
        rows[rank] = [x * inv % p for x in rows[rank]]
        for r in range(rank + 1, len(rows)):
            f = rows[r][col]
            if f:
                rows[r] = [(x - f * y) % p for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def _fraction_free_rref(rows: list[list[int]]) -> tuple[list[list[int]], list[int], int]:
    """Integer-preserving Gauss-Jordan elimination.

    Every update is ``(piv * a - f * b) // prev`` with exact division, so all
    intermediate entries are minors of the input.  Returns the reduced rows,
    the pivot columns and the common pivot value.
    """
    m = len(rows)
    ncols = len(rows[0]) if m else 0
    rows = [list(r) for r in rows]
    prev = 1
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        if r == m:
            break
        piv = next((k for k in range(r, m) if rows[k][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        pv = rows[r][col]
        prow = rows[r]
        for k in range(m):
            if k == r:
                continue
            row = rows[k]
            f = row[col]
            if f == 0 and prev == 1 and pv == 1:
                continue
            rows[k] = [(pv * a - f * b) // prev for a, b in zip(row, prow)]
        # earlier pivot rows were scaled by pv/prev through the updates above
        prev = pv
        pivots.append(col)
        r += 1
    return rows, pivots, prev


def corank_exact(A) -> RankResult:
    """Exact rank, corank and a rational right-kernel basis.

    Each basis vector is normalised so its first nonzero coordinate is 1, and
    is checked to multiply A to exactly zero.
    """
    arr = _as_int_matrix(A)
    m, n = arr.shape
    rows = [[int(x) for x in row] for row in arr.tolist()]
    if m == 0 or n == 0:
        return RankResult(rank=0, corank=n, kernel_basis=[_unit(n, j) for j in range(n)])
    red, pivots, _ = _fraction_free_rref(rows)
    rank = len(pivots)
    pivot_set = set(pivots)
    basis: list[list[Fraction]] = []
    for free in range(n):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * n
        vec[free] = Fraction(1)
        for r, pc in enumerate(pivots):
            vec[pc] = Fraction(-red[r][free], red[r][pc])
        lead = next(x for x in vec if x != 0)
        basis.append([x / lead for x in vec])
    for vec in basis:
        for row in rows:
            if sum(a * x for a, x in zip(row, vec) if a) != 0:
                raise ArithmeticError("kernel vector failed exact verification")
    return RankResult(rank=rank, corank=n - rank, kernel_basis=basis, method="exact")


def _unit(n: int, j: int) -> list[Fraction]:
    v = [Fraction(0)] * n
    v[j] = Fraction(1)
    return v


def rank_exact(A) -> int:
    arr = _as_int_matrix(A)
    if arr.size == 0:
        return 0
    _, pivots, _ = _fraction_free_rref([[int(x) for x in row] for row in arr.tolist()])
    return len(pivots)


def is_singular(A, rng=None, primes: Sequence[int] | None = None) -> bool:
    """Exact singularity test for a square integer matrix.

    Two screening primes are drawn from :data:`SCREEN_PRIMES`; full rank at
    either proves invertibility.  Otherwise the answer comes from exact
    elimination.
    """
    arr = _as_int_matrix(A)
    n = arr.shape[0]
    if arr.shape != (n, n):
        raise ValueError("is_singular needs a square matrix")
    if primes is None:
        rng = as_rng(rng)
        picks = rng.choice(len(SCREEN_PRIMES), size=2, replace=False)
        primes = [SCREEN_PRIMES[int(k)] for k in picks]
    for p in primes:
        if rank_mod_p(arr, p) == n:
            return False
    return rank_exact(arr) < n


# -- null-vector structure -------------------------------------------------------

def _as_fractions(x) -> list[Fraction]:
    return [Fraction(v) for v in x]


def level_profile(x) -> LevelSetProfile:
    vals = _as_fractions(x)
    n = len(vals)
    if n == 0:
        raise ValueError("empty vector")
    counts = Counter(vals)
    return LevelSetProfile(
        max_level_fraction=Fraction(max(counts.values()), n),
        support_fraction=Fraction(sum(1 for v in vals if v != 0), n),
        level_map=dict(counts),
    )


def _matvec(M: Matrix01, x: Sequence[Fraction]) -> list[Fraction]:
    dense = M.to_dense()
    return [sum((x[j] for j in np.flatnonzero(row)), Fraction(0)) for row in dense]


def _regular_degree(M: Matrix01) -> int:
    d = M.degree()
    if d is None:
        raise ValueError("matrix is not regular")
    return d


def sls_witness_to_sparse(x, lam, M: Matrix01) -> list[Fraction]:
    """Turn a null vector x with a large level set at ``lam`` into a sparse y.

    y is a dilation of lam*1 - x, scaled so that My is 0 (lam = 0) or the
    all-ones vector (lam != 0).  Its support is the complement of x^{-1}(lam).
    """
    xs = _as_fractions(x)
    lam = Fraction(lam)
    if len(xs) != M.n:
        raise ValueError("dimension mismatch")
    if all(v == 0 for v in xs):
        raise ValueError("x must be nonzero")
    if any(v != 0 for v in _matvec(M, xs)):
        raise ValueError("x is not a right null vector of M")
    d = _regular_degree(M)
    y = [lam - v for v in xs]
    if lam != 0:
        scale = 1 / (lam * d)
        y = [v * scale for v in y]
    return y


def sparse_to_sls_witness(y, M: Matrix01) -> tuple[list[Fraction], Fraction]:
    """Inverse direction: from y with My in {0, 1} build a null vector and its level.

    If My = 0 the null vector is y itself with level 0; if My = 1 it is
    y - (1/d) 1, which takes the value -1/d off the support of y.
    """
    ys = _as_fractions(y)
    if len(ys) != M.n:
        raise ValueError("dimension mismatch")
    if all(v == 0 for v in ys):
        raise ValueError("y must be nonzero")
    image = _matvec(M, ys)
    if all(v == 0 for v in image):
        return ys, Fraction(0)
    if all(v == 1 for v in image):
        d = _regular_degree(M)
        return [v - Fraction(1, d) for v in ys], Fraction(-1, d)
    raise ValueError("My is neither 0 nor the all-ones vector")


def _levels(x) -> dict[Fraction, set[int]]:
    out: dict[Fraction, set[int]] = {}
    for i, v in enumerate(_as_fractions(x)):
        out.setdefault(v, set()).add(i)
    return out


def structured_set_membership(x, M: Matrix01, i1: int, i2: int, eps1) -> bool:
    """Is there a level set of x meeting both N(i1) and N(i2) in more than eps1*d places?"""
    if i1 == i2:
        raise ValueError("rows must be distinct")
    d = _regular_degree(M)
    n1, n2 = neighborhood(M, i1), neighborhood(M, i2)
    thresh = Fraction(eps1) * d
    return any(min(len(n1 & L), len(n2 & L)) > thresh for L in _levels(x).values())


def h2_membership(x, M: Matrix01, i1: int, i2: int, eps2) -> bool:
    """Is there a level set of x meeting Ex(i1,i2) u Ex(i2,i1) in more than eps2 p(1-p) n places?"""
    d = _regular_degree(M)
    n = M.n
    _, ex12, ex21 = co_ex_sets(M, i1, i2)
    union = ex12 | ex21
    thresh = Fraction(eps2) * Fraction(d * (n - d), n)
    return any(len(union & L) > thresh for L in _levels(x).values())


@dataclass(frozen=True)
class Xi0Result:
    corank: int
    kernel_contains_ones: bool
    corank_support: int
    zero_row_col_sums: bool


def xi0_kernel_check(n: int, rng=None, mode: str = "auto") -> Xi0Result:
    """Sample M uniform on M(n, n/2) and analyse Xi0 = 2M - J.

    Xi0 has zero row and column sums, so the all-ones vector is in its
    kernel; its corank equals 1 + corank(M).
    """
    from .sampler import sample_rrd

    if n % 2:
        raise ValueError("n must be even")
    rng = as_rng(rng)
    M = sample_rrd(n, n // 2, rng, mode=mode)
    xi0 = 2 * M.to_dense().astype(np.int64) - 1
    ones = np.ones(n, dtype=np.int64)
    sums_zero = bool((xi0 @ ones == 0).all() and (ones @ xi0 == 0).all())
    res = corank_exact(xi0)
    return Xi0Result(
        corank=res.corank,
        kernel_contains_ones=sums_zero,
        corank_support=corank_exact(M).corank,
        zero_row_col_sums=sums_zero,
    )


def row_in_span(M, rows: Sequence[int]) -> bool:
    """True iff every listed row lies in the span of the rows not listed."""
    if len(set(rows)) != len(rows):
        raise ValueError("duplicate row indices")
    arr = _as_int_matrix(M)
    keep = [i for i in range(arr.shape[0]) if i not in set(rows)]
    base = rank_exact(arr[keep]) if keep else 0
    return rank_exact(arr) == base
