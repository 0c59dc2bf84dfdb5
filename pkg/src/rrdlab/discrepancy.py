"""Checkers for codegree, discrepancy and expansion events of 0/1 matrices.

Edge counts over a family of set pairs are searched with a dominance
reduction: for a fixed row set A, e(A, B) over |B| = b is extremal at the b
columns of largest or smallest column mass into A, so only A needs to be
enumerated.  Families too large for the subset budget fall back to sampling,
and such reports are labelled ``sampled`` (they cannot certify a pass).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from .matrix_core import Matrix01, edge_count
from .rng import as_rng

__all__ = [
    "BudgetExceeded",
    "GoodEventConfig",
    "EventReport",
    "DiscrepancyReport",
    "EdgeDeviation",
    "check_codegree",
    "edge_deviation",
    "check_large_minors",
    "check_thin_minors",
    "check_expansion",
    "check_good_d",
    "sym_group_concentration",
    "SymGroupTable",
    "bad_pair_audit",
    "BadPairAudit",
]


class BudgetExceeded(ValueError):
    """Exact mode was requested but the family is larger than the subset budget."""


@dataclass(frozen=True)
class GoodEventConfig:
    delta: Fraction = Fraction(1, 2)
    eps: Fraction = Fraction(1, 2)
    eps0: Fraction = Fraction(1, 2)
    gamma: Fraction = Fraction(1, 10)
    eta: Fraction = Fraction(1, 2)
    c1: Fraction = Fraction(1, 10)
    c2: Fraction = Fraction(3, 10)
    C2: Fraction = Fraction(8)
    C0: Fraction = Fraction(1)
    budget: int = 10**6
    samples: int = 2000

    def __post_init__(self):
        for name in ("delta", "eps", "eps0", "gamma", "eta"):
            v = _rat(getattr(self, name))
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
            object.__setattr__(self, name, v)
        for name in ("c1", "c2", "C2", "C0"):
            v = _rat(getattr(self, name))
            if v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)
        if self.budget < 1 or self.samples < 0:
            raise ValueError("budget must be positive and samples non-negative")


def _rat(x) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (by its repr)."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _jsonable(x: Any) -> Any:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (frozenset, set)):
        return sorted(int(v) + 1 for v in x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(x)
    return x


@dataclass
class EventReport:
    """One event check.  Witness sets are stored 0-based and printed 1-based."""

    name: str
    passed: bool
    margin: Fraction | float
    witness: dict = field(default_factory=dict)
    mode: str = "exact"
    samples_used: int = 0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "margin": _jsonable(self.margin),
            "witness": _witness_json(self.witness),
            "mode": self.mode,
            "samples_used": self.samples_used,
            "details": _jsonable(self.details),
        }


def _witness_json(w: dict) -> dict:
    out = {}
    for k, v in w.items():
        if isinstance(v, (int, np.integer)) and k in ("i1", "i2", "row", "col"):
            out[k] = int(v) + 1
        else:
            out[k] = _jsonable(v)
    return out


@dataclass
class DiscrepancyReport:
    events: list[EventReport]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.events)

    @property
    def certified(self) -> bool:
        return all(e.mode == "exact" for e in self.events)

    def __getitem__(self, name: str) -> EventReport:
        for e in self.events:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_json(self) -> str:
        rec = {"pass": self.passed, "certified": self.certified, "events": [e.to_dict() for e in self.events]}
        return json.dumps(rec, sort_keys=True, indent=2)

    def to_text(self) -> str:
        rows = [("event", "pass", "margin", "mode", "samples")]
        for e in self.events:
            m = e.margin
            ms = f"{float(m):.4g}" if isinstance(m, (Fraction, float, int)) else str(m)
            rows.append((e.name, "PASS" if e.passed else "FAIL", ms, e.mode, str(e.samples_used)))
        widths = [max(len(r[c]) for r in rows) for c in range(5)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)


def _density(M: Matrix01, d: int | None = None) -> Fraction:
    if d is None:
        d = M.degree()
        if d is None:
            return Fraction(int(M.row_sums.sum()), M.n * M.n)
    return Fraction(d, M.n)


def _popcount_rows(bits: np.ndarray) -> np.ndarray:
    return np.bitwise_count(bits).sum(axis=-1).astype(np.int64)


# -- codegrees ---------------------------------------------------------------------

def check_codegree(M: Matrix01, delta=Fraction(1, 2)) -> EventReport:
    """G^ex(delta): |ex(i1,i2) / (p(1-p)n) - 1| <= delta for all pairs, in M and M^T."""
    n = M.n
    d = M.degree()
    if d is None:
        raise ValueError("codegree check needs a regular matrix")
    if d in (0, n):
        raise ValueError("p(1-p) = 0 for d in {0, n}")
    delta = _rat(delta)
    scale = Fraction(d * (n - d), n)
    worst = Fraction(-1)
    witness: dict = {}
    for label, A in (("M", M), ("MT", M.transpose())):
        dense = A.to_dense().astype(np.int64)
        ex = d - dense @ dense.T
        iu = np.triu_indices(n, 1)
        vals = ex[iu]
        # the extreme relative deviation sits at the min or max ex value
        for pos in (int(np.argmin(vals)), int(np.argmax(vals))):
            dev = abs(Fraction(int(vals[pos])) / scale - 1)
            if dev > worst:
                worst = dev
                witness = {"orientation": label, "i1": int(iu[0][pos]), "i2": int(iu[1][pos]), "ex": int(vals[pos])}
    return EventReport(
        name="codegree",
        passed=worst <= delta,
        margin=delta - worst,
        witness=witness,
        details={"max_rel_dev": worst, "delta": delta},
    )


# -- edge deviations -----------------------------------------------------------------

@dataclass(frozen=True)
class EdgeDeviation:
    e: int
    mu: Fraction
    mu_hat: Fraction
    tau: Fraction | float


def edge_deviation(M: Matrix01, A: Iterable[int], B: Iterable[int], d: int | None = None) -> EdgeDeviation:
    """(e, mu, mu_hat, tau) with mu = p|A||B|, mu_hat = p min(|A||B|, |A^c||B^c|)."""
    A, B = set(A), set(B)
    n = M.n
    p = _density(M, d)
    e = edge_count(M, A, B)
    a, b = len(A), len(B)
    mu = p * a * b
    mu_hat = p * min(a * b, (n - a) * (n - b))
    gap = abs(e - mu)
    if gap == 0:
        tau: Fraction | float = Fraction(0)
    elif mu_hat == 0:
        tau = math.inf
    else:
        tau = gap / mu_hat
    return EdgeDeviation(e=e, mu=mu, mu_hat=mu_hat, tau=tau)


def _family_size(n: int, t: int) -> int:
    return sum(math.comb(n, a) for a in range(max(t, 0), n + 1))


def _row_sets(n: int, t: int, exhaustive: bool, samples: int, rng) -> Iterable[np.ndarray]:
    """Row subsets with |A| >= t, all of them or ``samples`` uniform draws."""
    if exhaustive:
        for a in range(max(t, 1), n + 1):
            for combo in itertools.combinations(range(n), a):
                yield np.array(combo, dtype=np.int64)
        return
    sizes = np.arange(max(t, 1), n + 1)
    weights = np.array([math.comb(n, int(a)) for a in sizes], dtype=float)
    weights /= weights.sum()
    for _ in range(samples):
        a = int(rng.choice(sizes, p=weights))
        yield np.sort(rng.choice(n, size=a, replace=False))


def check_large_minors(
    M: Matrix01,
    eps=Fraction(1, 2),
    C0=Fraction(1),
    budget: int = 10**6,
    rng=None,
    samples: int = 2000,
    certify: bool = False,
    search: str = "worst",
) -> EventReport:
    """G^ee(eps): |e(A,B) - mu| <= eps mu_hat whenever min(|A|,|B|) >= (C0/eps^2) log n / p.

    ``search="worst"`` takes, for each row set A, the extremal B of every size
    (exact in B).  ``search="pairs"`` instead draws ``samples`` pairs (A, B)
    uniformly from the family, the plain Monte Carlo audit.  Note that when
    the family reaches sets of size n - 1, A^c = {i}, B^c = {j} with
    M(i,j) = 1 gives tau = (1-p)/p, so the worst-case search fails whenever
    p <= 1/(1+eps).
    """
    if search not in ("worst", "pairs"):
        raise ValueError("search must be 'worst' or 'pairs'")
    n = M.n
    eps = _rat(eps)
    p = _density(M)
    if p == 0:
        raise ValueError("empty matrix")
    thresh = float(_rat(C0) / eps**2) * math.log(n) / float(p) if n > 1 else 0.0
    t = max(1, math.ceil(thresh - 1e-12))
    details = {"threshold": thresh}
    if t > n:
        return EventReport("large_minors", True, math.inf, mode="exact", details={**details, "family": "empty"})
    count_a = _family_size(n, t)
    exhaustive = count_a <= budget and search == "worst"
    if certify and not exhaustive:
        raise BudgetExceeded(f"{count_a} row sets exceed the budget {budget}")
    rng = as_rng(rng)
    if search == "pairs":
        return _large_minor_pairs(M, eps, t, samples, rng, details)
    dense = M.to_dense().astype(np.int64)
    dnum, dden = p.numerator, p.denominator
    en, ed = eps.numerator, eps.denominator
    bs = np.arange(t, n + 1)
    best: tuple | None = None
    used = 0
    for A in _row_sets(n, t, exhaustive, samples, rng):
        used += 1
        a = len(A)
        mass = np.sort(dense[A].sum(axis=0))
        low = np.concatenate(([0], np.cumsum(mass)))[bs]
        high = np.concatenate(([0], np.cumsum(mass[::-1])))[bs]
        mu_scaled = dnum * a * bs  # p a b * dden
        gap = np.maximum(np.abs(high * dden - mu_scaled), np.abs(low * dden - mu_scaled))
        hat = dnum * np.minimum(a * bs, (n - a) * (n - bs))
        # slack * dden * ed = en * hat - ed * gap
        slack = en * hat - ed * gap
        k = int(np.argmin(slack))
        val = Fraction(int(slack[k]), dden * ed)
        if best is None or val < best[0]:
            b = int(bs[k])
            cols = np.argsort(dense[A].sum(axis=0), kind="stable")
            top = int(np.abs(high[k] * dden - mu_scaled[k])) >= int(np.abs(low[k] * dden - mu_scaled[k]))
            B = cols[::-1][:b] if top else cols[:b]
            best = (val, frozenset(int(i) for i in A), frozenset(int(j) for j in B))
    margin, wa, wb = best
    return EventReport(
        name="large_minors",
        passed=margin >= 0,
        margin=margin,
        witness={"A": wa, "B": wb},
        mode="exact" if exhaustive else "sampled",
        samples_used=used,
        details={**details, "row_sets": count_a},
    )


def _large_minor_pairs(M: Matrix01, eps: Fraction, t: int, samples: int, rng, details: dict) -> EventReport:
    n = M.n
    best = None
    for A, B in zip(_row_sets(n, t, False, samples, rng), _row_sets(n, t, False, samples, rng)):
        dev = edge_deviation(M, A, B)
        slack = eps * dev.mu_hat - abs(dev.e - dev.mu)
        if best is None or slack < best[0]:
            best = (slack, frozenset(int(i) for i in A), frozenset(int(j) for j in B))
    margin, wa, wb = best if best else (Fraction(0), frozenset(), frozenset())
    return EventReport(
        name="large_minors",
        passed=margin >= 0,
        margin=margin,
        witness={"A": wa, "B": wb},
        mode="sampled",
        samples_used=samples,
        details={**details, "search": "pairs"},
    )


# -- thin minors -----------------------------------------------------------------------

def _s0(n: int, d: int, gamma) -> float:
    return math.log(n) / (2 * float(gamma)) * n / d


def _b0(n: int, d: int, eps0, gamma, s: int) -> float:
    return float(eps0) * float(gamma) / math.log(n) * d * s


def _subsets_of_size(n: int, s: int, exhaustive: bool, samples: int, rng) -> Iterable[np.ndarray]:
    if exhaustive:
        for combo in itertools.combinations(range(n), s):
            yield np.array(combo, dtype=np.int64)
    else:
        for _ in range(samples):
            yield np.sort(rng.choice(n, size=s, replace=False))


def _size_plan(n: int, sizes: Sequence[int], budget: int) -> dict[int, bool]:
    """Which sizes fit the remaining budget for exhaustive enumeration (smallest first)."""
    left = budget
    plan = {}
    for s in sorted(sizes):
        c = math.comb(n, s)
        plan[s] = c <= left
        if plan[s]:
            left -= c
    return plan


def check_thin_minors(
    M: Matrix01,
    eps0=Fraction(1, 2),
    gamma=Fraction(1, 10),
    budget: int = 10**6,
    rng=None,
    samples: int = 200,
    certify: bool = False,
    d: int | None = None,
) -> EventReport:
    """Complement of bad(eps0, gamma): no (S, B) with |S| <= s0, |B| <= b0(|S|) and
    max(e(S,B), e(B,S)) >= eps0 d |S|.

    A size class is certified outright when b min(D, s) < eps0 d s, with D the
    largest line sum; otherwise S is enumerated (or sampled) and the worst B is
    the top-b columns (rows) by mass into S.
    """
    n = M.n
    if d is None:
        d = M.degree()
        if d is None:
            raise ValueError("pass d for a non-regular matrix")
    rng = as_rng(rng)
    dense = M.to_dense().astype(np.int64)
    D = int(max(M.row_sums.max(), M.col_sums.max()))
    s_max = min(n, math.floor(_s0(n, d, gamma)))
    e0n, e0d = _rat(eps0).numerator, _rat(eps0).denominator
    classes = []
    need = []
    for s in range(1, s_max + 1):
        b = min(n, math.floor(_b0(n, d, eps0, gamma, s)))
        cap = min(b * min(D, s), s * min(D, b))
        if cap * e0d < e0n * d * s:
            classes.append({"s": s, "b": b, "mode": "bound", "max_edges": cap})
        else:
            need.append((s, b))
    plan = _size_plan(n, [s for s, _ in need], budget)
    if certify and not all(plan.values()):
        raise BudgetExceeded("thin-minor sizes exceed the subset budget")
    margin: Fraction | None = None
    witness: dict = {}
    used = 0
    for s, b in need:
        exhaustive = plan[s]
        worst, wS = -1, None
        for S in _subsets_of_size(n, s, exhaustive, samples, rng):
            used += 1
            out_mass = np.sort(dense[S].sum(axis=0))[::-1]
            in_mass = np.sort(dense[:, S].sum(axis=1))[::-1]
            e = int(max(out_mass[:b].sum(), in_mass[:b].sum()))
            if e > worst:
                worst, wS = e, S
        classes.append({"s": s, "b": b, "mode": "exact" if exhaustive else "sampled", "max_edges": worst})
        slack = Fraction(e0n * d * s, e0d) - worst
        if margin is None or slack < margin:
            margin = slack
            witness = {"S": frozenset(int(i) for i in wS), "size": s, "b": b}
    if margin is None:
        # every class certified by the line-sum bound; report the tightest bound slack
        margin = min((Fraction(e0n * d * c["s"], e0d) - c["max_edges"] for c in classes), default=Fraction(0))
    mode = "exact" if all(c["mode"] in ("bound", "exact") for c in classes) else "sampled"
    return EventReport(
        name="thin_minors",
        passed=margin > 0,
        margin=margin,
        witness=witness,
        mode=mode,
        samples_used=used,
        details={"s0": _s0(n, d, gamma), "classes": classes},
    )


# -- expansion ------------------------------------------------------------------------

def _min_neighborhood_exhaustive(bits: np.ndarray, s: int, chunk: int = 65536) -> tuple[int, tuple[int, ...]]:
    n = bits.shape[0]
    best, arg = None, None
    it = itertools.combinations(range(n), s)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            break
        idx = np.array(block, dtype=np.int64)
        acc = np.bitwise_or.reduce(bits[idx], axis=1)
        sizes = _popcount_rows(acc)
        k = int(np.argmin(sizes))
        if best is None or sizes[k] < best:
            best, arg = int(sizes[k]), block[k]
    return best, arg


def _min_neighborhood_greedy(bits: np.ndarray, s: int, starts: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    n = bits.shape[0]
    best, arg = None, None
    for st in starts:
        chosen = [int(st)]
        acc = bits[st].copy()
        avail = np.ones(n, dtype=bool)
        avail[st] = False
        for _ in range(s - 1):
            sizes = _popcount_rows(bits | acc)
            sizes[~avail] = np.iinfo(np.int64).max
            r = int(np.argmin(sizes))
            chosen.append(r)
            avail[r] = False
            acc |= bits[r]
        size = int(np.bitwise_count(acc).sum())
        if best is None or size < best:
            best, arg = size, tuple(sorted(chosen))
    return best, arg


def _expansion_event(
    name: str,
    M: Matrix01,
    requirement: Callable[[int], float],
    s_max: int,
    budget: int,
    samples: int,
    rng,
    certify: bool,
    force_exhaustive: int = 0,
) -> EventReport:
    """|N(S)| >= requirement(|S|) for 1 <= |S| <= s_max, in both M and M^T.

    Hall's bound |N(S)| >= max(rowmin, ceil(s rowmin / colmax)) certifies a
    size class when it already meets the requirement.
    """
    n = M.n
    rng = as_rng(rng)
    classes = []
    margin: float | None = None
    witness: dict = {}
    used = 0
    all_exact = True
    for label, A in (("M", M), ("MT", M.transpose())):
        rmin = int(A.row_sums.min())
        cmax = int(A.col_sums.max())
        open_sizes = []
        for s in range(1, s_max + 1):
            lb = max(rmin, -(-s * rmin // cmax)) if cmax else 0
            req = requirement(s)
            if lb >= req and s > force_exhaustive:
                classes.append({"orientation": label, "s": s, "mode": "bound", "min_nbhd": lb, "req": req})
                margin = lb - req if margin is None else min(margin, lb - req)
            else:
                open_sizes.append(s)
        plan = _size_plan(n, open_sizes, budget)
        if certify and not all(plan.values()):
            raise BudgetExceeded("expansion sizes exceed the subset budget")
        for s in open_sizes:
            req = requirement(s)
            if plan[s]:
                found, S = _min_neighborhood_exhaustive(A.bits, s)
                used += math.comb(n, s)
                mode = "exact"
            else:
                all_exact = False
                starts = rng.choice(n, size=min(n, max(1, samples)), replace=False)
                found, S = _min_neighborhood_greedy(A.bits, s, starts)
                # plus uniform random sets as an audit of the greedy
                for _ in range(samples):
                    R = rng.choice(n, size=s, replace=False)
                    size = int(np.bitwise_count(np.bitwise_or.reduce(A.bits[R], axis=0)).sum())
                    if size < found:
                        found, S = size, tuple(sorted(int(x) for x in R))
                used += len(starts) + samples
                mode = "sampled"
            classes.append({"orientation": label, "s": s, "mode": mode, "min_nbhd": found, "req": req})
            slack = found - req
            if margin is None or slack < margin:
                margin = slack
                witness = {"orientation": label, "S": frozenset(S), "nbhd": found}
    if margin is None:
        margin = math.inf
    return EventReport(
        name=name,
        passed=margin >= 0,
        margin=float(margin),
        witness=witness,
        mode="exact" if all_exact else "sampled",
        samples_used=used,
        details={"classes": classes},
    )


def check_expansion(
    M: Matrix01,
    gamma=Fraction(1, 10),
    budget: int = 10**6,
    rng=None,
    samples: int = 200,
    certify: bool = False,
    d: int | None = None,
    force_exhaustive: int = 0,
) -> EventReport:
    """G^exp(gamma): |N(S)| >= (gamma / log n) d |S| whenever |S| <= s0(gamma), for M and M^T."""
    n = M.n
    if d is None:
        d = M.degree()
        if d is None:
            raise ValueError("pass d for a non-regular matrix")
    coef = float(gamma) * d / math.log(n) if n > 1 else 0.0
    s_max = min(n, math.floor(_s0(n, d, gamma))) if n > 1 else n
    return _expansion_event("expansion", M, lambda s: coef * s, s_max, budget, samples, rng, certify, force_exhaustive)


# -- Theorem 1.5 conditions -------------------------------------------------------------

def _condition_degree(Sigma: Matrix01, d: int) -> EventReport:
    rows, cols = Sigma.row_sums, Sigma.col_sums
    lo = int(min(rows.min(), cols.min()))
    w = {"row": int(np.argmin(rows))} if rows.min() <= cols.min() else {"col": int(np.argmin(cols))}
    return EventReport("min_degree", lo >= d, Fraction(lo - d), witness=w)


def _condition_cap(Sigma: Matrix01, d: int) -> EventReport:
    # e(S,B) <= d|S| for all S, B iff every row sum is <= d; e(B,S) likewise with columns
    rows, cols = Sigma.row_sums, Sigma.col_sums
    hi = int(max(rows.max(), cols.max()))
    w = {"row": int(np.argmax(rows))} if rows.max() >= cols.max() else {"col": int(np.argmax(cols))}
    return EventReport("thin_dense_cap", hi <= d, Fraction(d - hi), witness=w)


def _condition_sparse(Sigma: Matrix01, d: int, cfg: GoodEventConfig, rng, certify: bool) -> EventReport:
    """e(A,B) >= c2 (d/n)|A||B| for |A|,|B| >= C2 (n/d) log n."""
    n = Sigma.n
    thresh = float(cfg.C2) * n / d * math.log(n) if n > 1 else 0.0
    t = max(1, math.ceil(thresh - 1e-12))
    if t > n:
        return EventReport("no_sparse_minors", True, math.inf, details={"threshold": thresh, "family": "empty"})
    count_a = _family_size(n, t)
    exhaustive = count_a <= cfg.budget
    if certify and not exhaustive:
        raise BudgetExceeded(f"{count_a} row sets exceed the budget {cfg.budget}")
    dense = Sigma.to_dense().astype(np.int64)
    cn, cd = cfg.c2.numerator, cfg.c2.denominator
    bs = np.arange(t, n + 1)
    best = None
    used = 0
    for A in _row_sets(n, t, exhaustive, cfg.samples, rng):
        used += 1
        a = len(A)
        mass = np.sort(dense[A].sum(axis=0))
        low = np.concatenate(([0], np.cumsum(mass)))[bs]
        slack = low * cd * n - cn * d * a * bs  # scaled by cd * n
        k = int(np.argmin(slack))
        val = Fraction(int(slack[k]), cd * n)
        if best is None or val < best[0]:
            cols = np.argsort(dense[A].sum(axis=0), kind="stable")[: int(bs[k])]
            best = (val, frozenset(int(i) for i in A), frozenset(int(j) for j in cols))
    val, wa, wb = best
    return EventReport(
        "no_sparse_minors",
        val >= 0,
        val,
        witness={"A": wa, "B": wb},
        mode="exact" if exhaustive else "sampled",
        samples_used=used,
        details={"threshold": thresh, "row_sets": count_a},
    )


def check_good_d(Sigma: Matrix01, d: int, config: GoodEventConfig | None = None, rng=None, certify: bool = False) -> DiscrepancyReport:
    """The four conditions of good(d) for a general 0/1 matrix.

    Condition (1) over all gamma <= c1 is equivalent to
    |N(S)| >= min(c1 d |S| / log n, n / 2) for every nonempty S, in Sigma and Sigma^T.
    """
    cfg = config or GoodEventConfig()
    rng = as_rng(rng)
    n = Sigma.n
    coef = float(cfg.c1) * d / math.log(n) if n > 1 else 0.0
    expansion = _expansion_event(
        "small_set_expansion",
        Sigma,
        lambda s: min(coef * s, n / 2),
        n,
        cfg.budget,
        min(cfg.samples, 200),
        rng,
        certify,
    )
    return DiscrepancyReport(
        [
            _condition_degree(Sigma, d),
            expansion,
            _condition_sparse(Sigma, d, cfg, rng, certify),
            _condition_cap(Sigma, d),
        ]
    )


# -- symmetric-group concentration ----------------------------------------------------------

@dataclass
class SymGroupTable:
    m: int
    a: int
    b: int
    trials: int
    counts: dict[int, int]
    mean: float
    std: float
    expected_mean: Fraction
    tv_to_hypergeom: float
    tails: list[dict]
    c: float

    @property
    def tails_within_bound(self) -> bool:
        return all(row["empirical"] <= row["bound"] for row in self.tails)


def sym_group_concentration(
    m: int,
    A: Iterable[int],
    B: Iterable[int],
    trials: int,
    rng=None,
    taus: Sequence[float] = (0.25, 0.5, 1.0, 2.0),
    c: float = 0.25,
) -> SymGroupTable:
    """Empirical law of e_pi(A, B) = |{i in A : pi(i) in B}| for uniform pi in S_m.

    The exact law is hypergeometric; tails are compared with
    2 exp(-c tau^2 / (1 + tau) |A||B|/m).
    """
    A, B = sorted(set(A)), set(B)
    if any(not 0 <= x < m for x in A) or any(not 0 <= x < m for x in B):
        raise ValueError("sets must lie in [m]")
    rng = as_rng(rng)
    inB = np.zeros(m, dtype=bool)
    inB[list(B)] = True
    values = np.empty(trials, dtype=np.int64)
    block = 20000
    Aidx = np.array(A, dtype=np.int64)
    for start in range(0, trials, block):
        k = min(block, trials - start)
        perms = np.argsort(rng.random((k, m)), axis=1)
        values[start : start + k] = inB[perms[:, Aidx]].sum(axis=1) if len(A) else 0
    a, b = len(A), len(B)
    counts = dict(zip(*np.unique(values, return_counts=True)))
    counts = {int(k): int(v) for k, v in counts.items()}
    support = np.arange(0, min(a, b) + 1)
    pmf = stats.hypergeom(m, b, a).pmf(support)
    emp = np.array([counts.get(int(k), 0) for k in support]) / trials
    tv = 0.5 * float(np.abs(emp - pmf).sum())
    mu = a * b / m
    tails = []
    for tau in taus:
        hit = float(np.mean(np.abs(values - mu) >= tau * mu)) if mu > 0 else 0.0
        bound = 2 * math.exp(-c * tau**2 / (1 + tau) * mu)
        tails.append({"tau": tau, "empirical": hit, "bound": bound})
    return SymGroupTable(
        m=m,
        a=a,
        b=b,
        trials=trials,
        counts=counts,
        mean=float(values.mean()),
        std=float(values.std()),
        expected_mean=Fraction(a * b, m),
        tv_to_hypergeom=tv,
        tails=tails,
        c=c,
    )


# -- bad pairs --------------------------------------------------------------------------------

@dataclass
class BadPairAudit:
    n: int
    b: int
    eps: Fraction
    a_size: int
    a_eps_complement: int
    s_sizes: dict[int, int]
    low_mass_rows: int
    scale: float
    constant: float

    @property
    def max_s(self) -> int:
        return max(self.s_sizes.values(), default=0)

    @property
    def within_bound(self) -> bool:
        bound = self.constant * self.scale
        return self.a_eps_complement <= bound and self.max_s <= bound


def bad_pair_audit(
    M: Matrix01,
    B: Iterable[int],
    eps=Fraction(1, 2),
    A: Iterable[int] | None = None,
    c2=Fraction(3, 10),
    constant: float = 10.0,
) -> BadPairAudit:
    """Exact sizes of A minus A_eps and of every S_eps(i), i in A_eps.

    (i1, i2) is eps-bad for B when |Ex(i1,i2) & B| <= eps p|B| or
    |Ex(i2,i1) & B^c| <= eps p(n - |B|).  ``low_mass_rows`` counts i in A
    with |B(i)| < c2 p |B|.
    """
    n = M.n
    Bset = set(B)
    if not Bset or len(Bset) == n:
        raise ValueError("B must be a nonempty proper subset")
    rows = sorted(set(range(n)) if A is None else set(A))
    d = M.degree()
    if d is None:
        raise ValueError("bad-pair audit needs a regular matrix")
    eps = _rat(eps)
    en, ed = eps.numerator, eps.denominator
    dense = M.to_dense().astype(np.int64)
    bvec = np.zeros(n, dtype=np.int64)
    bvec[list(Bset)] = 1
    cvec = 1 - bvec
    b, bc = len(Bset), n - len(Bset)
    inB = dense @ bvec
    inC = dense @ cvec
    # |x/(p|B|) - 1| <= eps  <=>  |x n - d|B|| ed <= en d |B|
    ok_b = np.abs(inB * n - d * b) * ed <= en * d * b
    ok_c = np.abs(inC * n - d * bc) * ed <= en * d * bc
    rows_arr = np.array(rows, dtype=np.int64)
    a_eps = rows_arr[(ok_b & ok_c)[rows_arr]]
    ex_b = inB[:, None] - (dense * bvec) @ dense.T  # |Ex(i, i') & B|
    ex_c = inC[:, None] - (dense * cvec) @ dense.T  # |Ex(i, i') & B^c|
    bad = (ex_b * n * ed <= en * d * b) | (ex_c.T * n * ed <= en * d * bc)
    s_sizes = {}
    for i in a_eps:
        others = a_eps[a_eps != i]
        s_sizes[int(i)] = int(bad[i, others].sum())
    c2 = _rat(c2)
    low = int((inB[rows_arr] * n * c2.denominator < c2.numerator * d * b).sum())
    return BadPairAudit(
        n=n,
        b=b,
        eps=eps,
        a_size=len(rows),
        a_eps_complement=len(rows) - len(a_eps),
        s_sizes=s_sizes,
        low_mass_rows=low,
        scale=n / d * math.log(n),
        constant=constant,
    )
