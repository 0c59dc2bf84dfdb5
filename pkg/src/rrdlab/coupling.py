"""The shuffling coupling, its random-walk decompositions, and greedy patch location.

A shuffle at rows (i1, i2) pairs columns j in Ex(i1, i2) with pi(j) in
Ex(i2, i1) and re-randomizes each 2x2 minor on rows (i1, i2) and columns
(j, pi(j)) to I (sign +1) or J (sign -1).  Restricted plans only touch a chosen
s-subset of each exclusive set outside a frozen column set.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


from .matrix_core import Matrix01, co_ex_sets
from .rng import as_rng

__all__ = [
    "PlanError",
    "ShufflePlan",
    "WalkDecomposition",
    "DeterminantWalk",
    "PatchResult",
    "make_shuffle_plan",
    "make_restricted_plan",
    "apply_plan",
    "walk_decomposition",
    "determinant_walk",
    "cross_set",
    "expected_cross_size",
    "locate_patches",
    "enumerate_plans",
    "pushforward_law",
    "total_variation",
]


class PlanError(ValueError):
    """A plan does not match the matrix it is applied to."""


@dataclass(frozen=True)
class ShufflePlan:
    i1: int
    i2: int
    frozen: frozenset[int]
    S1: tuple[int, ...]
    S2: tuple[int, ...]
    pi: Mapping[int, int]
    xi: Mapping[int, int]

    @property
    def s(self) -> int:
        return len(self.S1)

    def __post_init__(self):
        if self.i1 == self.i2:
            raise PlanError("rows must be distinct")
        s1, s2 = set(self.S1), set(self.S2)
        if len(s1) != len(self.S1) or len(s2) != len(self.S2) or len(s1) != len(s2):
            raise PlanError("S1 and S2 must be duplicate-free and of equal size")
        if s1 & s2 or (s1 | s2) & self.frozen:
            raise PlanError("S1, S2 and the frozen set must be pairwise disjoint")
        if set(self.pi) != s1 or set(self.pi.values()) != s2:
            raise PlanError("pi must be a bijection S1 -> S2")
        if set(self.xi) != s1 or any(v not in (1, -1) for v in self.xi.values()):
            raise PlanError("xi must assign a sign to every element of S1")

    def to_json(self) -> str:
        """Replay record; indices are 1-based."""
        rec = {
            "i1": self.i1 + 1,
            "i2": self.i2 + 1,
            "frozen": sorted(j + 1 for j in self.frozen),
            "S1": [j + 1 for j in self.S1],
            "S2": [j + 1 for j in self.S2],
            "pi": [[j + 1, self.pi[j] + 1] for j in self.S1],
            "xi": [self.xi[j] for j in self.S1],
        }
        return json.dumps(rec, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ShufflePlan":
        rec = json.loads(text)
        S1 = tuple(j - 1 for j in rec["S1"])
        if len(rec["xi"]) != len(S1):
            raise PlanError("xi list must match S1")
        return cls(
            i1=rec["i1"] - 1,
            i2=rec["i2"] - 1,
            frozen=frozenset(j - 1 for j in rec["frozen"]),
            S1=S1,
            S2=tuple(j - 1 for j in rec["S2"]),
            pi={a - 1: b - 1 for a, b in rec["pi"]},
            xi=dict(zip(S1, rec["xi"])),
        )


def _free_ex(M: Matrix01, i1: int, i2: int, frozen: Iterable[int]) -> tuple[list[int], list[int]]:
    _, ex12, ex21 = co_ex_sets(M, i1, i2)
    fz = set(frozen)
    return sorted(ex12 - fz), sorted(ex21 - fz)


def make_shuffle_plan(M: Matrix01, i1: int, i2: int, rng=None) -> ShufflePlan:
    """Full shuffle: uniform bijection Ex(i1,i2) -> Ex(i2,i1) and iid signs."""
    return make_restricted_plan(M, i1, i2, frozenset(), None, rng)


def make_restricted_plan(
    M: Matrix01, i1: int, i2: int, frozen: Iterable[int], s: int | None, rng=None
) -> ShufflePlan:
    """Restricted shuffle avoiding ``frozen``; ``s=None`` takes the largest legal size."""
    rng = as_rng(rng)
    frozen = frozenset(frozen)
    A1, A2 = _free_ex(M, i1, i2, frozen)
    cap = min(len(A1), len(A2))
    if s is None:
        s = cap
    if not 0 <= s <= cap:
        raise PlanError(f"s={s} exceeds min(|A1|, |A2|) = {cap}")
    S1 = tuple(sorted(int(j) for j in rng.choice(A1, size=s, replace=False))) if s else ()
    S2 = tuple(sorted(int(j) for j in rng.choice(A2, size=s, replace=False))) if s else ()
    images = [S2[k] for k in rng.permutation(s)] if s else []
    signs = 2 * rng.integers(0, 2, size=s) - 1
    return ShufflePlan(
        i1=i1,
        i2=i2,
        frozen=frozen,
        S1=S1,
        S2=S2,
        pi=dict(zip(S1, images)),
        xi={j: int(x) for j, x in zip(S1, signs)},
    )


def _check_plan(M: Matrix01, plan: ShufflePlan) -> tuple[list[int], list[int]]:
    A1, A2 = _free_ex(M, plan.i1, plan.i2, plan.frozen)
    if not set(plan.S1) <= set(A1) or not set(plan.S2) <= set(A2):
        raise PlanError("plan sets are not inside the current exclusive sets")
    return A1, A2


def apply_plan(M: Matrix01, plan: ShufflePlan) -> Matrix01:
    """Perform the shuffle; returns a new matrix and leaves M untouched."""
    _check_plan(M, plan)
    out = M.copy()
    i1, i2 = plan.i1, plan.i2
    for j in plan.S1:
        if plan.xi[j] == -1:
            k = plan.pi[j]
            out.flip(i1, j)
            out.flip(i1, k)
            out.flip(i2, j)
            out.flip(i2, k)
    return out


# -- walk decompositions --------------------------------------------------------

@dataclass(frozen=True)
class WalkDecomposition:
    A_u: Fraction
    W_u: Fraction
    offset: Fraction
    steps: dict[int, Fraction]
    steps_set: frozenset[int]
    flats_set: frozenset[int]

    def rows(self) -> tuple[Fraction, Fraction]:
        """Predicted (R~_{i1} . u, R~_{i2} . u)."""
        return self.A_u + self.W_u, self.A_u - self.W_u


def _fracs(u: Sequence, n: int) -> list[Fraction]:
    if len(u) != n:
        raise ValueError(f"vector has length {len(u)}, expected {n}")
    return [Fraction(x) for x in u]


def _walk_parts(M: Matrix01, plan: ShufflePlan, u: list[Fraction]):
    _, ex12, ex21 = co_ex_sets(M, plan.i1, plan.i2)
    r1 = sum((u[j] for j in M.neighborhood(plan.i1)), Fraction(0))
    r2 = sum((u[j] for j in M.neighborhood(plan.i2)), Fraction(0))
    steps = {j: (u[j] - u[plan.pi[j]]) / 2 for j in plan.S1}
    # unselected exclusive columns keep their row; their imbalance is a fixed offset
    offset = (
        sum((u[j] for j in ex12 - set(plan.S1)), Fraction(0))
        - sum((u[j] for j in ex21 - set(plan.S2)), Fraction(0))
    ) / 2
    walk = sum((plan.xi[j] * steps[j] for j in plan.S1), Fraction(0)) + offset
    return (r1 + r2) / 2, walk, offset, steps


def walk_decomposition(M: Matrix01, plan: ShufflePlan, u: Sequence) -> WalkDecomposition:
    """Split the shuffled rows' action on u into A(u)(1,1) + W(u)(1,-1).

    A(u) = (R_{i1} + R_{i2}).u / 2 does not depend on the plan.  W(u) is
    sum over S1 of xi(j) (u(j) - u(pi j)) / 2 plus an offset from exclusive
    columns outside S1 and S2, which vanishes for full plans.
    """
    _check_plan(M, plan)
    uf = _fracs(u, M.n)
    A, W, offset, steps = _walk_parts(M, plan, uf)
    nz = frozenset(j for j, v in steps.items() if v != 0)
    return WalkDecomposition(
        A_u=A,
        W_u=W,
        offset=offset,
        steps=steps,
        steps_set=nz,
        flats_set=frozenset(plan.S1) - nz,
    )


@dataclass(frozen=True)
class DeterminantWalk:
    D_before: Fraction
    D_after: Fraction
    v: list[Fraction]
    W_v: Fraction
    kernel_ok: bool


def _dot(M: Matrix01, i: int, u: Sequence[Fraction]) -> Fraction:
    return sum((u[j] for j in M.neighborhood(i)), Fraction(0))


def _two_by_two(M: Matrix01, i1: int, i2: int, u1, u2) -> Fraction:
    return _dot(M, i1, u1) * _dot(M, i2, u2) - _dot(M, i2, u1) * _dot(M, i1, u2)


def determinant_walk(M: Matrix01, plan: ShufflePlan, u1: Sequence, u2: Sequence) -> DeterminantWalk:
    """The 2x2 determinant of rows (i1, i2) against (u1, u2), before and after the shuffle.

    With v = [(R_{i1}+R_{i2}).u2] u1 - [(R_{i1}+R_{i2}).u1] u2 the shuffled
    determinant equals W(v), the walk functional of the same plan.  The
    identity is algebraic; ``kernel_ok`` records whether u1, u2 annihilate the
    other rows, which is the setting where this determinant matters.
    """
    _check_plan(M, plan)
    n = M.n
    a, b = _fracs(u1, n), _fracs(u2, n)
    after = apply_plan(M, plan)
    s1 = _dot(M, plan.i1, b) + _dot(M, plan.i2, b)
    s2 = _dot(M, plan.i1, a) + _dot(M, plan.i2, a)
    v = [s1 * x - s2 * y for x, y in zip(a, b)]
    _, W_v, _, _ = _walk_parts(M, plan, v)
    others = [i for i in range(n) if i not in (plan.i1, plan.i2)]
    kernel_ok = all(_dot(M, i, a) == 0 and _dot(M, i, b) == 0 for i in others)
    return DeterminantWalk(
        D_before=_two_by_two(M, plan.i1, plan.i2, a, b),
        D_after=_two_by_two(after, plan.i1, plan.i2, a, b),
        v=v,
        W_v=W_v,
        kernel_ok=kernel_ok,
    )


# -- partition crossings ----------------------------------------------------------

def cross_set(M: Matrix01, plan: ShufflePlan, k: int) -> frozenset[int]:
    """Paired columns j < k (0-based, i.e. j in [k]) whose partner lies in [k+1, n]."""
    if not 0 <= k <= M.n:
        raise ValueError(f"k must lie in [0, {M.n}]")
    return frozenset(j for j in plan.S1 if j < k and plan.pi[j] >= k)


def expected_cross_size(
    M: Matrix01, i1: int, i2: int, k: int, frozen: Iterable[int] = (), s: int | None = None
) -> Fraction:
    """E|cross_set| over a random plan; for full plans |Ex cap [k]| |Ex' cap [k+1,n]| / |Ex'|."""
    A1, A2 = _free_ex(M, i1, i2, frozen)
    a1, a2 = len(A1), len(A2)
    if s is None:
        s = min(a1, a2)
    if s == 0:
        return Fraction(0)
    low = sum(1 for j in A1 if j < k)
    high = sum(1 for j in A2 if j >= k)
    return Fraction(low * s, a1) * Fraction(high, a2)


# -- greedy patches ----------------------------------------------------------------

@dataclass(frozen=True)
class PatchResult:
    success: bool
    m: int
    target: int
    j_seq: tuple[int, ...]
    fix_seq: tuple[frozenset[int], ...]
    patches: tuple[tuple[frozenset[int], frozenset[int]], ...]
    patch_threshold: float = 0.0
    trigger: float = 0.0

    def verify(self, k: int) -> dict[str, bool]:
        """Re-check largeness, disjointness and Fix monotonicity on the output."""
        large = all(
            len(a) >= self.patch_threshold and len(b) >= self.patch_threshold for a, b in self.patches
        )
        unions = [a | b for a, b in self.patches]
        disjoint = all(not (unions[x] & unions[y]) for x, y in itertools.combinations(range(len(unions)), 2))
        fixes = self.fix_seq
        monotone = (
            (not fixes or fixes[0] == frozenset(range(k)))
            and all(fixes[l] < fixes[l + 1] for l in range(len(fixes) - 1))
            and all(not (unions[l] & fixes[l]) for l in range(len(unions)))
            and list(self.j_seq) == sorted(set(self.j_seq))
        )
        return {"large": large, "disjoint": disjoint, "monotone": monotone}


def locate_patches(
    M: Matrix01,
    sigma: Mapping[int, int] | Sequence[int],
    k: int,
    eps0: float = 0.5,
    gamma: float = 0.1,
    trigger_frac: float = 0.1,
    patch_frac: float = 0.01,
) -> PatchResult:
    """Greedy search for column pairs (j, sigma(j)) with large disjoint row patches.

    Fix(1) = [k].  At step l the smallest j in [k] is taken whose exclusive
    row sets Ex_{M^T}(j, sigma j) and Ex_{M^T}(sigma j, j), minus Fix(l), both
    have size at least ``trigger_frac * d``; those sets are patch l and are
    added to Fix to give Fix(l+1).  Success means at least ``target`` patches,
    where target = max(1, ceil(((eps0 gamma / log n) d k - k) / (2d))) is the
    count forced off the thin-minor bad event.  Failure still returns the
    patches found.
    """
    n = M.n
    d = M.degree()
    if d is None:
        raise ValueError("matrix is not regular")
    if not 0 <= 2 * k <= n:
        raise ValueError("need 2k <= n")
    sig = dict(enumerate(sigma)) if not isinstance(sigma, Mapping) else dict(sigma)
    if set(sig) != set(range(k)) or sorted(sig.values()) != list(range(n - k, n)):
        raise ValueError("sigma must be a bijection [k] -> [n-k+1, n]")
    MT = M.transpose()
    ex = {}
    for j in range(k):
        _, plus, minus = co_ex_sets(MT, j, sig[j])
        ex[j] = (plus, minus)
    trigger = trigger_frac * d
    fix = frozenset(range(k))
    fix_seq = [fix]
    j_seq: list[int] = []
    patches: list[tuple[frozenset[int], frozenset[int]]] = []
    while True:
        pick = None
        for j in range(k):
            plus, minus = ex[j][0] - fix, ex[j][1] - fix
            if len(plus) >= trigger and len(minus) >= trigger and (plus or minus):
                pick = (j, plus, minus)
                break
        if pick is None:
            break
        j, plus, minus = pick
        j_seq.append(j)
        patches.append((plus, minus))
        fix = fix | plus | minus
        fix_seq.append(fix)
    m = len(patches)
    bound = ((eps0 * gamma / math.log(n)) * d * k - k) / (2 * d) if n > 1 else 0
    target = max(1, math.ceil(bound))
    return PatchResult(
        success=m >= target,
        m=m,
        target=target,
        j_seq=tuple(j_seq),
        fix_seq=tuple(fix_seq[: max(m, 1)]),
        patches=tuple(patches),
        patch_threshold=patch_frac * d,
        trigger=trigger,
    )


# -- exact laws ---------------------------------------------------------------------

def enumerate_plans(M: Matrix01, i1: int, i2: int, frozen: Iterable[int] = (), s: int | None = None):
    """Every plan with its probability under the random construction.

    ``s=None`` means the full free size; a requested s larger than
    min(|A1|, |A2|) is clipped to it, which keeps the law exact because the
    clip only depends on data the proof conditions on.
    """
    frozen = frozenset(frozen)
    A1, A2 = _free_ex(M, i1, i2, frozen)
    cap = min(len(A1), len(A2))
    s = cap if s is None else min(s, cap)
    n_sets = math.comb(len(A1), s) * math.comb(len(A2), s)
    weight = Fraction(1, n_sets * math.factorial(s) * 2**s)
    for S1 in itertools.combinations(A1, s):
        for S2 in itertools.combinations(A2, s):
            for images in itertools.permutations(S2):
                for signs in itertools.product((1, -1), repeat=s):
                    yield ShufflePlan(
                        i1=i1,
                        i2=i2,
                        frozen=frozen,
                        S1=S1,
                        S2=S2,
                        pi=dict(zip(S1, images)),
                        xi=dict(zip(S1, signs)),
                    ), weight


def pushforward_law(
    support: Sequence[Matrix01], i1: int, i2: int, frozen: Iterable[int] = (), s: int | None = None
) -> dict[bytes, Fraction]:
    """Exact law of the shuffled matrix when M is uniform on ``support``."""
    law: dict[bytes, Fraction] = defaultdict(Fraction)
    base = Fraction(1, len(support))
    for M in support:
        for plan, w in enumerate_plans(M, i1, i2, frozen, s):
            law[apply_plan(M, plan).key()] += base * w
    return dict(law)


def total_variation(law: Mapping[bytes, Fraction], support: Sequence[Matrix01]) -> Fraction:
    """Exact total-variation distance from the uniform law on ``support``."""
    u = Fraction(1, len(support))
    keys = {M.key() for M in support}
    tv = sum((abs(law.get(key, Fraction(0)) - u) for key in keys), Fraction(0))
    tv += sum((p for key, p in law.items() if key not in keys), Fraction(0))
    return tv / 2
