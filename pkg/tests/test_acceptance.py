"""Acceptance criteria 1-11.  Each test prints a single PASS/FAIL line."""

import math
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from rrdlab.coupling import (
    apply_plan,
    determinant_walk,
    locate_patches,
    make_restricted_plan,
    pushforward_law,
    total_variation,
    walk_decomposition,
)
from rrdlab.discrepancy import check_codegree, check_good_d, edge_deviation, sym_group_concentration
from rrdlab.exact_rank import (
    corank_exact,
    level_profile,
    sls_witness_to_sparse,
    sparse_to_sls_witness,
    xi0_kernel_check,
)
from rrdlab.experiments import ExperimentSpec, d2_cycle_experiment, erdos_oracle, mc_singularity
from rrdlab.matrix_core import edge_count
from rrdlab.rng import make_rng
from rrdlab.sampler import count, count_in_budget, default_mcmc_steps, enumerate_all, sample_rrd

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys):
    def emit(number: int, ok: bool, elapsed: float, limit: float, detail: str) -> None:
        within = elapsed < limit
        status = "PASS" if ok and within else "FAIL"
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {status} ({elapsed:.1f}s / limit {limit:.0f}s) {detail}")
        assert ok, detail
        assert within, f"runtime {elapsed:.1f}s exceeds {limit}s"

    return emit


def test_c01_count_oracle(verdict):
    t0 = time.perf_counter()
    perms = all(count(n, 1) == math.factorial(n) for n in range(2, 7))
    enum = count(4, 2) == len(enumerate_all(4, 2))
    pairs = [(n, d) for n in range(1, 64) for d in range(n + 1) if count_in_budget(n, d)]
    sym = all(count(n, d) == count(n, n - d) for n, d in pairs)
    verdict(1, perms and enum and sym, time.perf_counter() - t0, 10,
            f"n! {perms}, |M(4,2)| {enum}, symmetry over {len(pairs)} pairs {sym}")


def test_c02_coupling_law(verdict):
    t0 = time.perf_counter()
    full = {}
    for n, d in ((3, 1), (4, 2), (5, 2)):
        support = enumerate_all(n, d)
        full[(n, d)] = total_variation(pushforward_law(support, 0, 1), support)
    support = enumerate_all(4, 2)
    worst = Fraction(0)
    checked = 0
    for mask in range(16):
        frozen = {j for j in range(4) if mask >> j & 1}
        for s in (0, 1, 2, None):
            worst = max(worst, total_variation(pushforward_law(support, 0, 1, frozen, s), support))
            checked += 1
    ok = all(tv == 0 for tv in full.values()) and worst == 0
    verdict(2, ok, time.perf_counter() - t0, 60,
            f"full TV {[str(v) for v in full.values()]}, restricted max TV {worst} over {checked} (frozen, s)")


def _rational(rng, n):
    return [Fraction(int(a), int(b)) for a, b in zip(rng.integers(-20, 21, n), rng.integers(1, 9, n))]


def test_c03_walk_identities(verdict):
    t0 = time.perf_counter()
    rng = make_rng(2024, 3)
    bad_rows = bad_det = 0
    for t in range(1000):
        n = int(rng.integers(3, 13))
        d = int(rng.integers(1, n))
        M = sample_rrd(n, d, rng)
        i1, i2 = (int(v) for v in rng.choice(n, 2, replace=False))
        frozen = set(rng.choice(n, int(rng.integers(0, 3)), replace=False).tolist()) if t % 2 else set()
        plan = make_restricted_plan(M, i1, i2, frozen, None, rng)
        out = apply_plan(M, plan)
        u = _rational(rng, n)
        wd = walk_decomposition(M, plan, u)
        direct = tuple(sum((u[j] for j in out.neighborhood(i)), Fraction(0)) for i in (i1, i2))
        bad_rows += wd.rows() != direct
        dw = determinant_walk(M, plan, _rational(rng, n), _rational(rng, n))
        bad_det += dw.D_after != dw.W_v
    verdict(3, bad_rows == 0 and bad_det == 0, time.perf_counter() - t0, 30,
            f"reconstruction mismatches {bad_rows}/1000, determinant mismatches {bad_det}/1000")


def test_c04_d2_singularity(verdict):
    t0 = time.perf_counter()
    (small,) = d2_cycle_experiment([4], 0, mode="enumerate")
    rows = []
    for n in (8, 10, 12):
        (row,) = d2_cycle_experiment([n], 10**4, seed=4, mode="mcmc", steps=10 * default_mcmc_steps(n, 2))
        rows.append(row)
    ok = small.estimate.p_hat == 1 and all(r.within_uniform_benchmark for r in rows)
    detail = "; ".join(
        f"n={r.n} p_hat={float(r.estimate.p_hat):.4f} CI=[{r.estimate.ci_low:.4f},{r.estimate.ci_high:.4f}] "
        f"1-q_n={float(r.benchmark_uniform_derangement):.4f} exact={float(r.benchmark_exact):.4f}"
        for r in rows
    )
    verdict(4, ok, time.perf_counter() - t0, 300, f"(4,2) fraction {small.estimate.p_hat}; {detail}")


def test_c05_erdos(verdict):
    t0 = time.perf_counter()
    rng = make_rng(2024, 5)
    violations = 0
    attained = True
    for m in range(1, 17):
        ref = erdos_oracle(f"all-ones {m}")
        attained &= ref.max_atom == ref.bound
        for _ in range(200):
            num = rng.integers(1, 50, m) * rng.choice([-1, 1], m)
            x = [Fraction(int(a), int(b)) for a, b in zip(num, rng.integers(1, 7, m))]
            res = erdos_oracle(x)
            violations += res.m != m or not res.within_bound
    verdict(5, violations == 0 and attained, time.perf_counter() - t0, 120,
            f"violations {violations}/3200, all-equal attains bound {attained}")


def test_c06_invertibility(verdict):
    t0 = time.perf_counter()
    spec = ExperimentSpec("c6", ((100, 20), (150, 30), (200, 40)), 1000, seed=6)
    rows = mc_singularity(spec, threads=os.cpu_count() or 1)
    ok = all(r["estimate"].hits == 0 and r["estimate"].ci_high < 0.004 for r in rows)
    detail = ", ".join(f"({r['n']},{r['d']}) {r['kind']} {r['estimate'].hits}/1000" for r in rows)
    verdict(6, ok, time.perf_counter() - t0, 1200, detail)


def test_c07_xi0_kernel(verdict):
    t0 = time.perf_counter()
    parts = []
    ok = True
    for n in (8, 12):
        rng = make_rng(2024, 7, n)
        res = [xi0_kernel_check(n, rng) for _ in range(500)]
        ones = all(r.kernel_contains_ones for r in res)
        rate = sum(r.corank == 1 for r in res) / 500
        ok &= ones and rate >= 0.9
        parts.append(f"n={n} Xi0*1=0 always {ones}, corank 1 rate {rate:.3f}")
    verdict(7, ok, time.perf_counter() - t0, 300, "; ".join(parts))


def test_c08_discrepancy_invariants(verdict):
    t0 = time.perf_counter()
    rng = make_rng(2024, 8)
    dual_bad = cap_bad = 0
    for _ in range(10**4):
        n = int(rng.integers(2, 31))
        d = int(rng.integers(1, n + 1))
        M = sample_rrd(n, d, rng)
        A = set(np.flatnonzero(rng.random(n) < rng.random()).tolist())
        B = set(np.flatnonzero(rng.random(n) < rng.random()).tolist())
        x = edge_deviation(M, A, B)
        y = edge_deviation(M, set(range(n)) - A, set(range(n)) - B)
        dual_bad += (x.e - x.mu != y.e - y.mu) or x.tau != y.tau
        cap_bad += edge_count(M, A, B) > d * len(A)
    tab = sym_group_concentration(20, range(10), range(10, 20), 10**5, rng)
    ok = dual_bad == 0 and cap_bad == 0 and tab.tv_to_hypergeom < 0.01
    verdict(8, ok, time.perf_counter() - t0, 120,
            f"duality failures {dual_bad}, cap violations {cap_bad}, TV to hypergeometric {tab.tv_to_hypergeom:.4f}")


def test_c09_good_event_rates(verdict):
    t0 = time.perf_counter()
    rng = make_rng(2024, 9)
    good = codeg = both = 0
    for _ in range(100):
        M = sample_rrd(100, 25, rng)
        g = check_good_d(M, 25, rng=rng).passed
        c = check_codegree(M, Fraction(1, 2)).passed
        good += g
        codeg += c
        both += g and c
    verdict(9, both >= 95, time.perf_counter() - t0, 600,
            f"good(d) {good}/100, codegree {codeg}/100, both {both}/100")


def _dilation(a, b) -> bool:
    k = next(i for i, v in enumerate(a) if v != 0)
    if b[k] == 0:
        return False
    c = b[k] / a[k]
    return all(c * x == y for x, y in zip(a, b))


def test_c10_claim51_round_trip(verdict):
    t0 = time.perf_counter()
    instances = checks = failures = 0
    for n in (4, 5):
        for M in enumerate_all(n, 2):
            res = corank_exact(M)
            if res.corank == 0:
                continue
            instances += 1
            dense = M.to_dense().astype(object)
            for x in res.kernel_basis:
                for lam, size in level_profile(x).level_map.items():
                    checks += 1
                    y = sls_witness_to_sparse(x, lam, M)
                    image = set((dense @ np.array(y, dtype=object)).tolist())
                    x2, lam2 = sparse_to_sls_witness(y, M)
                    y2 = sls_witness_to_sparse(x2, lam2, M)
                    ok = (
                        image <= ({0} if lam == 0 else {1})
                        and sum(v != 0 for v in y) == n - size
                        and _dilation(x, x2)
                        and level_profile(x2).level_map.get(lam2) == size
                        and _dilation(y, y2)
                    )
                    failures += not ok
    verdict(10, failures == 0 and instances > 0, time.perf_counter() - t0, 60,
            f"{instances} singular instances, {checks} level-set round trips, failures {failures}")


def test_c11_patches(verdict):
    t0 = time.perf_counter()
    rng = make_rng(2024, 11)
    bad = found = successes = 0
    for _ in range(50):
        M = sample_rrd(60, 12, rng)
        sigma = [int(v) for v in rng.permutation(np.arange(54, 60))]
        res = locate_patches(M, sigma, 6)
        props = res.verify(6)
        bad += not all(props.values())
        found += res.m
        successes += res.success
    verdict(11, bad == 0, time.perf_counter() - t0, 60,
            f"property failures {bad}/50, patches found {found}, target reached {successes}/50")
