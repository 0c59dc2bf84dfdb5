import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rrdlab.discrepancy import (
    BudgetExceeded,
    GoodEventConfig,
    bad_pair_audit,
    check_codegree,
    check_expansion,
    check_good_d,
    check_large_minors,
    check_thin_minors,
    edge_deviation,
    sym_group_concentration,
)
from rrdlab.matrix_core import Matrix01, co_ex_sets, edge_count
from rrdlab.rng import make_rng
from rrdlab.sampler import sample_permutation, sample_rrd


def test_codegree_circulant_by_hand():
    M = Matrix01.circulant(6, 3)
    scale = Fraction(3 * 3, 6)
    devs = [abs(len(co_ex_sets(M, a, b)[1]) / scale - 1) for a in range(6) for b in range(a + 1, 6)]
    rep = check_codegree(M, Fraction(1, 2))
    assert rep.details["max_rel_dev"] == max(devs) == Fraction(1)
    assert not rep.passed and rep.margin == Fraction(-1, 2)


def test_codegree_permutation():
    M = Matrix01.from_permutation(sample_permutation(7, 0))
    rep = check_codegree(M, 1)
    assert rep.details["max_rel_dev"] == abs(Fraction(7, 6) - 1)
    assert rep.passed


def test_codegree_pass_rate_100_20():
    rng = make_rng(20)
    passes = sum(check_codegree(sample_rrd(100, 20, rng), 0.5).passed for _ in range(200))
    assert passes >= 198


def test_codegree_rejects_degenerate():
    with pytest.raises(ValueError):
        check_codegree(Matrix01.ones(4))


def test_edge_deviation_full_and_empty():
    M = sample_rrd(10, 3, 1)
    full = edge_deviation(M, range(10), {1, 4})
    assert full.e == full.mu == 6 and full.tau == 0
    empty = edge_deviation(M, (), ())
    assert empty.e == 0 and empty.mu == 0


@given(st.integers(0, 2**32))
def test_edge_deviation_duality(seed):
    rng = make_rng(seed)
    n = int(rng.integers(2, 20))
    d = int(rng.integers(1, n))
    M = sample_rrd(n, d, rng)
    A = set(np.flatnonzero(rng.random(n) < 0.5).tolist())
    B = set(np.flatnonzero(rng.random(n) < 0.5).tolist())
    Ac, Bc = set(range(n)) - A, set(range(n)) - B
    x, y = edge_deviation(M, A, B), edge_deviation(M, Ac, Bc)
    assert x.e - x.mu == y.e - y.mu and x.mu_hat == y.mu_hat
    assert edge_count(M, A, B) <= d * len(A)


def test_large_minors_all_ones():
    rep = check_large_minors(Matrix01.ones(6), eps=Fraction(1, 10), C0=Fraction(1, 100))
    assert rep.passed and rep.mode == "exact"


def test_large_minors_exhaustive_8_4():
    M = sample_rrd(8, 4, 2)
    rep = check_large_minors(M, eps=0.9, certify=True)
    assert rep.mode == "exact" and rep.details["row_sets"] == 1 + 8 + 28
    # sets of size n-1 reach tau = (1-p)/p = 1 > 0.9, so the event fails deterministically
    A, B = rep.witness["A"], rep.witness["B"]
    dev = edge_deviation(M, A, B)
    assert dev.tau >= 1 and not rep.passed
    assert rep.margin == Fraction(9, 10) * dev.mu_hat - abs(dev.e - dev.mu)


def test_large_minors_worst_case_is_worst():
    rng = make_rng(3)
    M = sample_rrd(9, 3, rng)
    rep = check_large_minors(M, eps=1, C0=Fraction(1, 2))
    t = math.ceil(Fraction(1, 2) * math.log(9) * 3)
    worst = min(
        Fraction(1) * d.mu_hat - abs(d.e - d.mu)
        for A in [set(rng.choice(9, int(rng.integers(t, 10)), replace=False).tolist()) for _ in range(300)]
        for B in [set(rng.choice(9, int(rng.integers(t, 10)), replace=False).tolist()) for _ in range(5)]
        for d in [edge_deviation(M, A, B)]
    )
    assert rep.margin <= worst


def test_large_minors_sampled_pairs_200_40():
    M = sample_rrd(200, 40, 4)
    rep = check_large_minors(M, eps=0.5, rng=4, samples=10**4, search="pairs")
    assert rep.passed and rep.samples_used == 10**4 and rep.mode == "sampled"


def test_large_minors_budget():
    with pytest.raises(BudgetExceeded):
        check_large_minors(sample_rrd(60, 30, 0), eps=0.9, budget=10, certify=True)


def test_thin_minors_and_expansion_60_12():
    rng = make_rng(5)
    for _ in range(5):
        M = sample_rrd(60, 12, rng)
        thin = check_thin_minors(M, 0.5, 0.1, rng=rng)
        exp = check_expansion(M, 0.1, rng=rng, force_exhaustive=2)
        assert thin.passed and exp.passed
        assert exp.mode == "exact"


def test_expansion_trivial_class():
    M = sample_rrd(30, 6, 6)
    rep = check_expansion(M, Fraction(1, 100))
    assert rep.passed


def test_good_d_regular():
    M = sample_rrd(40, 10, 7)
    rep = check_good_d(M, 10)
    assert rep["min_degree"].margin == 0
    assert rep["thin_dense_cap"].passed
    data = json.loads(rep.to_json())
    assert {e["name"] for e in data["events"]} >= {"min_degree", "thin_dense_cap"}
    assert "min_degree" in rep.to_text()


def test_good_d_detects_low_degree():
    M = Matrix01.identity(6)
    rep = check_good_d(M, 2)
    assert not rep["min_degree"].passed and not rep.passed


def test_good_d_pass_rate_100_25():
    rng = make_rng(8)
    ok = sum(check_good_d(sample_rrd(100, 25, rng), 25, rng=rng).passed for _ in range(20))
    assert ok >= 19


def test_config_validation():
    with pytest.raises(ValueError):
        GoodEventConfig(eps=0)
    with pytest.raises(ValueError):
        GoodEventConfig(C2=-1)
    assert GoodEventConfig(delta=0.3).delta == Fraction(3, 10)


def test_sym_group_full_B():
    tab = sym_group_concentration(8, {0, 1, 2}, range(8), 500, 0)
    assert tab.counts == {3: 500} and tab.std == 0


def test_sym_group_bernoulli():
    tab = sym_group_concentration(10, {0}, range(5), 20000, 1)
    assert set(tab.counts) == {0, 1} and abs(tab.mean - 0.5) < 0.02


def test_sym_group_hypergeometric():
    tab = sym_group_concentration(20, range(10), range(10, 20), 10**5, 2)
    assert abs(tab.mean - 5.0) < 0.03 and tab.tv_to_hypergeom < 0.01
    assert tab.tails_within_bound


def test_bad_pairs_all_ones():
    audit = bad_pair_audit(Matrix01.ones(6), {0, 1, 2})
    assert audit.a_eps_complement == 0
    assert all(v == 5 for v in audit.s_sizes.values())


def test_bad_pairs_permutation():
    M = Matrix01.from_permutation([1, 2, 3, 0])
    audit = bad_pair_audit(M, {0, 1}, eps=Fraction(1, 2))
    # B(i) is 0 or 1 while p|B| = 1/2, so |B(i)/(p|B|) - 1| = 1 > eps for every row
    assert audit.a_eps_complement == 4


def test_bad_pairs_80_16():
    rng = make_rng(9)
    for _ in range(10):
        M = sample_rrd(80, 16, rng)
        B = set(rng.choice(80, 40, replace=False).tolist())
        assert bad_pair_audit(M, B).within_bound
