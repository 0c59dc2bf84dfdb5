from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rrdlab.coupling import (
    PlanError,
    ShufflePlan,
    apply_plan,
    cross_set,
    determinant_walk,
    enumerate_plans,
    expected_cross_size,
    locate_patches,
    make_restricted_plan,
    make_shuffle_plan,
    pushforward_law,
    total_variation,
    walk_decomposition,
)
from rrdlab.exact_rank import corank_exact
from rrdlab.matrix_core import Matrix01, co_ex_sets, set_neighborhood
from rrdlab.rng import make_rng
from rrdlab.sampler import enumerate_all, sample_rrd


def rand_rational(rng, n):
    return [Fraction(int(a), int(b)) for a, b in zip(rng.integers(-9, 10, n), rng.integers(1, 6, n))]


def recompute(M, i, u):
    return sum((u[j] for j in M.neighborhood(i)), Fraction(0))


def test_plan_all_ones_is_noop():
    M = Matrix01.ones(5)
    plan = make_shuffle_plan(M, 0, 1, 0)
    assert plan.s == 0 and apply_plan(M, plan) == M


def test_plan_identity_singletons():
    plan = make_shuffle_plan(Matrix01.identity(4), 0, 1, 0)
    assert plan.S1 == (0,) and plan.S2 == (1,) and plan.pi == {0: 1}


def test_restricted_frozen_forces_zero():
    M = sample_rrd(10, 4, 1)
    _, e12, e21 = co_ex_sets(M, 2, 5)
    plan = make_restricted_plan(M, 2, 5, e12 | e21, None, 0)
    assert plan.s == 0
    with pytest.raises(PlanError):
        make_restricted_plan(M, 2, 5, e12 | e21, 1, 0)


@given(st.integers(0, 2**32))
def test_plan_invariants(seed):
    rng = make_rng(seed)
    M = sample_rrd(12, 5, rng)
    i1, i2 = (int(v) for v in rng.choice(12, 2, replace=False))
    frozen = {int(v) for v in rng.choice(12, 3, replace=False)}
    plan = make_restricted_plan(M, i1, i2, frozen, None, rng)
    assert not (set(plan.S1) | set(plan.S2)) & frozen
    assert not set(plan.S1) & set(plan.S2)
    assert sorted(plan.pi.values()) == list(plan.S2) and set(plan.xi) == set(plan.S1)
    out = apply_plan(M, plan)
    assert out.regularity(5).holds
    assert co_ex_sets(out, i1, i2)[0] == co_ex_sets(M, i1, i2)[0]
    assert set_neighborhood(out, {i1, i2}) == set_neighborhood(M, {i1, i2})
    others = [i for i in range(12) if i not in (i1, i2)]
    assert (out.to_dense()[others] == M.to_dense()[others]).all()
    assert ShufflePlan.from_json(plan.to_json()) == plan


def test_plan_validation():
    with pytest.raises(PlanError):
        ShufflePlan(i1=0, i2=0, frozen=frozenset(), S1=(), S2=(), pi={}, xi={})
    with pytest.raises(PlanError):
        ShufflePlan(i1=0, i2=1, frozen=frozenset(), S1=(2,), S2=(2,), pi={2: 2}, xi={2: 1})


def test_apply_plan_signs():
    M = sample_rrd(9, 4, 3)
    plan = make_shuffle_plan(M, 0, 1, 3)
    plus = ShufflePlan(**{**plan.__dict__, "xi": {j: 1 for j in plan.S1}})
    assert apply_plan(M, plus) == M
    minus = ShufflePlan(**{**plan.__dict__, "xi": {j: -1 for j in plan.S1}})
    co, e12, e21 = co_ex_sets(M, 0, 1)
    out = apply_plan(M, minus)
    assert out.neighborhood(0) == co | e21 and out.neighborhood(1) == co | e12


@pytest.mark.parametrize("n,d", [(3, 1), (4, 2), (5, 2)])
def test_full_plan_law_exact(n, d):
    support = enumerate_all(n, d)
    assert total_variation(pushforward_law(support, 0, 1), support) == 0


def test_restricted_plan_law_exact_4_2():
    support = enumerate_all(4, 2)
    for mask in range(16):
        frozen = {j for j in range(4) if mask >> j & 1}
        for s in range(3):
            assert total_variation(pushforward_law(support, 0, 1, frozen, s), support) == 0


def test_total_variation_detects_bias():
    support = enumerate_all(3, 1)
    law = {support[0].key(): Fraction(1)}
    assert total_variation(law, support) == Fraction(5, 6)


def test_plan_weights_sum_to_one():
    M = sample_rrd(7, 3, 4)
    assert sum(w for _, w in enumerate_plans(M, 0, 1)) == 1
    assert sum(w for _, w in enumerate_plans(M, 0, 1, {0}, 1)) == 1


def test_walk_all_ones():
    M = sample_rrd(8, 3, 5)
    wd = walk_decomposition(M, make_shuffle_plan(M, 0, 1, 5), [1] * 8)
    assert wd.steps_set == frozenset() and wd.W_u == 0 and wd.rows() == (3, 3)


def test_walk_off_support():
    M = Matrix01.from_row_sets(6, [{0, 1}, {1, 2}, {3, 4}, {4, 5}, {0, 5}, {2, 3}])
    u = [0, 0, 0, 5, 7, 2]
    wd = walk_decomposition(M, make_shuffle_plan(M, 0, 1, 0), u)
    assert wd.A_u == 0 and wd.W_u == 0


@given(st.integers(0, 2**32), st.booleans())
def test_walk_reconstruction(seed, restricted):
    rng = make_rng(seed)
    n = int(rng.integers(3, 13))
    d = int(rng.integers(1, n))
    M = sample_rrd(n, d, rng)
    i1, i2 = (int(v) for v in rng.choice(n, 2, replace=False))
    frozen = {int(v) for v in rng.choice(n, 2, replace=False)} if restricted else set()
    plan = make_restricted_plan(M, i1, i2, frozen, None, rng)
    u = rand_rational(rng, n)
    wd = walk_decomposition(M, plan, u)
    out = apply_plan(M, plan)
    assert wd.rows() == (recompute(out, i1, u), recompute(out, i2, u))
    assert wd.steps_set | wd.flats_set == frozenset(plan.S1)


def test_steps_antisymmetric():
    rng = make_rng(6)
    M = sample_rrd(10, 4, rng)
    plan = make_shuffle_plan(M, 0, 1, rng)
    u = rand_rational(rng, 10)
    swapped = list(u)
    for j, k in plan.pi.items():
        swapped[j], swapped[k] = u[k], u[j]
    a = walk_decomposition(M, plan, u).steps
    b = walk_decomposition(M, plan, swapped).steps
    assert all(a[j] == -b[j] for j in plan.S1)


def test_determinant_trivial_cases():
    rng = make_rng(7)
    M = sample_rrd(8, 3, rng)
    plan = make_shuffle_plan(M, 0, 1, rng)
    u = rand_rational(rng, 8)
    dw = determinant_walk(M, plan, u, u)
    assert all(x == 0 for x in dw.v) and dw.D_after == 0
    plus = ShufflePlan(**{**plan.__dict__, "xi": {j: 1 for j in plan.S1}})
    v = rand_rational(rng, 8)
    dw = determinant_walk(M, plus, u, v)
    assert dw.D_after == dw.D_before


def test_determinant_on_kernel_of_minor():
    rng = make_rng(8)
    hits = 0
    for _ in range(30):
        M = sample_rrd(8, 3, rng)
        plan = make_shuffle_plan(M, 0, 1, rng)
        basis = corank_exact(M.to_dense()[2:]).kernel_basis
        if len(basis) != 2:
            continue
        dw = determinant_walk(M, plan, basis[0], basis[1])
        assert dw.kernel_ok and dw.D_after == dw.W_v
        hits += 1
    assert hits > 0


@given(st.integers(0, 2**32))
def test_determinant_identity(seed):
    rng = make_rng(seed)
    n = int(rng.integers(3, 13))
    d = int(rng.integers(1, n))
    M = sample_rrd(n, d, rng)
    plan = make_shuffle_plan(M, 0, n - 1, rng)
    dw = determinant_walk(M, plan, rand_rational(rng, n), rand_rational(rng, n))
    assert dw.D_after == dw.W_v


def test_cross_set_edges():
    M = sample_rrd(10, 4, 9)
    plan = make_shuffle_plan(M, 0, 1, 9)
    assert cross_set(M, plan, 0) == frozenset() == cross_set(M, plan, 10)
    with pytest.raises(ValueError):
        cross_set(M, plan, 11)


def test_cross_set_mean():
    rng = make_rng(10)
    M = sample_rrd(30, 10, rng)
    k = 15
    sizes = np.array([len(cross_set(M, make_shuffle_plan(M, 0, 1, rng), k)) for _ in range(10000)])
    mu = float(expected_cross_size(M, 0, 1, k))
    assert abs(sizes.mean() - mu) <= 3 * sizes.std() / 100 + 1e-12


def test_expected_cross_size_formula():
    M = sample_rrd(20, 6, 11)
    _, e12, e21 = co_ex_sets(M, 0, 1)
    k = 8
    want = Fraction(sum(j < k for j in e12) * sum(j >= k for j in e21), len(e21)) if e21 else 0
    assert expected_cross_size(M, 0, 1, k) == want


def test_patches_all_ones_fail():
    res = locate_patches(Matrix01.ones(10), list(range(7, 10)), 3)
    assert not res.success and res.m == 0


def test_patches_sampled_properties():
    rng = make_rng(12)
    for _ in range(10):
        M = sample_rrd(60, 12, rng)
        sigma = list(rng.permutation(range(54, 60)))
        res = locate_patches(M, sigma, 6)
        assert all(res.verify(6).values())
        if res.patches:
            j = res.j_seq[0]
            assert j == min(res.j_seq)


def test_patches_validation():
    M = sample_rrd(10, 3, 0)
    with pytest.raises(ValueError):
        locate_patches(M, [0, 1], 2)
    with pytest.raises(ValueError):
        locate_patches(M, list(range(4, 10)), 6)
