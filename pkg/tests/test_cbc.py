import itertools
import math

import numpy as np
import pytest

from eplr.cbc import (
    cbc_fast,
    cbc_slow,
    circular_convolve,
    circular_convolve_direct,
    criterion_B,
    criterion_dual_oracle,
    criterion_pointwise,
    dual_oracle_prefixes,
    exhaustive_best,
    grid_term,
    grid_term_general,
    product_subset_weights,
    residue_mu_counts,
)
from eplr.errors import ResourceError, UsageError
from eplr.gfpoly import GFPoly, build_field_table, find_irreducible, v_m
from eplr.pointset import LatticeRule, in_dual
from eplr.walsh import WeightModel, cbc_bound, enumerate_mu_bounded, w_alpha_at


def model_j2(s, alpha=2, b=2, c=1.0):
    return WeightModel(tuple(j**-2.0 for j in range(1, s + 1)), alpha=alpha, base=b, c_alpha=c)


# --- circular convolution -----------------------------------------------------


@pytest.mark.parametrize("L", [1, 2, 3, 7, 31, 255, 1000, 4093])
def test_convolution_matches_direct(L):
    rng = np.random.default_rng(L)
    c, v = rng.standard_normal(L), rng.standard_normal(L)
    fast = circular_convolve(c, v)
    direct = circular_convolve_direct(c, v)
    assert np.max(np.abs(fast - direct)) <= 1e-10 * max(1.0, np.max(np.abs(direct)))


def test_convolution_impulse_and_scalar():
    c = np.arange(1.0, 8.0)
    e0 = np.zeros(7)
    e0[0] = 1.0
    assert np.allclose(circular_convolve(c, e0), c)
    assert circular_convolve([3.0], [2.0]).tolist() == [6.0]


def test_convolution_columns():
    rng = np.random.default_rng(0)
    c, V = rng.standard_normal(15), rng.standard_normal((15, 4))
    out = circular_convolve(c, V)
    for l in range(4):
        assert np.allclose(out[:, l], circular_convolve_direct(c, V[:, l]), atol=1e-12)


def test_convolution_shape_mismatch():
    with pytest.raises(UsageError):
        circular_convolve([1.0, 2.0], [1.0])


# --- criteria -----------------------------------------------------------------


def test_zero_weights_give_zero():
    rule = LatticeRule(2, 4, find_irreducible(2, 4), (GFPoly.one(2), GFPoly.from_int(7, 2)))
    model = WeightModel((0.0, 0.0), c_alpha=1.0)
    assert criterion_pointwise(rule, model) == 0.0
    assert criterion_dual_oracle(rule, model, 20)[0] == 0.0


@pytest.mark.parametrize("alpha", [2, 3])
@pytest.mark.parametrize("m", [2, 4])
def test_one_dimensional_rule_has_zero_B(alpha, m):
    rule = LatticeRule(2, m, find_irreducible(2, m), (GFPoly.one(2),))
    model = WeightModel((0.7,), alpha=alpha, c_alpha=1.0)
    bt = criterion_pointwise(rule, model)
    assert bt == pytest.approx(grid_term(model, 1, m), abs=1e-14)
    assert criterion_B(rule, model) == pytest.approx(0.0, abs=1e-14)
    value, _ = criterion_dual_oracle(rule, model, 40)
    assert value == pytest.approx(0.0, abs=1e-15)


def test_one_dimensional_pointwise_uses_kernel_series():
    m = 4
    rule = LatticeRule(2, m, find_irreducible(2, m), (GFPoly.one(2),))
    model = WeightModel((0.5,), alpha=2, c_alpha=1.0)
    series = sum(w_alpha_at(a, m, 2, 2) for a in range(2**m)) / 2**m
    assert criterion_pointwise(rule, model) == pytest.approx(0.5 * series, abs=1e-12)


def _brute_dual_B(rule, model, T):
    """Explicit sum over frequency vectors with total mu <= T."""
    b, m = rule.base, rule.m
    ks = [(0, 0)] + list(enumerate_mu_bounded(model.alpha, b, T))
    gamma = model.weights(rule.s)
    total = 0.0
    for combo in itertools.product(ks, repeat=rule.s):
        mu = sum(c[1] for c in combo)
        k = [c[0] for c in combo]
        if mu > T or all(kj % b**m == 0 for kj in k):
            continue
        if in_dual(rule, k):
            w = math.prod(gamma[j] * model.c_alpha for j in range(rule.s) if k[j])
            total += w * b ** (-mu)
    return total


@pytest.mark.parametrize("alpha,T", [(2, 9), (3, 10)])
def test_dual_oracle_matches_explicit_enumeration(alpha, T):
    rule = LatticeRule(2, 2, find_irreducible(2, 2), (GFPoly.one(2), GFPoly.from_int(2, 2)))
    model = WeightModel((1.0, 0.5), alpha=alpha, c_alpha=1.0)
    value, _ = criterion_dual_oracle(rule, model, T)
    assert value == pytest.approx(_brute_dual_B(rule, model, T), rel=1e-12, abs=1e-15)


def test_residue_counts_match_enumeration():
    for alpha, b, m, T in [(2, 2, 3, 12), (3, 2, 2, 12), (2, 3, 2, 8)]:
        counts = residue_mu_counts(alpha, b, m, T)
        brute = np.zeros_like(counts)
        for k, mu in enumerate_mu_bounded(alpha, b, T):
            brute[k % b**m, mu] += 1
        assert np.array_equal(counts, brute)
    with pytest.raises(ResourceError):
        residue_mu_counts(2, 2, 3, 200, budget=100)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("alpha", [2, 3])
def test_B_identity_with_dual_oracle(seed, alpha):
    rng = np.random.default_rng(seed)
    b, m = 2, 3
    gen = tuple(GFPoly.from_int(int(v), b) for v in rng.integers(1, 8, size=2))
    rule = LatticeRule(b, m, find_irreducible(b, m), gen)
    model = WeightModel((1.0, 0.6), alpha=alpha, c_alpha=1.0)
    value, tail = criterion_dual_oracle(rule, model, 50)
    B = criterion_B(rule, model)
    assert value <= B + 1e-12
    assert B - value <= tail + 1e-12
    assert criterion_pointwise(rule, model) >= value - 1e-12


def test_pointwise_error_bound_reported():
    rule = LatticeRule(2, 3, find_irreducible(2, 3), (GFPoly.one(2), GFPoly.from_int(3, 2)))
    model = model_j2(2)
    value, err = criterion_pointwise(rule, model, tol=1e-12, with_error=True)
    assert value == criterion_pointwise(rule, model)
    assert 0 < err < 1e-10


# --- constructions ------------------------------------------------------------


def test_fast_slow_agree_small_grid():
    for alpha, m, s in itertools.product([2, 3], [3, 5, 7], [2, 4]):
        model = model_j2(s, alpha)
        f, sl = cbc_fast(2, m, s, model), cbc_slow(2, m, s, model)
        if min(f.separation[1:]) > 1e-9:
            assert f.exponents == sl.exponents
        assert np.allclose(f.per_dimension, sl.per_dimension, atol=1e-9)


def test_report_structure():
    model = model_j2(4)
    rep = cbc_fast(2, 6, 4, model)
    assert rep.exponents[0] == 0 and rep.rule.gen[0] == GFPoly.one(2)
    assert len(rep.per_dimension) == 4 and rep.criterion == rep.per_dimension[-1]
    assert rep.bound == cbc_bound(model, 4, 6, 1.0)
    assert rep.criterion == pytest.approx(criterion_pointwise(rep.rule, model), abs=1e-13)
    assert rep.wall_time >= 0
    rep.rule.validate()


def test_base3_construction():
    model = model_j2(3, b=3)
    f, sl = cbc_fast(3, 3, 3, model), cbc_slow(3, 3, 3, model)
    assert f.exponents == sl.exponents
    assert f.criterion == pytest.approx(criterion_pointwise(f.rule, model), abs=1e-13)


def test_m1_base2_is_trivial():
    rep = cbc_fast(2, 1, 3, model_j2(3))
    assert all(q == GFPoly.one(2) for q in rep.rule.gen)


@pytest.mark.parametrize("alpha", [2, 3])
def test_prefix_bounds(alpha):
    model = model_j2(6, alpha)
    for m in (4, 7):
        rep = cbc_fast(2, m, 6, model)
        values, tails = dual_oracle_prefixes(rep.rule, model, 60)
        lams = [1.0, 0.75, 0.6] + ([0.4] if alpha == 3 else [])
        for d in range(6):
            for lam in lams:
                assert values[d] + tails[d] <= cbc_bound(model, d + 1, m, lam)


def test_circulant_identity():
    b, m = 2, 6
    p = find_irreducible(b, m)
    table = build_field_table(p)
    L = b**m - 1
    rng = np.random.default_rng(3)
    P = rng.uniform(0.5, 2.0, L)
    w = {z: w_alpha_at(int(round(v_m(table.exp_of(z), p, m) * b**m)), m, 2, b) for z in range(L)}
    c = np.array([w[t] for t in range(L)])
    eta = circular_convolve(c, P[(-np.arange(L)) % L])
    for z in range(0, L, 5):
        direct = sum(P[e] * w[(z + e) % L] for e in range(L))
        assert eta[z] == pytest.approx(direct, abs=1e-9)


def test_general_weights_rejected():
    with pytest.raises(UsageError):
        cbc_fast(2, 4, 2, {frozenset({1}): 1.0})
    with pytest.raises(UsageError):
        cbc_slow(2, 4, 2, {frozenset({1}): 1.0})


def test_exhaustive_one_dimensional_all_equal():
    model = WeightModel((1.0,), c_alpha=1.0)
    rep = exhaustive_best(2, 4, 1, model)
    assert rep.exponents == (1,)
    fast = cbc_fast(2, 4, 1, model)
    assert rep.criterion == pytest.approx(fast.criterion, abs=1e-14)


def test_exhaustive_beats_cbc():
    model = WeightModel((1.0, 0.25, 0.11), c_alpha=1.0)
    ex = exhaustive_best(2, 3, 3, model)
    cb = cbc_fast(2, 3, 3, model)
    assert ex.criterion <= cb.criterion + 1e-12


def test_exhaustive_general_weights():
    model = WeightModel((1.0, 0.25), c_alpha=1.0)
    table = product_subset_weights(model.gamma)
    same = exhaustive_best(2, 4, 2, model, table)
    assert same.criterion == pytest.approx(exhaustive_best(2, 4, 2, model).criterion, abs=1e-14)
    general = {frozenset({1}): 1.0, frozenset({2}): 1.0, frozenset({1, 2}): 0.01}
    rep = exhaustive_best(2, 4, 2, model, general)
    assert grid_term_general(model, 4, general) <= rep.criterion


def test_exhaustive_budget():
    with pytest.raises(ResourceError):
        exhaustive_best(2, 8, 3, model_j2(3))
