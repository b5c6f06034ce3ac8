"""Acceptance checks, one test per criterion, each printing a pass/fail line."""

import itertools
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from eplr.cbc import cbc_fast, cbc_slow, criterion_B, dual_oracle_prefixes, exhaustive_best, residue_mu_counts
from eplr.extrapolation import extrapolate_chain, richardson_coeffs
from eplr.gfpoly import GFPoly, build_field_table, find_irreducible, tr_m
from eplr.matvec import build_profile, fast_product, naive_product
from eplr.pointset import LatticeRule, character_sum, in_dual
from eplr.quadrature import (
    Integrand,
    convergence_sweep,
    fitted_slope,
    grid_extrapolated,
    grid_quadrature,
    make_integrand,
)
from eplr.walsh import (
    E_alpha_lambda,
    WeightModel,
    bernoulli_b,
    cbc_bound,
    eval_poly,
    existence_bound,
    w_alpha_at,
)


def j2_model(s, alpha):
    return WeightModel(tuple(j**-2.0 for j in range(1, s + 1)), alpha=alpha, base=2, c_alpha=1.0)


# 1 ----------------------------------------------------------------------------


def test_criterion_01_extrapolation_algebra(verdict):
    t0 = time.perf_counter()
    rng = random.Random(1)
    ok = True
    for b in (2, 3, 5):
        for tau in range(1, 7):
            a = richardson_coeffs(b, tau)
            ok &= sum(a) == 1
            for w in range(1, tau):
                ok &= sum(av * Fraction(b) ** (w * nu) for nu, av in enumerate(a)) == 0
            cs = [Fraction(rng.randint(-99, 99), rng.randint(1, 30)) for _ in range(tau)]
            seq = [sum(c * Fraction(1, b) ** (w * n) for w, c in enumerate(cs))
                   for n in range(5, 5 + tau)]
            ok &= extrapolate_chain(seq, b, tau) == cs[0]
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    assert verdict(1, ok, f"exact identities for b in 2,3,5 and tau <= 6; {elapsed:.3f}s (< 1 s)")


# 2 ----------------------------------------------------------------------------


def _dual_completion(rule, k_head, extra):
    """Choose the last frequency so that the whole vector lies in the dual lattice."""
    b, m, p = rule.base, rule.m, rule.modulus
    acc = GFPoly(b)
    for kj, q in zip(k_head, rule.gen):
        acc = acc + tr_m(kj, b, m) * q
    table = build_field_table(p)
    q_last = rule.gen[-1]
    inv = table.exp_of(-table.log_of(q_last))
    r = ((-acc) * inv) % p
    return r.to_int() + extra * b**m


def test_criterion_02_character_property(verdict):
    t0 = time.perf_counter()
    rng = random.Random(2)
    worst, n_dual = 0.0, 0
    for trial in range(200):
        m = rng.randint(1, 6)
        s = rng.randint(1, 3)
        gen = tuple(GFPoly.from_int(rng.randint(1, 2**m - 1), 2) for _ in range(s))
        rule = LatticeRule(2, m, find_irreducible(2, m), gen)
        k = [rng.randint(0, 2 ** (m + 3)) for _ in range(s)]
        if trial % 2:
            k[-1] = _dual_completion(rule, k[:-1], rng.randint(0, 3))
        member = in_dual(rule, k)
        n_dual += member
        worst = max(worst, abs(character_sum(rule, k) - 2**m * member))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10 and n_dual >= 100
    assert verdict(2, ok, f"200 pairs ({n_dual} in the dual), max deviation {worst:.1e}; {elapsed:.2f}s")


# 3 ----------------------------------------------------------------------------


def test_criterion_03_bernoulli_sums(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for tau in range(1, 6):
        coeffs, b_tau = bernoulli_b(tau)
        f = Integrand("b", lambda x, c=coeffs: eval_poly(c, x[:, 0]), dimension=1)
        for N in (2, 3, 8):
            worst = max(worst, abs(grid_quadrature(f, N, 1) - float(b_tau) / N**tau))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and elapsed < 1
    assert verdict(3, ok, f"max deviation {worst:.1e} (<= 1e-12); {elapsed:.3f}s")


# 4 ----------------------------------------------------------------------------


def test_criterion_04_euler_maclaurin_order(verdict):
    t0 = time.perf_counter()
    f = make_integrand("exp")
    exact = f.exact_integral
    ns = list(range(6, 13))
    slopes = {}
    for alpha in (2, 3):
        errs = [abs(grid_extrapolated(f, 2, n, alpha) - exact) for n in ns]
        slopes[alpha] = fitted_slope(ns, [math.log2(e) for e in errs])
    elapsed = time.perf_counter() - t0
    ok = all(abs(slopes[a] + a) <= 0.3 for a in (2, 3)) and elapsed < 5
    detail = (f"slopes alpha=2: {slopes[2]:.3f} (target -2 +- 0.3), "
              f"alpha=3: {slopes[3]:.3f} (target -3 +- 0.3); {elapsed:.2f}s")
    assert verdict(4, ok, detail)


# 5 ----------------------------------------------------------------------------


def test_criterion_05_cbc_bound(verdict):
    t0 = time.perf_counter()
    checks, worst_ratio = 0, 0.0
    for alpha, m, s in itertools.product((2, 3), (6, 8, 10, 12), (5, 10)):
        model = j2_model(s, alpha)
        rep = cbc_fast(2, m, s, model)
        values, tails = dual_oracle_prefixes(rep.rule, model, 60)
        lams = (1.0, 0.75) + ((0.4,) if alpha == 3 else ())
        for d in range(s):
            for lam in lams:
                bound = cbc_bound(model, d + 1, m, lam)
                worst_ratio = max(worst_ratio, (values[d] + tails[d]) / bound)
                checks += 1
    elapsed = time.perf_counter() - t0
    ok = worst_ratio <= 1.0
    assert verdict(5, ok, f"{checks} prefix/lambda checks, max (B + tail)/bound = "
                          f"{worst_ratio:.3f}; {elapsed:.1f}s")


# 6 ----------------------------------------------------------------------------


def test_criterion_06_fast_slow_equivalence(verdict):
    t0 = time.perf_counter()
    mismatches, ties, worst_value = [], 0, 0.0
    for alpha, m, s in itertools.product((2, 3), range(3, 9), range(2, 6)):
        model = j2_model(s, alpha)
        fast, slow = cbc_fast(2, m, s, model), cbc_slow(2, m, s, model)
        worst_value = max(worst_value, float(np.max(np.abs(
            np.array(fast.per_dimension) - slow.per_dimension))))
        separated = min(fast.separation[1:]) > 1e-9
        ties += not separated
        if fast.exponents != slow.exponents:
            mismatches.append((alpha, m, s, separated))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and worst_value <= 1e-9 and elapsed < 120
    assert verdict(6, ok, f"96 instances, {len(mismatches)} mismatches, {ties} with near-ties, "
                          f"max value gap {worst_value:.1e}; {elapsed:.1f}s")


# 7 ----------------------------------------------------------------------------


def test_criterion_07_existence_bound(verdict):
    t0 = time.perf_counter()
    model = WeightModel((1.0, 0.25), alpha=2, base=2, c_alpha=1.0)
    ex = exhaustive_best(2, 4, 2, model)
    best_B = criterion_B(ex.rule, model)
    bound = existence_bound(model, 2, 4, 1.0)
    cbc = cbc_fast(2, 4, 2, model)
    ratio = cbc.criterion / ex.criterion
    elapsed = time.perf_counter() - t0
    ok = best_B <= bound and ratio <= 2.0 and elapsed < 60
    assert verdict(7, ok, f"min B = {best_B:.4e} <= bound {bound:.4e}; "
                          f"CBC/optimum on Btilde = {ratio:.3f}; {elapsed:.2f}s")


# 8 ----------------------------------------------------------------------------


def _trend_slopes(result):
    """Slopes over sliding sub-windows (half width) inside the fitting window."""
    x, y = result.log_points()
    n = len(x)
    x, y = x[n // 2:], y[n // 2:]
    width = (len(x) + 1) // 2
    return [fitted_slope(x[i:i + width], y[i:i + width]) for i in range(len(x) - width + 1)]


def test_criterion_08_convergence(verdict):
    t0 = time.perf_counter()
    biv = make_integrand("bivariate")
    a = convergence_sweep(biv, 2, 2, range(2, 17), WeightModel((1.0, 1.0), alpha=2, c_alpha=1.0))
    b = convergence_sweep(biv, 2, 3, range(3, 17), WeightModel((1.0, 1.0), alpha=3, c_alpha=1.0))
    trend = _trend_slopes(b)
    monotone = all(u >= v for u, v in zip(trend, trend[1:]))
    model100 = j2_model(100, 2)
    cache = {}
    c = {}
    for name, kw in (("f1", {"c1": 1.3}), ("f2 c2=1", {"c2": 1}), ("f2 c2=2", {"c2": 2})):
        f = make_integrand(name.split()[0], s=100, **kw)
        c[name] = convergence_sweep(f, 2, 2, range(2, 17), model100, rule_cache=cache).rate
    elapsed = time.perf_counter() - t0
    ok = a.rate <= -1.8 and b.rate <= -2.2 and monotone and all(v <= -1.8 for v in c.values())
    detail = (f"(a) {a.rate:.2f}; (b) {b.rate:.2f}, trend {[round(t, 2) for t in trend]}; "
              f"(c) " + ", ".join(f"{k} {v:.2f}" for k, v in c.items()) + f"; {elapsed:.0f}s")
    assert verdict(8, ok, detail)


# 9 ----------------------------------------------------------------------------


def _best_time(fn, repeat=9):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def test_criterion_09_fast_matvec(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    worst = 0.0
    for m, s, t in itertools.product(range(1, 11), (1, 7, 20), (1, 8)):
        table = build_field_table(find_irreducible(2, m))
        gen = tuple(table.exp_of(int(z)) for z in rng.integers(0, table.order, size=s))
        rule = LatticeRule(2, m, table.modulus, gen)
        A = rng.standard_normal((s, t))
        diff = fast_product(build_profile(rule, table), A) - naive_product(rule, A, table)
        worst = max(worst, float(np.max(np.abs(diff))))
    times = {}
    for m in range(8, 15):
        table = build_field_table(find_irreducible(2, m))
        gen = tuple(table.exp_of(int(z)) for z in rng.integers(0, table.order, size=20))
        prof = build_profile(LatticeRule(2, m, table.modulus, gen), table)
        A = rng.standard_normal((20, 8))
        times[m] = _best_time(lambda: fast_product(prof, A))
    ratio = times[14] / times[13]
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and ratio <= 2.7 and elapsed < 120
    assert verdict(9, ok, f"max |fast - naive| = {worst:.1e}; time(2^14)/time(2^13) = "
                          f"{ratio:.2f} (<= 2.7); {elapsed:.1f}s")


# 10 ---------------------------------------------------------------------------


def test_criterion_10_kernel_consistency(verdict):
    t0 = time.perf_counter()
    ok = True
    worst_origin, details = 0.0, []
    for b, alpha in itertools.product((2, 3), (2, 3)):
        E = E_alpha_lambda(alpha, 1.0, b)
        worst_origin = max(worst_origin, abs(w_alpha_at(0, 6, alpha, b) - E))
        for lam in (1.0, 0.75):
            El = E_alpha_lambda(alpha, lam, b)
            T = 90 if b == 2 else 60
            counts = residue_mu_counts(alpha, b, 0, T)[0]
            partial = float(np.sum(counts * float(b) ** (-lam * np.arange(T + 1))))
            # each mu level holds at most alpha (b-1)^alpha (t+1)^(alpha-1) b^(t/alpha) frequencies
            tail = sum(alpha * (b - 1) ** alpha * (t + 1) ** (alpha - 1)
                       * b ** (t / alpha - lam * t) for t in range(T + 1, T + 4000))
            ok &= partial <= El + 1e-12 and El - partial <= tail + 1e-12
    elapsed = time.perf_counter() - t0
    ok &= worst_origin <= 1e-10 and elapsed < 30
    assert verdict(10, ok, f"|w(0) - E| <= {worst_origin:.1e}; series within tail bounds; "
                           f"{elapsed:.2f}s")
