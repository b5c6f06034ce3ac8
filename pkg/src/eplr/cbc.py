"""Component-by-component construction of polynomial lattice rules.

The quality measure minimised here is

    Btilde(p, q) = -1 + b^-m sum_n prod_j [1 + gamma_j C w_alpha(v_m(n q_j / p))],

which differs from the dual-lattice criterion B(p, q) by a term that does not
depend on q (the contribution of frequencies with every component divisible by
b^m).  ``criterion_B`` removes that term in closed form, and
``criterion_dual_oracle`` recomputes B by enumerating the dual lattice, which
is only feasible for small rules.

Candidates for each component are the powers g^z, z = 1..b^m - 1, of the
primitive element of smallest encoding.  Both the slow (direct summation) and
the fast (circulant convolution) constructions select the smallest z whose
criterion lies within ``TIE_TOL`` of the minimum, so they agree on the chosen
vector whenever the minimiser is separated from the other candidates.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError, UsageError
from .gfpoly import (
    FieldTable,
    GFPoly,
    build_field_table,
    find_irreducible,
    int_to_digits,
    digits_to_int,
    mul_mod_encoded,
    scaled_laurent_values,
)
from .pointset import LatticeRule, generate_points
from .walsh import (
    E_alpha_lambda,
    WeightModel,
    cbc_bound,
    enumerate_mu_bounded,
    grid_walsh_mass,
    w_alpha_grid,
)

TIE_TOL = 1e-12
EXHAUSTIVE_BUDGET = 10**6


@dataclass
class CriterionReport:
    rule: LatticeRule
    criterion: float
    per_dimension: list[float]
    bound: float
    wall_time: float
    exponents: tuple[int, ...] = ()
    generator: GFPoly | None = None
    separation: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.per_dimension) != self.rule.s:
            raise ValueError("per_dimension must have one entry per coordinate")


# --- criteria -----------------------------------------------------------------


def _w_columns(rule: LatticeRule, alpha: int) -> np.ndarray:
    pts = generate_points(rule)
    return w_alpha_grid(rule.m, alpha, rule.base)[pts.numerators]


def criterion_error_bound(model: WeightModel, s: int, tol: float) -> float:
    """Effect on Btilde of perturbing every w_alpha value by at most tol."""
    E = E_alpha_lambda(model.alpha, 1.0, model.base)
    ca = model.c_alpha
    g = model.weights(s)
    return math.prod(1 + gj * ca * (E + tol) for gj in g) - math.prod(1 + gj * ca * E for gj in g)


def criterion_pointwise(
    rule: LatticeRule, model: WeightModel, tol: float = 1e-12, with_error: bool = False
):
    """Btilde evaluated as a point sum.

    With ``with_error`` the propagated bound for kernel values accurate to tol
    is returned alongside the value.
    """
    _check_model(rule, model)
    w = _w_columns(rule, model.alpha)
    gamma = np.asarray(model.weights(rule.s))
    prod = np.prod(1.0 + gamma * model.c_alpha * w, axis=1)
    value = -1.0 + math.fsum(prod) / rule.n_points
    if with_error:
        return value, criterion_error_bound(model, rule.s, tol)
    return value


def grid_term(model: WeightModel, s: int, m: int) -> float:
    """The q-independent part of Btilde: frequencies with all b^m | k_j."""
    z = grid_walsh_mass(model.alpha, model.base, m)
    return math.prod(1 + g * model.c_alpha * z for g in model.weights(s)) - 1


def criterion_B(rule: LatticeRule, model: WeightModel) -> float:
    """Dual-lattice criterion B(p, q), via B = Btilde - grid term."""
    return criterion_pointwise(rule, model) - grid_term(model, rule.s, rule.m)


def _check_model(rule: LatticeRule, model: WeightModel) -> None:
    if model.base != rule.base:
        raise UsageError(f"model base {model.base} differs from rule base {rule.base}")
    model.weights(rule.s)


def residue_mu_counts(alpha: int, b: int, m: int, T: int, budget: int = 2_000_000) -> np.ndarray:
    """counts[r, t] = number of k >= 1 with k mod b^m = r and mu_alpha(k) = t <= T.

    Frequencies are enumerated by their alpha leading digits; below the
    alpha-th leading digit the digits are free, and such a block is counted
    residue by residue (uniformly when it is at least b^m long).
    """
    n_res = b**m
    counts = np.zeros((n_res, T + 1))
    calls = 0

    def rec(top: int, last: int, v: int, mu: int) -> None:
        nonlocal calls
        calls += 1
        if calls > budget:
            raise ResourceError(f"more than {budget} leading-digit patterns with mu <= {T}")
        if v == alpha:
            free = last - 1
            if free >= m:
                counts[:, mu] += float(b) ** (free - m)
            else:
                r = (top % n_res + np.arange(b**free)) % n_res
                counts[:, mu] += np.bincount(r, minlength=n_res)
            return
        if v > 0:
            counts[top % n_res, mu] += 1
        for a in range(min(last - 1, T - mu), 0, -1):
            for kappa in range(1, b):
                rec(top + kappa * b ** (a - 1), a, v + 1, mu + a)

    rec(0, T + 1, 0, 0)
    return counts


def _residue_characters(values: np.ndarray, b: int, m: int) -> np.ndarray:
    """Fourier transform over the additive group F_b^m along axis 0."""
    shape = (b,) * m + values.shape[1:]
    out = np.fft.fftn(values.reshape(shape), axes=tuple(range(m)))
    return out.reshape(values.shape)


def _mu_convolve(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Truncated product of polynomials in the last axis (degree <= T)."""
    T1 = x.shape[-1]
    out = np.zeros(np.broadcast_shapes(x.shape, y.shape), dtype=np.result_type(x, y))
    for t in range(T1):
        out[..., t:] += x[..., t : t + 1] * y[..., : T1 - t]
    return out


def dual_oracle_prefixes(
    rule: LatticeRule, model: WeightModel, T: int, budget: int = 2_000_000
) -> tuple[list[float], list[float]]:
    """Truncated dual-lattice B for every prefix dimension, with tail bounds.

    Sums gamma_u C^|u| b^-mu(k_u) over k_u in the dual lattice with some
    component not divisible by b^m and mu(k_u) <= T.  The dual condition is
    imposed through the characters of the residue group, coordinate by
    coordinate.
    """
    _check_model(rule, model)
    b, m, ca = rule.base, rule.m, model.c_alpha
    n_res = b**m
    counts = residue_mu_counts(model.alpha, b, m, T, budget)
    decay = float(b) ** -np.arange(T + 1)
    base_w = counts * decay  # b^-mu weight per residue of k mod b^m
    ident = np.zeros(T + 1)
    ident[0] = 1.0
    zero_part = base_w[0]  # frequencies divisible by b^m
    # S0: vectors with every component divisible by b^m (residue 0 throughout)
    # S1hat: the others, kept in the character domain
    S0 = ident.copy()
    S1hat = np.zeros((n_res, T + 1), dtype=complex)
    mass = ident.copy()
    per_mass = base_w.sum(axis=0)
    E = E_alpha_lambda(model.alpha, 1.0, b)
    residues = np.arange(n_res, dtype=np.int64)
    values, tails = [], []
    full = 1.0
    for q, g in zip(rule.gen, model.weights(rule.s)):
        A1 = np.zeros((n_res, T + 1))
        A1[mul_mod_encoded(residues[1:], q, rule.modulus)] = g * ca * base_w[1:]
        A1hat = _residue_characters(A1, b, m)
        A0 = ident + g * ca * zero_part
        S1hat = _mu_convolve(S1hat, A0 + A1hat) + _mu_convolve(S0, A1hat)
        S0 = _mu_convolve(S0, A0)
        mass = _mu_convolve(mass, ident + g * ca * per_mass)
        full *= 1 + g * ca * E
        values.append(float(S1hat.sum().real) / n_res)
        tails.append(max(full - float(mass.sum()), 0.0) + 1e-14 * full)
    return values, tails


def criterion_dual_oracle(
    rule: LatticeRule, model: WeightModel, T: int, budget: int = 2_000_000
) -> tuple[float, float]:
    """B(p, q) summed over dual frequencies with mu_alpha(k_u) <= T.

    Returns (value, tail_bound) where tail_bound bounds the contribution of
    all omitted frequencies.
    """
    values, tails = dual_oracle_prefixes(rule, model, T, budget)
    return values[-1], tails[-1]


# --- circulant products -------------------------------------------------------


def circular_convolve_direct(first_column: np.ndarray, v: np.ndarray) -> np.ndarray:
    """out[z] = sum_n c[(z - n) mod L] v[n] by the O(L^2) definition."""
    c = np.asarray(first_column, dtype=float)
    v = np.asarray(v, dtype=float)
    L = len(c)
    idx = (np.arange(L)[:, None] - np.arange(L)[None, :]) % L
    return c[idx] @ v


def circular_convolve(first_column: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Circular convolution of length L = len(first_column) in O(L log L).

    L is arbitrary (b^m - 1 is rarely a power of two): the linear convolution
    is computed with a zero-padded power-of-two real FFT and then folded.
    ``v`` may carry extra trailing axes (one convolution per column).
    """
    c = np.asarray(first_column, dtype=float)
    v = np.asarray(v, dtype=float)
    L = len(c)
    if L < 1 or v.shape[0] != L:
        raise UsageError("operands must share a positive length")
    if L == 1:
        return c[0] * v
    nfft = convolution_length(L)
    return convolve_with_spectrum(np.fft.rfft(c, nfft), L, v)


def convolution_length(L: int) -> int:
    """Power-of-two FFT size that holds a linear convolution of two length-L vectors."""
    return 1 << max(2 * L - 2, 1).bit_length()


def convolve_with_spectrum(spectrum: np.ndarray, L: int, v: np.ndarray) -> np.ndarray:
    """Circular convolution with a first column given by its padded real spectrum.

    The transforms run along the last axis of v's transpose, so each column of v
    is a contiguous row.
    """
    v = np.asarray(v, dtype=float)
    nfft = 2 * (len(spectrum) - 1)
    vt = np.ascontiguousarray(v.T)
    lin = np.fft.irfft(spectrum * np.fft.rfft(vt, nfft), nfft)
    out = lin[..., :L].copy()
    out[..., : L - 1] += lin[..., L : 2 * L - 1]
    return out.T


# --- constructions ------------------------------------------------------------


def _first_within(values: np.ndarray, tol: float) -> tuple[int, float]:
    """Index of the first value within tol of the minimum, and the gap to the
    best value outside that tie class."""
    best = float(values.min())
    idx = int(np.argmax(values <= best + tol))
    others = values[values > best + tol]
    gap = float(others.min() - best) if len(others) else math.inf
    return idx, gap


def _setup(b: int, m: int, s: int, model: WeightModel):
    if not isinstance(model, WeightModel):
        raise UsageError("CBC construction supports product weights (a WeightModel) only")
    if m < 1 or s < 1:
        raise UsageError("need m >= 1 and s >= 1")
    if model.base != b:
        raise UsageError(f"model base {model.base} differs from b={b}")
    gamma = model.weights(s)
    p = find_irreducible(b, m)
    table = build_field_table(p)
    return p, table, gamma


def _setup_with_table(b: int, m: int, s: int, model: WeightModel, table: FieldTable):
    if not isinstance(model, WeightModel):
        raise UsageError("CBC construction supports product weights (a WeightModel) only")
    if table.modulus.base != b or table.modulus.degree != m:
        raise UsageError("field table does not match (b, m)")
    if model.base != b:
        raise UsageError(f"model base {model.base} differs from b={b}")
    return model.weights(s)


def _report(b, m, model, table, exponents, per_dim, t0, separation) -> CriterionReport:
    gen = tuple(table.exp_of(z) for z in exponents)
    rule = LatticeRule(b, m, table.modulus, gen)
    return CriterionReport(
        rule=rule,
        criterion=per_dim[-1],
        per_dimension=per_dim,
        bound=cbc_bound(model, len(exponents), m, 1.0),
        wall_time=time.perf_counter() - t0,
        exponents=tuple(exponents),
        generator=table.generator,
        separation=separation,
    )


def _candidate_order(L: int) -> np.ndarray:
    """Exponents z = 1..L in scan order; z = L stands for g^0 = 1."""
    return np.arange(1, L + 1) % L


def cbc_fast(b: int, m: int, s: int, model: WeightModel, table: FieldTable | None = None) -> CriterionReport:
    """Fast CBC: one circulant convolution of length b^m - 1 per coordinate."""
    t0 = time.perf_counter()
    if table is None:
        _, table, gamma = _setup(b, m, s, model)
    else:
        gamma = _setup_with_table(b, m, s, model, table)
    N = b**m
    L = N - 1
    ca = model.c_alpha
    wgrid = w_alpha_grid(m, model.alpha, b)
    w0 = float(wgrid[0])
    c = wgrid[table.laurent_profile]  # c[t] = w(v_m(g^t / p))
    # P[e] = running product for the residue g^e, P0 for the residue 0
    P = 1.0 + gamma[0] * ca * c
    P0 = 1.0 + gamma[0] * ca * w0
    exponents = [0]
    per_dim = [-1.0 + (P0 + math.fsum(P)) / N]
    separation = [math.inf]
    order = _candidate_order(L)
    for d in range(1, s):
        gd = gamma[d]
        # eta[z] = sum_e P[e] c[(z + e) mod L]
        y = P[(-np.arange(L)) % L]
        eta = circular_convolve(c, y)
        base_sum = P0 * (1.0 + gd * ca * w0) + math.fsum(P)
        values = -1.0 + (base_sum + gd * ca * eta[order]) / N
        idx, gap = _first_within(values, TIE_TOL)
        z0 = int(order[idx])
        P = P * (1.0 + gd * ca * c[(z0 + np.arange(L)) % L])
        P0 *= 1.0 + gd * ca * w0
        exponents.append(z0)
        per_dim.append(-1.0 + (P0 + math.fsum(P)) / N)
        separation.append(gap)
    return _report(b, m, model, table, exponents, per_dim, t0, separation)


def _natural_w_column(q: GFPoly, p: GFPoly, m: int, wgrid: np.ndarray) -> np.ndarray:
    n = np.arange(p.base**m, dtype=np.int64)
    return wgrid[scaled_laurent_values(mul_mod_encoded(n, q, p), p, m)]


def cbc_slow(b: int, m: int, s: int, model: WeightModel) -> CriterionReport:
    """Reference CBC: every candidate's criterion by direct summation over points."""
    t0 = time.perf_counter()
    p, table, gamma = _setup(b, m, s, model)
    N = b**m
    L = N - 1
    ca = model.c_alpha
    wgrid = w_alpha_grid(m, model.alpha, b)
    one = GFPoly.one(b)
    prod = 1.0 + gamma[0] * ca * _natural_w_column(one, p, m, wgrid)
    exponents = [0]
    per_dim = [-1.0 + math.fsum(prod) / N]
    separation = [math.inf]
    order = _candidate_order(L)
    cols = {}
    for d in range(1, s):
        values = np.empty(L)
        for i, z in enumerate(order):
            z = int(z)
            if z not in cols:
                cols[z] = _natural_w_column(table.exp_of(z), p, m, wgrid)
            values[i] = -1.0 + math.fsum(prod * (1.0 + gamma[d] * ca * cols[z])) / N
        idx, gap = _first_within(values, TIE_TOL)
        z0 = int(order[idx])
        prod = prod * (1.0 + gamma[d] * ca * cols[z0])
        exponents.append(z0)
        per_dim.append(float(values[idx]))
        separation.append(gap)
    return _report(b, m, model, table, exponents, per_dim, t0, separation)


def subset_criterion(w_cols: list[np.ndarray], weights: dict[frozenset, float], ca: float) -> float:
    """Btilde for general weights: sum_u gamma_u C^|u| mean_n prod_{j in u} w."""
    total = 0.0
    for u, g in weights.items():
        col = np.ones_like(w_cols[0])
        for j in u:
            col = col * w_cols[j - 1]
        total += g * ca ** len(u) * math.fsum(col) / len(col)
    return total


def product_subset_weights(gamma) -> dict[frozenset, float]:
    s = len(gamma)
    out = {}
    for r in range(1, s + 1):
        for u in itertools.combinations(range(1, s + 1), r):
            out[frozenset(u)] = math.prod(gamma[j - 1] for j in u)
    return out


def exhaustive_best(
    b: int,
    m: int,
    s: int,
    model: WeightModel,
    subset_weights: dict[frozenset, float] | None = None,
) -> CriterionReport:
    """Global minimiser of Btilde over all (b^m - 1)^s generating vectors.

    ``per_dimension`` holds Btilde of the prefixes of the optimum.  General
    weights may be passed as a table of gamma_u.
    """
    t0 = time.perf_counter()
    if (b**m - 1) ** s > EXHAUSTIVE_BUDGET:
        raise ResourceError(f"(b^m - 1)^s = {(b**m - 1) ** s} exceeds {EXHAUSTIVE_BUDGET}")
    p, table, gamma = _setup(b, m, s, model)
    if subset_weights is None:
        subset_weights = product_subset_weights(gamma)
    L = b**m - 1
    wgrid = w_alpha_grid(m, model.alpha, b)
    order = [int(z) for z in _candidate_order(L)]
    cols = {z: _natural_w_column(table.exp_of(z), p, m, wgrid) for z in order}
    ca = model.c_alpha
    best, best_z = math.inf, None
    for zs in itertools.product(order, repeat=s):
        val = subset_criterion([cols[z] for z in zs], subset_weights, ca)
        if val < best - TIE_TOL:
            best, best_z = val, zs
    per_dim = []
    for d in range(1, s + 1):
        sub = {u: g for u, g in subset_weights.items() if max(u) <= d}
        per_dim.append(subset_criterion([cols[z] for z in best_z[:d]], sub, ca))
    return _report(b, m, model, table, list(best_z), per_dim, t0, [])


def grid_term_general(model: WeightModel, m: int, subset_weights: dict[frozenset, float]) -> float:
    z = grid_walsh_mass(model.alpha, model.base, m)
    return sum(g * (model.c_alpha * z) ** len(u) for u, g in subset_weights.items())
