"""Walsh-function kernels and the constants entering the error bounds.

The central object is the kernel

    w_alpha(x) = sum_{k >= 1} b^(-mu_alpha(k)) wal_k(x),

evaluated at b-adic rationals x = a / b^m.  Two evaluators are provided:

* ``w_alpha_series`` sums every k with mu_alpha(k) <= T by a digit-position
  recursion and reports a rigorous bound on the omitted tail.  This is the
  reference used by ``w_alpha_at``.
* ``w_alpha_grid`` evaluates all b^m grid values in O(alpha * m * b^m) by
  summing the geometric contributions of digit positions above m in closed
  form.  The construction code uses this one; tests hold it to the series.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterator, Sequence

import numpy as np

from .errors import UsageError


class KernelError(UsageError):
    """Invalid parameters for a kernel or bound."""


# --- the metric mu_alpha and Walsh functions ---------------------------------


def digit_positions(k: int, b: int) -> list[int]:
    """Positions a_1 > a_2 > ... of the nonzero base-b digits of k (1-based)."""
    out, pos = [], 1
    while k:
        k, r = divmod(k, b)
        if r:
            out.append(pos)
        pos += 1
    return out[::-1]


def mu_alpha(k: int, alpha: int, b: int) -> int:
    return sum(digit_positions(k, b)[:alpha])


def wal(k: int, x_digits: Sequence[int], b: int) -> complex:
    """k-th Walsh function at the point with base-b digits xi_1, xi_2, ..."""
    exponent, i = 0, 0
    while k and i < len(x_digits):
        k, kappa = divmod(k, b)
        exponent += kappa * x_digits[i]
        i += 1
    if exponent % b == 0:
        return 1.0 + 0.0j
    return cmath.exp(2j * math.pi * (exponent % b) / b)


def point_digits(a: int, m: int, b: int) -> list[int]:
    """Digits xi_1..xi_m of x = a / b^m."""
    return [(a // b ** (m - i)) % b for i in range(1, m + 1)]


def enumerate_mu_bounded(alpha: int, b: int, T: int) -> Iterator[tuple[int, int]]:
    """All k >= 1 with mu_alpha(k) <= T, paired with mu_alpha(k)."""

    def rec(value: int, pos: int, count: int, mu: int):
        yield value, mu
        for a in range(pos - 1, 0, -1):
            if count < alpha and mu + a > T:
                continue
            new_mu = mu + a if count < alpha else mu
            for kappa in range(1, b):
                yield from rec(value + kappa * b ** (a - 1), a, count + 1, new_mu)

    for a1 in range(1, T + 1):
        for kappa in range(1, b):
            yield from rec(kappa * b ** (a1 - 1), a1, 1, a1)


# --- closed-form sums ---------------------------------------------------------


def _check_alpha(alpha: int) -> None:
    if int(alpha) != alpha or alpha < 1:
        raise KernelError(f"alpha must be a positive integer, got {alpha}")


def E_alpha_lambda(alpha: int, lam: float, b: int) -> float:
    """Closed form of sum_{k>=1} b^(-lam * mu_alpha(k)), valid for 1/alpha < lam <= 1."""
    _check_alpha(alpha)
    if alpha < 2:
        raise KernelError("E_alpha_lambda requires alpha >= 2")
    if not (1.0 / alpha < lam <= 1.0):
        raise KernelError(f"lambda must satisfy 1/alpha < lambda <= 1, got {lam}")
    factors = [(b - 1) / (b ** (lam * i) - 1) for i in range(1, alpha + 1)]
    total, prod = 0.0, 1.0
    for w in range(1, alpha):
        prod *= factors[w - 1]
        total += prod
    prod *= factors[alpha - 1]
    return total + (b ** (lam * alpha) - 1) / (b ** (lam * alpha) - b) * prod


def _geometric_esym(r: int, b: int, shift: int) -> float:
    """Elementary symmetric sum e_r of the weights (b-1) b^(-a), a > shift."""
    q = 1.0 / b
    value = (b - 1) ** r * q ** (r * shift + r * (r + 1) / 2)
    for i in range(1, r + 1):
        value /= 1 - q**i
    return value


def grid_walsh_mass(alpha: int, b: int, m: int) -> float:
    """sum_{k>=1} b^(-mu_alpha(b^m k)): the mean of w_alpha over the grid a/b^m.

    For m = 0 this is w_alpha(0) = E_{alpha,1}.
    """
    _check_alpha(alpha)
    if alpha < 2:
        raise KernelError("w_alpha diverges at the origin for alpha = 1")
    q = 1.0 / b
    total = sum(b ** (-m * v) * _geometric_esym(v, b, 0) for v in range(1, alpha))
    # exactly alpha leading digits, arbitrary digits below the lowest of them
    tail = (b - 1) ** alpha / b * q ** (alpha * (alpha - 1) / 2)
    for i in range(1, alpha):
        tail /= 1 - q**i
    tail *= q ** (alpha - 1) / (1 - q ** (alpha - 1))
    return total + b ** (-m * alpha) * tail


# --- w_alpha evaluation -------------------------------------------------------


def _series_sum(x_digits: Sequence[int], alpha: int, b: int, T: int) -> float:
    # state[c, mu]: signed weight of digit choices above the current position with
    # c = min(#nonzero digits, alpha) and mu = sum of the leading positions
    state = np.zeros((alpha + 1, T + 1))
    state[0, 0] = 1.0
    for a in range(T, 0, -1):
        xi = x_digits[a - 1] if a <= len(x_digits) else 0
        s_a = (b - 1.0) if xi == 0 else -1.0
        new = state.copy()
        new[1:alpha, a:] += s_a * state[: alpha - 1, : T + 1 - a]
        new[alpha, a:] += s_a * state[alpha - 1, : T + 1 - a]
        new[alpha] += s_a * state[alpha]
        state = new
    weights = float(b) ** -np.arange(T + 1)
    return float((state[1:] @ weights).sum())


def w_alpha_series(x_digits: Sequence[int], alpha: int, b: int, T: int) -> tuple[float, float]:
    """Truncated series sum over mu_alpha(k) <= T and a bound on the tail.

    The tail bound is E_{alpha,1} minus the truncated mass at x = 0, i.e. the
    exact total of b^(-mu) over the omitted k; |wal_k| = 1 makes it rigorous.
    """
    _check_alpha(alpha)
    value = _series_sum(x_digits, alpha, b, T)
    mass = _series_sum((), alpha, b, T)
    tail = max(E_alpha_lambda(alpha, 1.0, b) - mass, 0.0) if alpha >= 2 else math.inf
    return value, tail


def w_alpha_at(a: int, m: int, alpha: int, b: int, tol: float = 1e-12) -> float:
    """w_alpha(a / b^m) to absolute accuracy tol, by truncated summation."""
    if tol <= 0:
        raise KernelError("tol must be positive")
    if not 0 <= a < b**m:
        raise KernelError(f"a must lie in [0, b^m), got {a}")
    digits = point_digits(a, m, b)
    T = max(8, 2 * m)
    while True:
        value, tail = w_alpha_series(digits, alpha, b, T)
        # allow for rounding in the subtraction defining the tail bound
        if tail + 1e-15 * T < tol:
            return value
        if T > 4000:
            raise KernelError(f"tolerance {tol} not reachable")
        T = int(T * 1.5)


def w_alpha_grid(m: int, alpha: int, b: int) -> np.ndarray:
    """w_alpha(a / b^m) for a = 0..b^m-1 (read-only, cached)."""
    return _w_alpha_grid(int(m), int(alpha), int(b))


@lru_cache(maxsize=64)
def _w_alpha_grid(m: int, alpha: int, b: int) -> np.ndarray:
    _check_alpha(alpha)
    if alpha < 2:
        raise KernelError("w_alpha requires alpha >= 2")
    n = b**m
    a = np.arange(n, dtype=np.int64)
    # digit positions above m all carry S = b - 1: closed-form symmetric sums
    acc = [np.full(n, _geometric_esym(c, b, m)) for c in range(alpha)]
    result = np.zeros(n)
    lowest_nonzero = np.full(n, m + 1)
    for pos in range(1, m + 1):
        xi = (a // b ** (m - pos)) % b
        lowest_nonzero = np.where((xi != 0) & (lowest_nonzero > m), pos, lowest_nonzero)
    for pos in range(m, 0, -1):
        xi = (a // b ** (m - pos)) % b
        weight = np.where(xi == 0, b - 1.0, -1.0) * float(b) ** -pos
        # choosing pos as the alpha-th leading digit; the digits below are free and
        # sum to prod_{j<pos} (1 + S_j), which is b^(pos-1) or 0
        free = np.where(pos <= lowest_nonzero, float(b) ** (pos - 1), 0.0)
        result += acc[alpha - 1] * weight * free
        for c in range(alpha - 1, 0, -1):
            acc[c] = acc[c] + acc[c - 1] * weight
    result += sum(acc[1:])
    result[0] = grid_walsh_mass(alpha, b, 0)
    result.setflags(write=False)
    return result


# --- Bernoulli polynomials and the bound constants ---------------------------


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int) -> tuple[Fraction, ...]:
    """B_0..B_n with B_1 = -1/2."""
    B = [Fraction(1)]
    for k in range(1, n + 1):
        B.append(-sum(comb(k + 1, j) * B[j] for j in range(k)) / (k + 1))
    return tuple(B)


def bernoulli_b(tau: int) -> tuple[tuple[Fraction, ...], Fraction]:
    """Coefficients (low to high) of b_tau(x) = B_tau(x)/tau! and b_tau = b_tau(0)."""
    if tau < 0:
        raise KernelError("tau must be nonnegative")
    B = bernoulli_numbers(tau)
    # B_tau(x) = sum_j C(tau, j) B_j x^(tau - j)
    coeffs = [Fraction(0)] * (tau + 1)
    for j in range(tau + 1):
        coeffs[tau - j] = comb(tau, j) * B[j] / factorial(tau)
    return tuple(coeffs), coeffs[0]


def eval_poly(coeffs: Sequence, x):
    """Horner evaluation; works for floats, arrays and Fractions."""
    out = 0 * x
    for c in reversed(coeffs):
        out = out * x + (float(c) if not isinstance(x, Fraction) else c)
    return out


def C_alpha_default(alpha: int, b: int) -> float:
    """Walsh-coefficient constant for general prime b."""
    _check_alpha(alpha)
    two_sin = 2 * math.sin(math.pi / b)
    first = max(2 / two_sin**alpha, max(1 / two_sin**z for z in range(1, alpha)))
    return (
        first
        * (1 + 1 / b + 1 / (b * (b + 1))) ** (alpha - 2)
        * (3 + 2 / b + (2 * b + 1) / (b - 1))
    )


def _bisect_root(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sup_abs_bernoulli(tau: int, grid: int = 2048) -> float:
    """sup over [0,1) of |b_tau(x)|, via the roots of b_tau' = b_(tau-1)."""
    coeffs, _ = bernoulli_b(tau)
    deriv, _ = bernoulli_b(tau - 1) if tau >= 1 else ((Fraction(0),), 0)

    def f(x):
        return eval_poly(deriv, x)

    candidates = [0.0, 1.0]
    xs = np.linspace(0.0, 1.0, grid + 1)
    vals = eval_poly(deriv, xs)
    for i in range(grid):
        if vals[i] == 0:
            candidates.append(float(xs[i]))
        elif vals[i] * vals[i + 1] < 0:
            candidates.append(_bisect_root(f, float(xs[i]), float(xs[i + 1])))
    return max(abs(eval_poly(coeffs, x)) for x in candidates)


def D_alpha(alpha: int) -> float:
    if alpha < 2:
        raise KernelError("D_alpha requires alpha >= 2")
    consts = [abs(float(bernoulli_b(t)[1])) for t in range(1, alpha)]
    return max(consts + [sup_abs_bernoulli(alpha)])


# --- the weight model and bounds ---------------------------------------------


@dataclass(frozen=True)
class WeightModel:
    """Product weights together with the smoothness parameters of the bounds."""

    gamma: tuple[float, ...]
    alpha: int = 2
    base: int = 2
    c_alpha: float | None = None
    q_conj: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if int(self.alpha) != self.alpha or self.alpha < 2:
            raise KernelError(f"alpha must be an integer >= 2, got {self.alpha}")
        if any(g < 0 or not math.isfinite(g) for g in self.gamma):
            raise KernelError("weights must be finite and nonnegative")
        if self.c_alpha is None:
            object.__setattr__(self, "c_alpha", C_alpha_default(self.alpha, self.base))
        if not self.c_alpha > 0:
            raise KernelError("c_alpha must be positive")
        if not self.q_conj >= 1:
            raise KernelError("q_conj must lie in [1, inf]")

    @property
    def s(self) -> int:
        return len(self.gamma)

    def weights(self, s: int) -> tuple[float, ...]:
        if s > len(self.gamma):
            raise KernelError(f"model has {len(self.gamma)} weights, {s} requested")
        return self.gamma[:s]


def H_product(model: WeightModel, s: int) -> float:
    exponent = 0.0 if math.isinf(model.q_conj) else 1.0 / model.q_conj
    factor = (model.alpha + 1) ** exponent * D_alpha(model.alpha)
    return math.prod(1 + g * factor for g in model.weights(s))


def _check_lambda(alpha: int, lam: float) -> None:
    if not (1.0 / alpha < lam <= 1.0):
        raise KernelError(f"lambda must satisfy 1/alpha < lambda <= 1, got {lam}")


def cbc_bound(model: WeightModel, s: int, m: int, lam: float) -> float:
    """Upper bound satisfied by every prefix of a CBC generating vector."""
    _check_lambda(model.alpha, lam)
    b = model.base
    E = E_alpha_lambda(model.alpha, lam, b)
    ca = model.c_alpha
    prod = math.prod((1 + g**lam * ca**lam * E) ** (1 / lam) for g in model.weights(s))
    return (b**m - 1) ** (-1 / lam) * prod


def existence_bound(
    model: WeightModel,
    s: int,
    m: int,
    lam: float,
    subset_weights: dict[frozenset, float] | None = None,
) -> float:
    """Bound attained by the best generating vector (product or tabulated weights).

    ``subset_weights`` maps nonempty frozensets of 1-based coordinates to
    gamma_u and is accepted for s <= 4.
    """
    _check_lambda(model.alpha, lam)
    b = model.base
    E = E_alpha_lambda(model.alpha, lam, b)
    ca = model.c_alpha
    if subset_weights is None:
        bracket = math.prod(1 + g**lam * ca**lam * E for g in model.weights(s)) - 1
    else:
        if s > 4:
            raise KernelError("general weights are supported for s <= 4 only")
        bracket = 0.0
        for u, g in subset_weights.items():
            if not u or not set(u) <= set(range(1, s + 1)):
                raise KernelError(f"invalid subset {sorted(u)}")
            bracket += g**lam * ca ** (lam * len(u)) * E ** len(u)
    return (b**m - 1) ** (-1 / lam) * max(bracket, 0.0) ** (1 / lam)
