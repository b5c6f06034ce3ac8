"""QMC means, extrapolated polynomial lattice rules and convergence sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .cbc import cbc_fast
from .errors import UsageError
from .extrapolation import ExtrapolationScheme, extrapolate_chain
from .pointset import LatticeRule, PointSet, generate_points, regular_grid
from .walsh import WeightModel

CHUNK = 1 << 16


@dataclass(frozen=True)
class Integrand:
    """A vectorised test function on [0,1)^s.

    ``func`` maps an (n, s) array of points to n values.  ``dimension`` is
    None when the function accepts any s.
    """

    id: str
    func: Callable[[np.ndarray], np.ndarray]
    dimension: int | None = None
    exact_integral: float | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.func(np.atleast_2d(x))

    def check_dimension(self, s: int) -> None:
        if self.dimension is not None and self.dimension != s:
            raise UsageError(f"integrand {self.id!r} has dimension {self.dimension}, points have {s}")


# --- built-in catalogue -------------------------------------------------------


def _bivariate() -> Integrand:
    scale = 1.0 / (math.e - 2.0)
    return Integrand(
        "bivariate",
        lambda x: x[:, 1] * np.exp(x[:, 0] * x[:, 1]) * scale,
        dimension=2,
        exact_integral=1.0,
    )


def _gamma_array(s: int, gamma) -> np.ndarray:
    if gamma is None:
        gamma = [j**-2.0 for j in range(1, s + 1)]
    g = np.asarray(gamma, dtype=float)
    if g.shape != (s,):
        raise UsageError(f"need {s} weights, got {g.size}")
    return g


def _f1(s: int, gamma=None, c1: float = 1.3) -> Integrand:
    g = _gamma_array(s, gamma)
    shift = 1.0 / (1.0 + c1)
    return Integrand(
        "f1",
        lambda x: np.prod(1.0 + g * (x**c1 - shift), axis=1),
        dimension=s,
        exact_integral=1.0,
        params={"c1": c1, "gamma": tuple(g)},
    )


def _f2(s: int, gamma=None, c2: int = 1) -> Integrand:
    g = _gamma_array(s, gamma)
    if c2 == 1:
        exact = math.prod(1.0 + math.log1p(gj) for gj in g)
    elif c2 == 2:
        exact = math.prod(1.0 + math.sqrt(gj) * math.atan(math.sqrt(gj)) for gj in g)
    else:
        exact = None
    return Integrand(
        "f2",
        lambda x: np.prod(1.0 + g / (1.0 + g * x**c2), axis=1),
        dimension=s,
        exact_integral=exact,
        params={"c2": c2, "gamma": tuple(g)},
    )


def _constant(s: int | None = None, value: float = 1.0) -> Integrand:
    return Integrand(
        "constant",
        lambda x: np.full(x.shape[0], float(value)),
        dimension=s,
        exact_integral=float(value),
        params={"value": value},
    )


def _exp1() -> Integrand:
    return Integrand("exp", lambda x: np.exp(x[:, 0]), dimension=1, exact_integral=math.e - 1.0)


_CATALOGUE = {
    "bivariate": _bivariate,
    "f1": _f1,
    "f2": _f2,
    "constant": _constant,
    "exp": _exp1,
}


def builtin_integrands() -> dict[str, Callable[..., Integrand]]:
    """Names mapped to factories; f1 and f2 take (s, gamma, c1 / c2)."""
    return dict(_CATALOGUE)


def make_integrand(name: str, **params) -> Integrand:
    try:
        factory = _CATALOGUE[name]
    except KeyError:
        raise UsageError(f"unknown integrand {name!r}; choose from {sorted(_CATALOGUE)}") from None
    return factory(**params)


# --- engines ------------------------------------------------------------------


def qmc_mean(f: Integrand, pts: PointSet) -> float:
    """Equal-weight average of f over the point set (compensated summation)."""
    f.check_dimension(pts.s)
    partial = []
    for start in range(0, len(pts), CHUNK):
        x = pts.numerators[start : start + CHUNK] / pts.denominator
        partial.extend(np.asarray(f(x), dtype=float))
    return math.fsum(partial) / len(pts)


@dataclass
class QuadratureReport:
    estimate: float
    per_rule_estimates: list[float]
    total_points: int
    error: float | None = None
    inflation: float = 1.0


def eplr_integrate(
    f: Integrand, rules: Sequence[LatticeRule], scheme: ExtrapolationScheme
) -> QuadratureReport:
    """Combine the QMC means of an alpha-chain of rules by Richardson extrapolation.

    ``rules`` may come in any order; they must have consecutive m and share b
    and s.  ``per_rule_estimates`` lists the largest rule first.
    """
    if len(rules) != scheme.order:
        raise UsageError(f"scheme of order {scheme.order} needs that many rules, got {len(rules)}")
    chain = sorted(rules, key=lambda r: r.m, reverse=True)
    top = chain[0]
    for i, r in enumerate(chain):
        if r.base != scheme.base or r.base != top.base:
            raise UsageError("all rules must use the scheme's base")
        if r.s != top.s:
            raise UsageError("all rules must have the same dimension")
        if r.m != top.m - i:
            raise UsageError(f"rule sizes must be consecutive powers, got m = {[c.m for c in chain]}")
    means = [qmc_mean(f, generate_points(r)) for r in chain]
    est = math.fsum(a * v for a, v in zip(scheme.float_coeffs, means))
    err = None if f.exact_integral is None else abs(est - f.exact_integral)
    return QuadratureReport(
        estimate=est,
        per_rule_estimates=means,
        total_points=sum(r.n_points for r in chain),
        error=err,
        inflation=scheme.inflation,
    )


def grid_quadrature(f: Integrand, N: int, s: int) -> float:
    """Left-endpoint product rule on the regular grid with N^s points."""
    return qmc_mean(f, regular_grid(N, s))


def grid_extrapolated(f: Integrand, b: int, n_top: int, alpha: int) -> float:
    """Richardson-extrapolated grid rule from the grids N = b^(n_top-alpha+1) .. b^n_top."""
    values = [grid_quadrature(f, b**n, 1 if f.dimension is None else f.dimension)
              for n in range(n_top - alpha + 1, n_top + 1)]
    return extrapolate_chain(values, b, alpha)


def fitted_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of y against x; nan when undefined."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 2 or np.ptp(x[ok]) == 0:
        return math.nan
    return float(np.polyfit(x[ok], y[ok], 1)[0])


def log_error(err: float, b: int) -> float:
    return math.log(err, b) if err > 0 else -math.inf


@dataclass
class SweepRow:
    m: int
    N: int
    estimate: float
    abs_error: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    rate: float
    base: int

    def log_points(self) -> tuple[list[float], list[float]]:
        return (
            [math.log(r.N, self.base) for r in self.rows],
            [log_error(r.abs_error, self.base) for r in self.rows],
        )

    def windowed_slopes(self, width: int) -> list[float]:
        """Slopes fitted over consecutive windows of ``width`` rows."""
        x, y = self.log_points()
        return [fitted_slope(x[i : i + width], y[i : i + width]) for i in range(len(x) - width + 1)]


def _upper_half(n: int) -> slice:
    return slice(n // 2, n)


def convergence_sweep(
    f: Integrand,
    b: int,
    alpha: int,
    m_range: Iterable[int],
    model: WeightModel,
    rule_cache: dict | None = None,
) -> SweepResult:
    """Errors of the extrapolated rule for each m, with the fitted rate.

    Rules are built by fast CBC, one per size, and shared between consecutive
    m through ``rule_cache`` (keyed by m).  The rate is the least-squares
    slope of log_b error against log_b N over the upper half of the m values;
    it is nan when no error there is positive.
    """
    if f.exact_integral is None:
        raise UsageError(f"integrand {f.id!r} has no known exact integral")
    ms = sorted(set(m_range))
    if not ms:
        raise UsageError("empty m range")
    if ms[0] < alpha:
        raise UsageError(f"m must be at least alpha={alpha}")
    s = f.dimension if f.dimension is not None else model.s
    cache = {} if rule_cache is None else rule_cache
    scheme = ExtrapolationScheme(b, alpha)
    rows = []
    for m in ms:
        chain = []
        for mm in range(m - alpha + 1, m + 1):
            if mm not in cache:
                cache[mm] = cbc_fast(b, mm, s, model).rule
            chain.append(cache[mm])
        rep = eplr_integrate(f, chain, scheme)
        rows.append(SweepRow(m, rep.total_points, rep.estimate, rep.error))
    result = SweepResult(rows, math.nan, b)
    x, y = result.log_points()
    half = _upper_half(len(rows))
    result.rate = fitted_slope(x[half], y[half])
    return result
