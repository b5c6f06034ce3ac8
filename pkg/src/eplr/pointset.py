"""Polynomial lattice point sets, their dual lattices and regular grids.

Coordinates are kept as exact integer numerators over a common denominator
(b^m for lattice rules, N for grids); floats only appear on request.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Sequence, TextIO

import numpy as np

from .errors import ResourceError, UsageError
from .gfpoly import (
    GFPoly,
    int_to_digits,
    is_irreducible,
    laurent_matrix,
    multiplication_matrix,
    tr_m,
)

MAX_GRID_POINTS = 1 << 26


@dataclass(frozen=True)
class LatticeRule:
    """Modulus p of degree m over F_b and generating vector (q_1, ..., q_s)."""

    base: int
    m: int
    modulus: GFPoly
    gen: tuple[GFPoly, ...]

    def __post_init__(self):
        object.__setattr__(self, "gen", tuple(self.gen))
        if self.modulus.base != self.base or any(q.base != self.base for q in self.gen):
            raise UsageError("all polynomials must share the rule's base")
        if self.modulus.degree != self.m:
            raise UsageError(f"modulus degree {self.modulus.degree} differs from m={self.m}")
        if not self.gen:
            raise UsageError("generating vector must have at least one component")
        for j, q in enumerate(self.gen, 1):
            if q.is_zero() or q.degree >= self.m:
                raise UsageError(f"component {j} must be nonzero with degree < m")

    @property
    def s(self) -> int:
        return len(self.gen)

    @property
    def n_points(self) -> int:
        return self.base**self.m

    def validate(self) -> None:
        """Check the modulus is irreducible (not done on construction: Ben-Or costs m^3)."""
        if not is_irreducible(self.modulus):
            raise UsageError(f"modulus {self.modulus} is not irreducible")

    def project(self, d: int) -> LatticeRule:
        """The rule restricted to its first d coordinates."""
        return LatticeRule(self.base, self.m, self.modulus, self.gen[:d])


@dataclass(frozen=True)
class PointSet:
    """Rows of integer numerators over a common denominator."""

    numerators: np.ndarray
    denominator: int
    rule: LatticeRule | None = None

    @property
    def points(self) -> np.ndarray:
        return self.numerators / self.denominator

    def __len__(self) -> int:
        return self.numerators.shape[0]

    @property
    def s(self) -> int:
        return self.numerators.shape[1]


def _column_matrices(rule: LatticeRule) -> list[np.ndarray]:
    """Per coordinate j the F_b matrix mapping digits(n) to the digits of v_m(n q_j / p)."""
    D = laurent_matrix(rule.modulus, rule.m)
    return [(D @ multiplication_matrix(q, rule.modulus)) % rule.base for q in rule.gen]


def generate_points(rule: LatticeRule) -> PointSet:
    """Points x_n, n = 0..b^m-1 in natural order, as numerators over b^m."""
    b, m = rule.base, rule.m
    n = np.arange(b**m, dtype=np.int64)
    digits = int_to_digits(n, b, m).astype(np.float64)
    weights = b ** np.arange(m - 1, -1, -1, dtype=np.int64)
    out = np.empty((b**m, rule.s), dtype=np.int64)
    # digit products stay far below 2^53, so float BLAS is exact here
    for j, C in enumerate(_column_matrices(rule)):
        a = np.rint(digits @ C.T.astype(np.float64)).astype(np.int64) % b
        out[:, j] = a @ weights
    return PointSet(out, b**m, rule)


def _dual_residue(rule: LatticeRule, k: Sequence[int]) -> GFPoly:
    if len(k) != rule.s:
        raise UsageError(f"k has {len(k)} components, rule has dimension {rule.s}")
    total = GFPoly(rule.base)
    for kj, q in zip(k, rule.gen):
        if kj < 0:
            raise UsageError("frequency components must be nonnegative")
        total = total + tr_m(kj, rule.base, rule.m) * q
    return total % rule.modulus


def in_dual(rule: LatticeRule, k: Sequence[int]) -> bool:
    return _dual_residue(rule, k).is_zero()


def walsh_exponents(numerators: np.ndarray, k: int, b: int, m: int) -> np.ndarray:
    """Exponent e (mod b) with wal_k(a / b^m) = omega_b^e, for an array of a."""
    e = np.zeros(np.shape(numerators), dtype=np.int64)
    for i in range(m):
        kappa = (k // b**i) % b
        if kappa:
            xi = (numerators // b ** (m - 1 - i)) % b
            e += kappa * xi
    return e % b


def character_sum(rule: LatticeRule, k: Sequence[int], points: PointSet | None = None) -> complex:
    """sum over the point set of wal_k(x); b^m on the dual lattice, 0 elsewhere."""
    if len(k) != rule.s:
        raise UsageError(f"k has {len(k)} components, rule has dimension {rule.s}")
    pts = generate_points(rule) if points is None else points
    b, m = rule.base, rule.m
    e = np.zeros(len(pts), dtype=np.int64)
    for j, kj in enumerate(k):
        e += walsh_exponents(pts.numerators[:, j], kj, b, m)
    counts = np.bincount(e % b, minlength=b)
    return complex(sum(int(c) * cmath.exp(2j * math.pi * r / b) for r, c in enumerate(counts)))


def regular_grid(N: int, s: int, max_points: int = MAX_GRID_POINTS) -> PointSet:
    """All points (n_1/N, ..., n_s/N), last coordinate varying fastest."""
    if N < 1 or s < 1:
        raise UsageError("grid needs N >= 1 and s >= 1")
    if N**s > max_points:
        raise ResourceError(f"grid of {N}^{s} points exceeds the budget of {max_points}")
    idx = np.indices((N,) * s, dtype=np.int64).reshape(s, -1).T
    return PointSet(np.ascontiguousarray(idx), N)


def _format_coordinate(num: int, den: int) -> str:
    f = Fraction(int(num), den)
    d = f.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d != 1:
        return f"{f.numerator}/{f.denominator}"
    with localcontext() as ctx:
        ctx.prec = 2 * len(str(den)) + 10
        text = format(Decimal(f.numerator) / Decimal(f.denominator), "f")
    return text


def write_points(pts: PointSet, stream: TextIO) -> None:
    """One point per line, exact coordinates separated by spaces.

    Terminating decimals are written in full; other bases fall back to a/b.
    """
    for row in pts.numerators:
        stream.write(" ".join(_format_coordinate(a, pts.denominator) for a in row))
        stream.write("\n")
