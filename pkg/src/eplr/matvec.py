"""Fast products X A for polynomial lattice point matrices X.

With the rows ordered as n = 0 followed by n = g^z (z = 0..b^m - 2), column j
of X is a cyclic shift of one profile vector c[t] = v_m(g^t / p):

    X[1 + z, j] = c[(z + z_j) mod (b^m - 1)],   q_j = g^(z_j).

Every column of X A is then a circular convolution of c with a vector that
scatters the rows of A to the positions -z_j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cbc import convolution_length, convolve_with_spectrum
from .errors import UsageError
from .gfpoly import FieldTable, build_field_table
from .pointset import LatticeRule, generate_points

ROW_ORDER = "row 0: n = 0; row 1 + z: n = g^z for z = 0..b^m-2"


@dataclass(frozen=True)
class CirculantProfile:
    rule: LatticeRule
    table: FieldTable
    exponents: tuple[int, ...]
    c: np.ndarray
    spectrum: np.ndarray

    @property
    def length(self) -> int:
        return len(self.c)

    def row_indices(self) -> np.ndarray:
        """Natural point index n for each row of the profile ordering."""
        return np.concatenate([[0], np.asarray(self.table.exp, dtype=np.int64)])


def build_profile(rule: LatticeRule, table: FieldTable | None = None) -> CirculantProfile:
    if table is None:
        table = build_field_table(rule.modulus)
    if table.modulus != rule.modulus:
        raise UsageError("field table was built for a different modulus")
    try:
        z = tuple(table.log_of(q) for q in rule.gen)
    except ValueError as exc:
        raise UsageError(f"generating vector has no discrete logarithm: {exc}") from None
    c = table.laurent_profile / float(rule.n_points)
    c.setflags(write=False)
    # the profile is fixed per rule, so its transform is paid once at setup
    spectrum = np.fft.rfft(c, convolution_length(len(c)))
    spectrum.setflags(write=False)
    return CirculantProfile(rule, table, z, c, spectrum)


def _check_A(A: np.ndarray, s: int) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] != s:
        raise UsageError(f"A must have shape (s={s}, t), got {A.shape}")
    return A


def fast_product(profile: CirculantProfile, A) -> np.ndarray:
    """X A in O(t N log N), rows in the profile ordering."""
    A = _check_A(A, profile.rule.s)
    L = profile.length
    u = np.zeros((L, A.shape[1]))
    np.add.at(u, (-np.asarray(profile.exponents)) % L, A)
    Y = np.empty((L + 1, A.shape[1]))
    Y[0] = 0.0
    Y[1:] = convolve_with_spectrum(profile.spectrum, L, u) if L > 1 else profile.c[0] * u
    return Y


def naive_product(rule: LatticeRule, A, table: FieldTable | None = None) -> np.ndarray:
    """X A by explicit point generation, rows in the same order as fast_product."""
    A = _check_A(A, rule.s)
    if table is None:
        table = build_field_table(rule.modulus)
    order = np.concatenate([[0], np.asarray(table.exp, dtype=np.int64)])
    X = generate_points(rule).points[order]
    return X @ A
