"""Richardson extrapolation over geometric sequences of rule sizes b^n."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import UsageError


def richardson_coeffs(b: int, tau: int) -> tuple[Fraction, ...]:
    """Exact coefficients a_1..a_tau combining I_n, I_{n-1}, ..., I_{n-tau+1}.

    a_nu = prod_{j<nu} (-1/(b^j - 1)) * prod_{j<=tau-nu} b^j/(b^j - 1).
    """
    if b < 2 or tau < 1:
        raise UsageError(f"need b >= 2 and tau >= 1, got b={b}, tau={tau}")
    out = []
    for nu in range(1, tau + 1):
        a = Fraction(1)
        for j in range(1, nu):
            a *= Fraction(-1, b**j - 1)
        for j in range(1, tau - nu + 1):
            a *= Fraction(b**j, b**j - 1)
        out.append(a)
    return tuple(out)


@dataclass(frozen=True)
class ExtrapolationScheme:
    base: int
    order: int

    @property
    def coeffs(self) -> tuple[Fraction, ...]:
        return richardson_coeffs(self.base, self.order)

    @property
    def float_coeffs(self) -> tuple[float, ...]:
        return tuple(float(a) for a in self.coeffs)

    @property
    def inflation(self) -> float:
        """alpha * |a_1|, the factor by which the error constant grows."""
        return self.order * abs(float(self.coeffs[0]))

    def combine(self, values: Sequence) -> float:
        """sum_tau a_tau * values[tau-1], with values ordered largest rule first."""
        if len(values) != self.order:
            raise UsageError(f"expected {self.order} values, got {len(values)}")
        return sum(a * v for a, v in zip(self.coeffs, values))


def extrapolate_chain(values: Sequence, b: int, alpha: int):
    """I^(alpha)_m from I^(1)_{m-alpha+1}, ..., I^(1)_m (smallest rule first).

    Runs the triangular recursion
        I^(t+1)_n = (b^t I^(t)_n - I^(t)_{n-1}) / (b^t - 1).
    Works on floats or Fractions alike.
    """
    if alpha < 1 or b < 2:
        raise UsageError("need alpha >= 1 and b >= 2")
    if len(values) != alpha:
        raise UsageError(f"expected {alpha} values, got {len(values)}")
    col = list(values)
    for t in range(1, alpha):
        bt = b**t
        col = [(bt * col[i + 1] - col[i]) / (bt - 1) for i in range(len(col) - 1)]
    return col[0]
