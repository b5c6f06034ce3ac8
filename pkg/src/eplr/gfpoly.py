"""Polynomials over F_b and arithmetic in the residue field F_b[x]/p.

Polynomials are immutable ``GFPoly`` values holding their coefficients in
increasing degree order.  The integer encoding ``sum(c_i * b**i)`` gives the
canonical enumeration order used for every deterministic "smallest" choice
(irreducible modulus, primitive element).

Residues modulo a degree-m polynomial are F_b-vectors of length m.  Every map
used by the lattice constructions (multiplication by a fixed polynomial, the
Laurent digit map) is F_b-linear, so the bulk routines here work on digit
matrices with numpy and never loop over residues in Python.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import UsageError


class FieldError(UsageError):
    """Invalid input to a finite-field routine."""


def _check_prime(b: int) -> None:
    if b < 2 or any(b % d == 0 for d in range(2, int(b**0.5) + 1)):
        raise FieldError(f"base must be a prime, got {b}")


@dataclass(frozen=True)
class GFPoly:
    """A polynomial over F_b; ``coeffs[i]`` is the coefficient of x**i."""

    base: int
    coeffs: tuple[int, ...] = ()

    def __post_init__(self):
        coeffs = tuple(int(c) % self.base for c in self.coeffs)
        while coeffs and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_int(cls, value: int, base: int) -> GFPoly:
        if value < 0:
            raise FieldError("encoding must be nonnegative")
        digits = []
        while value:
            value, r = divmod(value, base)
            digits.append(r)
        return cls(base, tuple(digits))

    @classmethod
    def one(cls, base: int) -> GFPoly:
        return cls(base, (1,))

    @classmethod
    def monomial(cls, base: int, degree: int, coeff: int = 1) -> GFPoly:
        return cls(base, (0,) * degree + (coeff,))

    def to_int(self) -> int:
        value = 0
        for c in reversed(self.coeffs):
            value = value * self.base + c
        return value

    @property
    def degree(self) -> float | int:
        """Degree, with ``-inf`` for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else float("-inf")

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, i: int) -> int:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def lead(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def _same_base(self, other: GFPoly) -> None:
        if not isinstance(other, GFPoly):
            raise TypeError(f"expected GFPoly, got {type(other).__name__}")
        if other.base != self.base:
            raise FieldError(f"mismatched bases {self.base} and {other.base}")

    def __add__(self, other: GFPoly) -> GFPoly:
        self._same_base(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return GFPoly(self.base, tuple(self.coeff(i) + other.coeff(i) for i in range(n)))

    def __neg__(self) -> GFPoly:
        return GFPoly(self.base, tuple(-c for c in self.coeffs))

    def __sub__(self, other: GFPoly) -> GFPoly:
        return self + (-other)

    def __mul__(self, other: GFPoly) -> GFPoly:
        self._same_base(other)
        if self.is_zero() or other.is_zero():
            return GFPoly(self.base)
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, c in enumerate(other.coeffs):
                    out[i + j] += a * c
        return GFPoly(self.base, tuple(out))

    def scale(self, c: int) -> GFPoly:
        return GFPoly(self.base, tuple(c * a for a in self.coeffs))

    def __divmod__(self, other: GFPoly) -> tuple[GFPoly, GFPoly]:
        self._same_base(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        b = self.base
        inv_lead = pow(other.lead(), -1, b)
        rem = list(self.coeffs)
        dq = len(rem) - len(other.coeffs)
        if dq < 0:
            return GFPoly(b), self
        quot = [0] * (dq + 1)
        for shift in range(dq, -1, -1):
            c = rem[shift + len(other.coeffs) - 1] * inv_lead % b
            if c:
                quot[shift] = c
                for i, oc in enumerate(other.coeffs):
                    rem[shift + i] = (rem[shift + i] - c * oc) % b
        return GFPoly(b, tuple(quot)), GFPoly(b, tuple(rem))

    def __mod__(self, other: GFPoly) -> GFPoly:
        return divmod(self, other)[1]

    def __floordiv__(self, other: GFPoly) -> GFPoly:
        return divmod(self, other)[0]

    def monic(self) -> GFPoly:
        if self.is_zero():
            return self
        return self.scale(pow(self.lead(), -1, self.base))

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            mono = "1" if i == 0 else ("x" if i == 1 else f"x^{i}")
            terms.append(mono if c == 1 else (f"{c}" if i == 0 else f"{c}*{mono}"))
        return " + ".join(terms)


def _require_nonzero(p: GFPoly) -> None:
    if p.is_zero():
        raise FieldError("modulus must be nonzero")


def poly_mul_mod(a: GFPoly, c: GFPoly, p: GFPoly) -> GFPoly:
    """Return (a*c) mod p."""
    a._same_base(c)
    a._same_base(p)
    _require_nonzero(p)
    return (a * c) % p


def poly_pow_mod(a: GFPoly, e: int, p: GFPoly) -> GFPoly:
    result = GFPoly.one(a.base) % p
    base = a % p
    while e > 0:
        if e & 1:
            result = (result * base) % p
        base = (base * base) % p
        e >>= 1
    return result


def poly_gcd(a: GFPoly, c: GFPoly) -> GFPoly:
    while not c.is_zero():
        a, c = c, a % c
    return a.monic()


def is_irreducible(p: GFPoly) -> bool:
    """Exact irreducibility test (Ben-Or): gcd(x^(b^i) - x, p) = 1 for i <= m/2."""
    if p.is_zero() or p.degree < 1:
        raise FieldError("irreducibility is defined for degree >= 1")
    m = p.degree
    if m == 1:
        return True
    x = GFPoly.monomial(p.base, 1)
    power = x % p
    for _ in range(m // 2):
        power = poly_pow_mod(power, p.base, p)
        if poly_gcd(p, power - x).degree > 0:
            return False
    return True


def find_irreducible(b: int, m: int) -> GFPoly:
    """Monic irreducible polynomial of degree m with the smallest encoding."""
    _check_prime(b)
    if m < 1:
        raise FieldError("degree must be positive")
    for value in range(b**m, 2 * b**m):
        p = GFPoly.from_int(value, b)
        if is_irreducible(p):
            return p
    raise AssertionError("unreachable: irreducible polynomials exist for every degree")


def tr_m(k: int, b: int, m: int) -> GFPoly:
    """Truncate the base-b digits of k to a polynomial of degree < m."""
    return GFPoly.from_int(k % b**m, b)


def laurent_digits(q: GFPoly, p: GFPoly, m: int) -> tuple[int, ...]:
    """First m digits a_1..a_m of the expansion q/p = sum_i a_i x^-i."""
    q._same_base(p)
    _require_nonzero(p)
    if not q.is_zero() and q.degree >= p.degree:
        raise FieldError("laurent_digits needs deg(q) < deg(p); reduce q mod p first")
    b, n = p.base, p.degree
    inv_lead = pow(p.lead(), -1, b)
    r = list(q.coeffs) + [0] * (n + 1 - len(q.coeffs))
    digits = []
    for _ in range(m):
        r = [0] + r[:n]
        a = r[n] * inv_lead % b
        if a:
            for i, pc in enumerate(p.coeffs):
                r[i] = (r[i] - a * pc) % b
        digits.append(a)
    return tuple(digits)


def v_m(q: GFPoly, p: GFPoly, m: int) -> float:
    digits = laurent_digits(q, p, m)
    return sum(a * q.base ** (m - i) for i, a in enumerate(digits, 1)) / q.base**m


# --- bulk (vectorised) residue arithmetic ------------------------------------


def int_to_digits(values, b: int, m: int) -> np.ndarray:
    """Rows of base-b digits (least significant first) for each integer."""
    values = np.asarray(values, dtype=np.int64)
    out = np.empty(values.shape + (m,), dtype=np.int64)
    v = values.copy()
    for i in range(m):
        out[..., i] = v % b
        v //= b
    return out


def digits_to_int(digits: np.ndarray, b: int) -> np.ndarray:
    m = digits.shape[-1]
    powers = b ** np.arange(m, dtype=np.int64)
    return digits.astype(np.int64) @ powers


def multiplication_matrix(q: GFPoly, p: GFPoly) -> np.ndarray:
    """Matrix M over F_b with coeffs(r*q mod p) = M @ coeffs(r) mod b."""
    m = p.degree
    cols = []
    for i in range(m):
        prod = poly_mul_mod(GFPoly.monomial(p.base, i), q, p)
        cols.append([prod.coeff(j) for j in range(m)])
    return np.array(cols, dtype=np.int64).T.reshape(m, m)


def laurent_matrix(p: GFPoly, m: int) -> np.ndarray:
    """Matrix D with (a_1..a_m) = D @ coeffs(r) mod b for every residue r."""
    n = p.degree
    cols = [laurent_digits(GFPoly.monomial(p.base, i), p, m) for i in range(n)]
    return np.array(cols, dtype=np.int64).T.reshape(m, n)


def scaled_laurent_values(residues: np.ndarray, p: GFPoly, m: int) -> np.ndarray:
    """Integers b^m * v_m(r/p) for an array of residue encodings r."""
    b = p.base
    digs = int_to_digits(residues, b, p.degree)
    a = (digs @ laurent_matrix(p, m).T) % b
    weights = b ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return a @ weights


def mul_mod_encoded(residues: np.ndarray, q: GFPoly, p: GFPoly) -> np.ndarray:
    """Encodings of r*q mod p for an array of residue encodings r."""
    b = p.base
    digs = int_to_digits(residues, b, p.degree)
    return digits_to_int((digs @ multiplication_matrix(q, p).T) % b, b)


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _has_full_order(g: GFPoly, p: GFPoly, order: int) -> bool:
    one = GFPoly.one(p.base)
    if poly_pow_mod(g, order, p) != one:
        return False
    return all(poly_pow_mod(g, order // r, p) != one for r in _prime_factors(order))


@dataclass(frozen=True)
class FieldTable:
    """Discrete log / exponent tables of F_b[x]/p for a primitive element.

    ``exp[z]`` is the encoding of g**z for 0 <= z < b^m - 1, and ``log[r]`` the
    exponent of the residue with encoding r (``log[0] == -1``).
    """

    modulus: GFPoly
    generator: GFPoly
    exp: np.ndarray = field(repr=False)
    log: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return len(self.exp)

    def exp_of(self, z: int) -> GFPoly:
        return GFPoly.from_int(int(self.exp[z % self.order]), self.modulus.base)

    def log_of(self, r: GFPoly) -> int:
        r = r % self.modulus
        if r.is_zero():
            raise FieldError("zero has no discrete logarithm")
        return int(self.log[r.to_int()])

    @cached_property
    def laurent_profile(self) -> np.ndarray:
        """Integers b^m * v_m(g^z / p) for z = 0..b^m-2."""
        return scaled_laurent_values(self.exp, self.modulus, self.modulus.degree)


def _power_table(g: GFPoly, p: GFPoly, order: int, block: int = 256) -> np.ndarray:
    b, m = p.base, p.degree
    mat = multiplication_matrix(g, p)
    block = min(block, order)
    first = np.empty((block, m), dtype=np.int64)
    v = np.zeros(m, dtype=np.int64)
    v[0] = 1
    for z in range(block):
        first[z] = v
        v = (mat @ v) % b
    # rows z + block*k are obtained from the first block by M^(block*k)
    step = np.eye(m, dtype=np.int64)
    for _ in range(block):
        step = (mat @ step) % b
    rows = [first]
    cur = first
    while block * len(rows) < order:
        cur = (cur @ step.T) % b
        rows.append(cur)
    return digits_to_int(np.concatenate(rows)[:order], b)


def build_field_table(p: GFPoly) -> FieldTable:
    """Log/exp tables for the primitive element of smallest encoding."""
    if p.is_zero() or p.degree < 1:
        raise FieldError("modulus must have degree >= 1")
    if not is_irreducible(p):
        raise FieldError(f"modulus {p} is reducible")
    b, m = p.base, p.degree
    order = b**m - 1
    for value in range(1, b**m):
        g = GFPoly.from_int(value, b)
        if _has_full_order(g, p, order):
            break
    else:  # pragma: no cover - the multiplicative group of a field is cyclic
        raise AssertionError("no primitive element found")
    exp = _power_table(g, p, order)
    log = np.full(b**m, -1, dtype=np.int64)
    log[exp] = np.arange(order, dtype=np.int64)
    if np.count_nonzero(log >= 0) != order:
        raise AssertionError("power table is not a permutation of the nonzero residues")
    exp.setflags(write=False)
    log.setflags(write=False)
    return FieldTable(p, g, exp, log)
