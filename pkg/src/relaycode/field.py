"""Arithmetic in GF(2^m) backed by log/antilog tables."""

from __future__ import annotations

from functools import lru_cache

from .errors import ZeroInverse

MAX_EXPONENT = 16

# Conway-style primitive polynomials (bitmask including the x^m term).
DEFAULT_POLYNOMIALS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1002D,
}

# Full product tables are only materialized up to this exponent (2^16 entries).
_FULL_TABLE_MAX_EXPONENT = 8


def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) polynomials."""
    result = 0
    while b:
        if b & 1:
            result ^= a
        a <<= 1
        b >>= 1
    return result


def poly_mod(a: int, modulus: int) -> int:
    """Remainder of GF(2) polynomial ``a`` divided by ``modulus``."""
    degree = modulus.bit_length() - 1
    while a.bit_length() - 1 >= degree:
        a ^= modulus << (a.bit_length() - 1 - degree)
    return a


def is_irreducible(poly: int) -> bool:
    """Exhaustive trial division by every polynomial of degree <= m/2."""
    m = poly.bit_length() - 1
    if m < 1:
        return False
    for divisor in range(2, 1 << (m // 2 + 1)):
        if poly_mod(poly, divisor) == 0:
            return False
    return True


class FieldSpec:
    """The field GF(2^m) defined by an irreducible reduction polynomial.

    Tables are built eagerly and never mutated afterwards, so one instance
    can be shared freely between threads.

    >>> gf = FieldSpec(4)
    >>> gf.mul(0x2, 0x8)
    3
    >>> gf.inv(0x2)
    9
    """

    def __init__(self, m: int = 4, reduction_polynomial: int | None = None):
        if not 1 <= m <= MAX_EXPONENT:
            raise ValueError(f"field exponent must be in [1, {MAX_EXPONENT}], got {m}")
        if reduction_polynomial is None:
            reduction_polynomial = DEFAULT_POLYNOMIALS[m]
        if reduction_polynomial.bit_length() - 1 != m:
            raise ValueError(
                f"reduction polynomial {reduction_polynomial:#x} does not have degree {m}"
            )
        if not is_irreducible(reduction_polynomial):
            raise ValueError(f"reduction polynomial {reduction_polynomial:#x} is reducible")
        self.m = m
        self.reduction_polynomial = reduction_polynomial
        self.order = 1 << m
        self._build_tables()

    def _build_tables(self):
        n = self.order - 1
        # x is not necessarily primitive for an arbitrary irreducible polynomial,
        # so search for a generator of the multiplicative group.
        for g in range(2, self.order) if n > 1 else [1]:
            exp = [0] * (2 * n)
            x = 1
            seen = set()
            for e in range(n):
                if x in seen:
                    break
                seen.add(x)
                exp[e] = x
                x = poly_mod(clmul(x, g), self.reduction_polynomial)
            if len(seen) == n:
                break
        self.generator = g
        for e in range(n, 2 * n):
            exp[e] = exp[e - n]
        log = [0] * self.order
        for e in range(n):
            log[exp[e]] = e
        self.exp_table = tuple(exp)
        self.log_table = tuple(log)
        self.inv_table = (0,) + tuple(exp[(n - log[a]) % n] for a in range(1, self.order))
        if self.m <= _FULL_TABLE_MAX_EXPONENT:
            self.mul_table = tuple(
                tuple(self._log_mul(a, b) for b in range(self.order)) for a in range(self.order)
            )
        else:
            self.mul_table = None

    def _log_mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp_table[self.log_table[a] + self.log_table[b]]

    def __repr__(self):
        return f"FieldSpec(m={self.m}, reduction_polynomial={self.reduction_polynomial:#x})"

    def __eq__(self, other):
        if not isinstance(other, FieldSpec):
            return NotImplemented
        return (self.m, self.reduction_polynomial) == (other.m, other.reduction_polynomial)

    def __hash__(self):
        return hash((self.m, self.reduction_polynomial))

    def check(self, a: int) -> int:
        if not 0 <= a < self.order:
            raise ValueError(f"{a} is not an element of GF(2^{self.m})")
        return a

    @staticmethod
    def add(a: int, b: int) -> int:
        return a ^ b

    def mul(self, a: int, b: int) -> int:
        return self._log_mul(a, b)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroInverse("zero has no multiplicative inverse")
        return self.inv_table[a]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def scale(self, c: int, row):
        """Return ``c * row`` element-wise."""
        if self.mul_table is not None:
            mc = self.mul_table[c]
            return [mc[x] for x in row]
        return [self._log_mul(c, x) for x in row]

    def axpy(self, c: int, x, y):
        """Return ``y + c * x`` element-wise."""
        if self.mul_table is not None:
            mc = self.mul_table[c]
            return [b ^ mc[a] for a, b in zip(x, y)]
        return [b ^ self._log_mul(c, a) for a, b in zip(x, y)]


@lru_cache(maxsize=None)
def get_field(m: int = 4, reduction_polynomial: int | None = None) -> FieldSpec:
    """Cached constructor; tables for a given field are built once per process."""
    return FieldSpec(m, reduction_polynomial)


DEFAULT_FIELD = get_field(4)


def gf_add(a: int, b: int, field: FieldSpec = DEFAULT_FIELD) -> int:
    field.check(a)
    field.check(b)
    return a ^ b


def gf_mul(a: int, b: int, field: FieldSpec = DEFAULT_FIELD) -> int:
    field.check(a)
    field.check(b)
    return field.mul(a, b)


def gf_inv(a: int, field: FieldSpec = DEFAULT_FIELD) -> int:
    field.check(a)
    return field.inv(a)
