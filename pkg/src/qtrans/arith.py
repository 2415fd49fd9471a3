"""Exact arithmetic: rationals, p-adic valuations and prime-power cyclotomic fields.

Integers are Python ints and rationals are :class:`fractions.Fraction`; both are
already canonical (reduced, positive denominator).  This module adds the pieces
the standard library lacks: valuations with a +infinity for zero, the textual
rational format used in every JSON report, and exact arithmetic in Q(zeta_{p^k})
in the power basis.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence, Union

from .errors import InputError, InvalidPrime, LevelMismatch, NotRational

INF = math.inf

RationalLike = Union[int, Fraction]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    i = 3
    while i * i <= n:
        if n % i == 0:
            return False
        i += 2
    return True


def check_prime(p: int) -> int:
    if not isinstance(p, int) or not is_prime(p):
        raise InvalidPrime(f"{p!r} is not a prime")
    return p


def _val_int(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def val_p(r: RationalLike, p: int):
    """p-adic valuation of ``r``; ``math.inf`` for zero.

    >>> val_p(8, 2), val_p(Fraction(1, 9), 3), val_p(0, 5)
    (3, -2, inf)
    """
    check_prime(p)
    r = Fraction(r)
    if r == 0:
        return INF
    return _val_int(abs(r.numerator), p) - _val_int(r.denominator, p)


def abs_p(r: RationalLike, p: int) -> Fraction:
    """p-adic absolute value |r|_p = p^(-v(r)), with |0| = 0."""
    v = val_p(r, p)
    if v == INF:
        return Fraction(0)
    return Fraction(p) ** (-v)


def format_rational(r: RationalLike) -> str:
    r = Fraction(r)
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad rational {text!r}") from exc


def exact_rank(rows: Sequence[Sequence[RationalLike]]) -> int:
    """Rank over Q of a matrix with rational entries (plain Gaussian elimination)."""
    work = [[Fraction(x) for x in row] for row in rows if any(x != 0 for x in row)]
    rank = 0
    ncols = max((len(r) for r in work), default=0)
    col = 0
    while work and col < ncols:
        pivot = next((i for i, r in enumerate(work) if r[col] != 0), None)
        if pivot is None:
            col += 1
            continue
        prow = work.pop(pivot)
        rank += 1
        pv = prow[col]
        nxt = []
        for r in work:
            c = r[col]
            if c != 0:
                f = c / pv
                r = [a - f * b for a, b in zip(r, prow)]
            if any(r):
                nxt.append(r)
        work = nxt
        col += 1
    return rank


# ---------------------------------------------------------------------------
# Cyclotomic numbers


@lru_cache(maxsize=None)
def _cyclo_degree(p: int, k: int) -> int:
    return p ** (k - 1) * (p - 1)


@lru_cache(maxsize=None)
def _reduction_table(p: int, k: int) -> tuple:
    """Row e = power-basis coefficients of zeta^e for 0 <= e < p^k (integers)."""
    deg = _cyclo_degree(p, k)
    step = p ** (k - 1)
    rows = []
    for e in range(p ** k):
        if e < deg:
            row = [0] * deg
            row[e] = 1
        else:
            # zeta^deg = -sum_{j<p-1} zeta^{j*step}; e - deg < step so no recursion
            row = [0] * deg
            base = e - deg
            for j in range(p - 1):
                row[base + j * step] -= 1
        rows.append(tuple(row))
    return tuple(rows)


def reduce_exponent_sums(p: int, k: int, sums: Sequence[RationalLike]) -> tuple:
    """Map sum_e sums[e] * zeta^e (e in 0..p^k-1) to power-basis coefficients."""
    table = _reduction_table(p, k)
    deg = _cyclo_degree(p, k)
    out = [0] * deg
    for e, s in enumerate(sums):
        if s:
            for j, t in enumerate(table[e]):
                if t:
                    out[j] += t * s
    return tuple(out)


class CyclotomicNumber:
    """Element of Q(zeta_{p^k}) stored in the power basis 1, zeta, ..., zeta^{D-1}.

    ``D = p^{k-1}(p-1)`` and ``zeta = exp(2*pi*i/p^k)``.
    """

    __slots__ = ("p", "k", "coeffs")

    def __init__(self, p: int, k: int, coeffs: Iterable[RationalLike]):
        check_prime(p)
        if k < 1:
            raise InputError("cyclotomic level must be >= 1")
        coeffs = tuple(Fraction(c) for c in coeffs)
        deg = _cyclo_degree(p, k)
        if len(coeffs) != deg:
            raise InputError(f"expected {deg} coefficients, got {len(coeffs)}")
        self.p = p
        self.k = k
        self.coeffs = coeffs

    @classmethod
    def from_rational(cls, p: int, k: int, r: RationalLike) -> "CyclotomicNumber":
        deg = _cyclo_degree(p, k)
        return cls(p, k, (Fraction(r),) + (Fraction(0),) * (deg - 1))

    @classmethod
    def zeta_power(cls, p: int, k: int, e: int = 1) -> "CyclotomicNumber":
        sums = [0] * p ** k
        sums[e % p ** k] = 1
        return cls(p, k, reduce_exponent_sums(p, k, sums))

    @classmethod
    def from_exponent_sums(cls, p: int, k: int, sums: Sequence[RationalLike]) -> "CyclotomicNumber":
        if len(sums) != p ** k:
            raise InputError("need one entry per exponent class mod p^k")
        return cls(p, k, reduce_exponent_sums(p, k, sums))

    def _check(self, other: "CyclotomicNumber") -> None:
        if (self.p, self.k) != (other.p, other.k):
            raise LevelMismatch(f"Q(zeta_{self.p}^{self.k}) vs Q(zeta_{other.p}^{other.k})")

    def _coerce(self, other) -> "CyclotomicNumber":
        if isinstance(other, CyclotomicNumber):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return CyclotomicNumber.from_rational(self.p, self.k, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CyclotomicNumber(self.p, self.k, (a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicNumber(self.p, self.k, (-a for a in self.coeffs))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CyclotomicNumber(self.p, self.k, (a * other for a in self.coeffs))
        return cyclo_mul(self, other)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CyclotomicNumber.from_rational(self.p, self.k, other)
        if not isinstance(other, CyclotomicNumber):
            return NotImplemented
        return (self.p, self.k, self.coeffs) == (other.p, other.k, other.coeffs)

    def __hash__(self):
        return hash((self.p, self.k, self.coeffs))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def to_complex(self) -> complex:
        z = cmath.exp(2j * cmath.pi / self.p ** self.k)
        return sum(float(c) * z ** j for j, c in enumerate(self.coeffs))

    def __repr__(self):
        return f"CyclotomicNumber(p={self.p}, k={self.k}, coeffs={[format_rational(c) for c in self.coeffs]})"


def cyclo_mul(a: CyclotomicNumber, b: CyclotomicNumber) -> CyclotomicNumber:
    a._check(b)
    n = a.p ** a.k
    # product of two basis expansions has degree < 2D <= 2 p^k; fold exponents mod p^k
    sums = [Fraction(0)] * n
    for i, x in enumerate(a.coeffs):
        if x:
            for j, y in enumerate(b.coeffs):
                if y:
                    sums[(i + j) % n] += x * y
    return CyclotomicNumber(a.p, a.k, reduce_exponent_sums(a.p, a.k, sums))


def cyclo_as_rational(a: CyclotomicNumber) -> Fraction:
    if any(a.coeffs[1:]):
        raise NotRational(f"{a!r} has nonzero irrational part")
    return a.coeffs[0]
