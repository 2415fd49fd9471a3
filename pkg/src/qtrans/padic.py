"""Locally constant measures on Z_p^d at a fixed finite level k.

A level-k measure is a rational mass on each coset of p^k Z_p^d, i.e. a
function on (Z/p^k)^d.  Integer polynomial maps descend to every level, so the
pushforward of such a measure is again computed exactly at level k, and so is
its Fourier transform on the dual grid (p^-k Z / Z)^d, with values in
Q(zeta_{p^k}).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import lcm
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .arith import (
    CyclotomicNumber,
    _cyclo_degree,
    _reduction_table,
    check_prime,
    exact_rank,
    format_rational,
    parse_rational,
    val_p,
)
from .errors import DimensionMismatch, InputError, ScaleOutOfRange, WindowMismatch
from .morphism import PolynomialMorphism

Residue = Tuple[int, ...]

_INT64_SAFE = 1 << 62


@dataclass(frozen=True)
class Window:
    """Coordinate i ranges over p^{scales[i]} Z_p / p^k Z_p."""

    p: int
    k: int
    d: int
    scales: Tuple[int, ...] = ()

    def __post_init__(self):
        check_prime(self.p)
        if self.k < 1:
            raise InputError("level must be >= 1")
        if self.d < 1:
            raise InputError("dimension must be >= 1")
        scales = tuple(self.scales) if self.scales else (0,) * self.d
        if len(scales) != self.d:
            raise InputError("one scale per coordinate")
        for a in scales:
            if not 0 <= a <= self.k:
                raise ScaleOutOfRange(f"scale {a} outside 0..{self.k}")
        object.__setattr__(self, "scales", scales)

    @property
    def modulus(self) -> int:
        return self.p ** self.k

    def contains(self, x: Residue) -> bool:
        return all(v % self.p ** a == 0 for v, a in zip(x, self.scales))

    def same_group(self, other: "Window") -> bool:
        return (self.p, self.k, self.d) == (other.p, other.k, other.d)


class LevelMeasure:
    """Finitely supported rational masses on the cosets of p^k Z_p^d."""

    __slots__ = ("window", "values")

    def __init__(self, window: Window, values: Dict[Residue, Fraction]):
        M = window.modulus
        clean: Dict[Residue, Fraction] = {}
        for x, v in values.items():
            x = tuple(int(c) % M for c in x)
            if len(x) != window.d:
                raise DimensionMismatch(f"residue {x} does not have {window.d} coordinates")
            v = Fraction(v)
            if v:
                if not window.contains(x):
                    raise WindowMismatch(f"residue {x} lies outside the window")
                clean[x] = clean.get(x, Fraction(0)) + v
        self.window = window
        self.values = {x: v for x, v in clean.items() if v}

    # -- basics ----------------------------------------------------------------

    @property
    def p(self):
        return self.window.p

    @property
    def k(self):
        return self.window.k

    @property
    def d(self):
        return self.window.d

    def __eq__(self, other):
        if not isinstance(other, LevelMeasure):
            return NotImplemented
        return self.window.same_group(other.window) and self.values == other.values

    def __repr__(self):
        return f"LevelMeasure(p={self.p}, k={self.k}, d={self.d}, support={len(self.values)})"

    def total_mass(self) -> Fraction:
        return sum(self.values.values(), Fraction(0))

    def support(self) -> frozenset:
        return frozenset(self.values)

    def scale(self, c) -> "LevelMeasure":
        c = Fraction(c)
        return LevelMeasure(self.window, {x: v * c for x, v in self.values.items()})

    def __add__(self, other: "LevelMeasure") -> "LevelMeasure":
        if not self.window.same_group(other.window):
            raise WindowMismatch("measures live on different groups")
        out = dict(self.values)
        for x, v in other.values.items():
            out[x] = out.get(x, Fraction(0)) + v
        w = Window(self.p, self.k, self.d, tuple(min(a, b) for a, b in zip(self.window.scales, other.window.scales)))
        return LevelMeasure(w, out)

    def _int_arrays(self):
        """(points int64 [S x d], integer weights, common denominator)."""
        if not self.values:
            return np.zeros((0, self.d), dtype=np.int64), [], 1
        items = sorted(self.values.items())
        den = 1
        for _, v in items:
            den = lcm(den, v.denominator)
        pts = np.array([x for x, _ in items], dtype=np.int64)
        w = [int(v * den) for _, v in items]
        return pts, w, den

    def dense(self):
        """(array of integer numerators of shape (p^k,)*d, common denominator)."""
        M = self.window.modulus
        pts, w, den = self._int_arrays()
        if sum(abs(x) for x in w) < _INT64_SAFE:
            arr = np.zeros((M,) * self.d, dtype=np.int64)
            if len(w):
                np.add.at(arr, tuple(pts.T), np.array(w, dtype=np.int64))
        else:
            arr = np.zeros((M,) * self.d, dtype=object)
            arr[...] = 0
            for x, v in zip(map(tuple, pts), w):
                arr[x] += v
        return arr, den

    @classmethod
    def from_dense(cls, window: Window, arr, den: int) -> "LevelMeasure":
        idx = np.argwhere(arr != 0)
        vals = {}
        for x in idx:
            x = tuple(int(c) for c in x)
            vals[x] = Fraction(int(arr[x]), den)
        return cls(window, vals)

    # -- JSON ------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "p": self.p,
            "scales": list(self.window.scales),
            "values": {",".join(str(c) for c in x): format_rational(v) for x, v in sorted(self.values.items())},
        }

    @classmethod
    def from_json(cls, data) -> "LevelMeasure":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            w = Window(int(data["p"]), int(data["k"]), int(data["d"]), tuple(data.get("scales", ())))
            vals = {}
            for key, v in data["values"].items():
                x = tuple(int(c) for c in key.replace("(", "").replace(")", "").split(",") if c.strip() != "")
                vals[x] = parse_rational(str(v))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed measure JSON: {exc}") from None
        return cls(w, vals)


# ---------------------------------------------------------------------------
# Constructors


def haar_ball(p: int, k: int, d: int, center: Sequence[int], m: int, mass) -> LevelMeasure:
    """Uniform measure of total ``mass`` on center + p^m Z_p^d."""
    check_prime(p)
    if not 0 <= m <= k:
        raise ScaleOutOfRange(f"ball scale {m} outside 0..{k}")
    center = tuple(int(c) for c in center)
    if len(center) != d:
        raise DimensionMismatch("center has the wrong number of coordinates")
    window = Window(p, k, d)
    mass = Fraction(mass)
    if mass == 0:
        return LevelMeasure(window, {})
    M = p ** k
    step = p ** m
    count = p ** (k - m)
    each = mass / count ** d
    vals = {}
    for offs in product(range(count), repeat=d):
        vals[tuple((c + o * step) % M for c, o in zip(center, offs))] = each
    return LevelMeasure(window, vals)


def haar_mass(p: int, d: int, m: int) -> Fraction:
    """Normalized Haar measure of p^m Z_p^d."""
    return Fraction(1, p ** (m * d))


def delta(p: int, k: int, d: int, at: Sequence[int] = None, mass=1) -> LevelMeasure:
    at = tuple(at) if at is not None else (0,) * d
    return LevelMeasure(Window(p, k, d), {at: Fraction(mass)})


# ---------------------------------------------------------------------------
# Maps


class IntegerPolyMap:
    """Polynomial map Z_p^n -> Z_p^m with integer coefficients."""

    def __init__(self, phi: PolynomialMorphism):
        for c in phi.components:
            for v in c.terms.values():
                if Fraction(v).denominator != 1:
                    raise InputError("map coefficients must be integers")
        self.phi = phi
        self.n = phi.n
        self.m = phi.m
        self._terms = [[(e, int(c)) for e, c in comp.terms.items()] for comp in phi.components]

    @classmethod
    def from_strings(cls, source_vars, components) -> "IntegerPolyMap":
        return cls(PolynomialMorphism.from_strings(source_vars, components))

    def evaluate_mod(self, pts: np.ndarray, M: int) -> np.ndarray:
        """Images of the rows of ``pts`` modulo M (int64, requires M^2 < 2^62)."""
        S = pts.shape[0]
        out = np.zeros((S, self.m), dtype=np.int64)
        if M * M >= _INT64_SAFE:
            raise InputError("modulus too large for vectorized evaluation")
        pts = pts % M
        for j, terms in enumerate(self._terms):
            acc = np.zeros(S, dtype=np.int64)
            for e, c in terms:
                t = np.full(S, c % M, dtype=np.int64)
                for i, k in enumerate(e):
                    for _ in range(k):
                        t = (t * pts[:, i]) % M
                acc = (acc + t) % M
            out[:, j] = acc
        return out


BLOWUP_CHART = ("xy", ("x", "x*y"))
PSI = ("xyzw", ("x+z", "x*y+z*w"))


def blowup_chart() -> IntegerPolyMap:
    return IntegerPolyMap.from_strings(*BLOWUP_CHART)


def psi_map() -> IntegerPolyMap:
    return IntegerPolyMap.from_strings(*PSI)


def pushforward(mu: LevelMeasure, phi: IntegerPolyMap) -> LevelMeasure:
    """Mass transport along phi at the level of mu."""
    if isinstance(phi, PolynomialMorphism):
        phi = IntegerPolyMap(phi)
    if phi.n != mu.d:
        raise DimensionMismatch(f"map has {phi.n} source coordinates, measure has {mu.d}")
    M = mu.window.modulus
    window = Window(mu.p, mu.k, phi.m)
    pts, w, den = mu._int_arrays()
    if not len(w):
        return LevelMeasure(window, {})
    img = phi.evaluate_mod(pts, M)
    flat = np.zeros(len(w), dtype=np.int64)
    for j in range(phi.m):
        flat = flat * M + img[:, j]
    uniq, inv = np.unique(flat, return_inverse=True)
    if sum(abs(x) for x in w) < _INT64_SAFE:
        acc = np.zeros(len(uniq), dtype=np.int64)
        np.add.at(acc, inv, np.array(w, dtype=np.int64))
        sums = [int(a) for a in acc]
    else:
        sums = [0] * len(uniq)
        for i, x in zip(inv, w):
            sums[i] += x
    vals = {}
    for code, s in zip(uniq, sums):
        if s:
            code = int(code)
            coords = []
            for _ in range(phi.m):
                coords.append(code % M)
                code //= M
            vals[tuple(reversed(coords))] = Fraction(s, den)
    return LevelMeasure(window, vals)


def mu_n(p: int, n: int, k: int) -> LevelMeasure:
    """Pushforward along (x, xy) of normalized Haar measure restricted to p^n Z_p^2."""
    return pushforward(haar_ball(p, k, 2, (0, 0), n, haar_mass(p, 2, n)), blowup_chart())


def psi_measure(p: int, n: int, k: int) -> LevelMeasure:
    """Pushforward along psi of normalized Haar measure restricted to p^n Z_p^4."""
    return pushforward(haar_ball(p, k, 4, (0, 0, 0, 0), n, haar_mass(p, 4, n)), psi_map())


# ---------------------------------------------------------------------------
# Group operations


def _require_full(mu: LevelMeasure):
    if any(mu.window.scales):
        raise WindowMismatch("convolution needs measures on the full group (all scales 0)")


def convolve(mu: LevelMeasure, nu: LevelMeasure) -> LevelMeasure:
    """Convolution on (Z/p^k)^d."""
    if not mu.window.same_group(nu.window):
        raise WindowMismatch("measures live on different groups")
    _require_full(mu)
    _require_full(nu)
    if len(mu.values) > len(nu.values):
        mu, nu = nu, mu
    if not mu.values or not nu.values:
        return LevelMeasure(mu.window, {})
    arr, den_b = nu.dense()
    pts, w, den_a = mu._int_arrays()
    bound = max(abs(x) for x in w) * int(np.abs(arr).sum()) if arr.dtype != object else _INT64_SAFE
    if bound >= _INT64_SAFE:
        arr = arr.astype(object)
        out = np.zeros(arr.shape, dtype=object)
        out[...] = 0
    else:
        out = np.zeros(arr.shape, dtype=np.int64)
    axes = tuple(range(mu.d))
    for x, c in zip(map(tuple, pts), w):
        out += c * np.roll(arr, shift=tuple(int(s) for s in x), axis=axes)
    return LevelMeasure.from_dense(mu.window, out, den_a * den_b)


def restrict(mu: LevelMeasure, N: int) -> LevelMeasure:
    """Keep only the cosets inside p^N Z_p^d."""
    if not 0 <= N <= mu.k:
        raise ScaleOutOfRange(f"restriction scale {N} outside 0..{mu.k}")
    q = mu.p ** N
    vals = {x: v for x, v in mu.values.items() if all(c % q == 0 for c in x)}
    w = Window(mu.p, mu.k, mu.d, tuple(max(a, N) for a in mu.window.scales))
    return LevelMeasure(w, vals)


def coarsen(mu: LevelMeasure, k: int) -> LevelMeasure:
    """The same measure seen at a coarser level k."""
    if not 1 <= k <= mu.k:
        raise ScaleOutOfRange(f"level {k} outside 1..{mu.k}")
    M = mu.p ** k
    vals: Dict[Residue, Fraction] = {}
    for x, v in mu.values.items():
        y = tuple(c % M for c in x)
        vals[y] = vals.get(y, Fraction(0)) + v
    return LevelMeasure(Window(mu.p, k, mu.d, tuple(min(a, k) for a in mu.window.scales)), vals)


def refine(mu: LevelMeasure, k: int) -> LevelMeasure:
    """Spread each coset mass uniformly over the level-k subcosets."""
    if k < mu.k:
        raise ScaleOutOfRange("refinement level must not decrease")
    M, Mk = mu.window.modulus, mu.p ** k
    split = (Mk // M) ** mu.d
    vals = {}
    for x, v in mu.values.items():
        for offs in product(range(Mk // M), repeat=mu.d):
            vals[tuple(c + o * M for c, o in zip(x, offs))] = v / split
    return LevelMeasure(Window(mu.p, k, mu.d, mu.window.scales), vals)


# ---------------------------------------------------------------------------
# Fourier transform


def dual_grid(p: int, k: int, d: int) -> List[Residue]:
    """Integer representatives B of the dual points b = B / p^k, lexicographic."""
    return [tuple(b) for b in product(range(p ** k), repeat=d)]


def dual_point_rationals(B: Residue, p: int, k: int) -> Tuple[Fraction, ...]:
    return tuple(Fraction(b, p ** k) for b in B)


def fourier(mu: LevelMeasure, points: Optional[Sequence[Residue]] = None) -> Dict[Residue, CyclotomicNumber]:
    """mu^(b) = sum_x mu(x) zeta^(<B, x> mod p^k) for b = B / p^k, over the dual grid."""
    p, k, d = mu.p, mu.k, mu.d
    M = p ** k
    deg = _cyclo_degree(p, k)
    grid = dual_grid(p, k, d) if points is None else [tuple(int(c) % M for c in B) for B in points]
    pts, w, den = mu._int_arrays()
    out: Dict[Residue, CyclotomicNumber] = {}
    if not len(w):
        zero = CyclotomicNumber.from_rational(p, k, 0)
        return {B: zero for B in grid}
    table = np.array(_reduction_table(p, k), dtype=np.int64)  # M x deg
    use_int = sum(abs(x) for x in w) < _INT64_SAFE // max(1, M)
    S = len(w)
    Bs = np.array(grid, dtype=np.int64).reshape(len(grid), d)
    chunk = max(1, 4_000_000 // max(1, S))
    warr = np.array(w, dtype=np.int64) if use_int else None
    for start in range(0, len(grid), chunk):
        block = Bs[start:start + chunk]
        E = (block @ pts.T) % M  # rows: dual points, cols: support
        if use_int:
            sums = np.zeros((block.shape[0], M), dtype=np.int64)
            rows = np.repeat(np.arange(block.shape[0]), S)
            np.add.at(sums, (rows, E.ravel()), np.tile(warr, block.shape[0]))
            coeffs = sums @ table
            for r in range(block.shape[0]):
                B = tuple(int(c) for c in block[r])
                out[B] = CyclotomicNumber(p, k, (Fraction(int(c), den) for c in coeffs[r]))
        else:
            for r in range(block.shape[0]):
                sums = [0] * M
                for e, x in zip(E[r], w):
                    sums[int(e)] += x
                B = tuple(int(c) for c in block[r])
                coeffs = [0] * deg
                for e, s in enumerate(sums):
                    if s:
                        for j, t in enumerate(table[e]):
                            if t:
                                coeffs[j] += int(t) * s
                out[B] = CyclotomicNumber(p, k, (Fraction(c, den) for c in coeffs))
    return out


def abs_dual(B: int, p: int, k: int) -> Fraction:
    """|B / p^k|_p with the class taken mod Z_p (so 0 for B = 0 mod p^k)."""
    B %= p ** k
    if B == 0:
        return Fraction(0)
    return Fraction(p) ** (k - val_p(B, p))


def closed_form_as_stated(p: int, n: int, a: Fraction, b: Fraction) -> Fraction:
    """p^(-2n)/max(|b|,1) if |a| <= p^n max(|b|,1), else 0 (absolute values of a, b)."""
    mb = max(b, Fraction(1))
    if a <= Fraction(p) ** n * mb:
        return Fraction(1, p ** (2 * n)) / mb
    return Fraction(0)


def closed_form_direct(p: int, n: int, a: Fraction, b: Fraction) -> Fraction:
    """Value of the integral of chi(ax + bxy) over p^n Z_p^2 from first principles.

    The inner integral over y in p^n Z_p is p^-n times the indicator of
    |bx| <= p^n, so x ranges over a ball of radius r = min(p^-n, p^n / |b|) and
    the answer is p^-n * r when |a| r <= 1, else 0.
    """
    P = Fraction(p)
    r = P ** (-n) if b == 0 else min(P ** (-n), P ** n / b)
    if a * r <= 1:
        return P ** (-n) * r
    return Fraction(0)


def fourier_table_vs(mu: LevelMeasure, formula, n: int) -> List[Tuple[Residue, Fraction, Optional[Fraction]]]:
    """(B, formula value, brute-force rational value or None) wherever they disagree."""
    p, k = mu.p, mu.k
    F = fourier(mu)
    bad = []
    for B, val in F.items():
        a = abs_dual(B[0], p, k)
        b = abs_dual(B[1], p, k)
        expected = formula(p, n, a, b)
        got = val.coeffs[0] if not any(val.coeffs[1:]) else None
        if got != expected:
            bad.append((B, expected, got))
    return bad


def fourier_support(mu: LevelMeasure) -> frozenset:
    return frozenset(B for B, v in fourier(mu).items() if not v.is_zero())


def support_formula_as_stated(p: int, k: int, n: int, N: int) -> frozenset:
    """Dual grid points in p^-N Z_p^2 or with v(a) >= n + min(v(b), 0)."""
    out = set()
    for B in dual_grid(p, k, 2):
        a, b = (Fraction(c, p ** k) for c in B)
        va, vb = val_p(a, p), val_p(b, p)
        in_ball = va >= -N and vb >= -N
        if in_ball or va >= n + min(vb, 0):
            out.add(B)
    return frozenset(out)


def support_formula_direct(p: int, k: int, n: int, N: int) -> frozenset:
    """Support of the transform of (mu_n * mu_n) restricted to p^N Z_p^2, from first principles.

    The transform of mu_n is nonnegative with support {v(a) >= min(-n, v(b) + n)}.
    Restricting to p^N Z_p^2 averages its square over translates by p^-N Z_p^2,
    so no cancellation occurs and the support is the sum set, which reduces to
    p^-N Z_p^2 together with {v(a) >= min(-n, min(v(b), -N) + n)}.
    """
    out = set()
    for B in dual_grid(p, k, 2):
        a, b = (Fraction(c, p ** k) for c in B)
        va, vb = val_p(a, p), val_p(b, p)
        if (va >= -N and vb >= -N) or va >= min(-n, min(vb, -N) + n):
            out.add(B)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Germ experiments


def _common_group(measures: Sequence[LevelMeasure]):
    if not measures:
        raise InputError("need at least one measure")
    w = measures[0].window
    for m in measures[1:]:
        if not m.window.same_group(w):
            raise WindowMismatch("measures live on different groups")
    return w


def germ_rank(measures: Sequence[LevelMeasure], N: int) -> int:
    """Rank over Q of the restricted value vectors."""
    _common_group(measures)
    rs = [restrict(m, N) for m in measures]
    keys = sorted(set().union(*(r.values for r in rs)))
    if not keys:
        return 0
    rows = []
    for r in rs:
        den = 1
        for v in r.values.values():
            den = lcm(den, v.denominator)
        rows.append([int(r.values.get(x, 0) * den) for x in keys])
    return exact_rank(rows)


def support_germs(measures: Sequence[LevelMeasure], N: int) -> int:
    """Number of distinct supports after intersecting with p^N Z_p^d."""
    _common_group(measures)
    return len({restrict(m, N).support() for m in measures})


def direction_ball_pushforwards(p: int, k: int, m: Optional[int] = None,
                                y0s: Optional[Iterable[int]] = None) -> List[LevelMeasure]:
    """Pushforwards along (x, xy) of Haar balls of radius p^-m around (0, y0)."""
    if m is None:
        m = k // 2
    if y0s is None:
        y0s = range(p ** m)
    chart = blowup_chart()
    return [pushforward(haar_ball(p, k, 2, (0, y0), m, haar_mass(p, 2, m)), chart) for y0 in y0s]


def convolved_germs(p: int, k: int, N: int, ns: Iterable[int]) -> List[LevelMeasure]:
    """(mu_n * mu_n) restricted to p^N Z_p^2 for each n."""
    out = []
    for n in ns:
        mu = mu_n(p, n, k)
        out.append(restrict(convolve(mu, mu), N))
    return out
