"""Brute-force point counts over prime fields, used as an independent oracle.

Nothing here touches Groebner bases: an ideal is reduced mod q and every point
of F_q^N is evaluated.  The innermost coordinates form a numpy grid whose
monomial vectors are computed once; the outer coordinates are looped over.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .arith import check_prime
from .errors import BudgetExceeded, InputError
from .groebner import Ideal
from .poly import Polynomial, reduce_mod_p

DEFAULT_BUDGET = 50_000_000
DEFAULT_PRIMES = (5, 7, 11)
SLOPE_TOLERANCE = 0.35
RESIDUAL_TOLERANCE = 2.0
_CHUNK = 1 << 18


@dataclass(frozen=True)
class PointCount:
    q: int
    ambient: int
    count: int

    def to_json(self) -> dict:
        return {"ambient": self.ambient, "count": self.count, "q": self.q}


@dataclass
class DimEstimate:
    estimate: int
    counts: List[PointCount]
    consistent: bool
    slope: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "consistent": self.consistent,
            "counts": [c.to_json() for c in self.counts],
            "estimate": self.estimate,
            "slope": None if self.slope is None else round(self.slope, 6),
        }


class _Evaluator:
    """Evaluates a list of polynomials mod q over all of F_q^N, block by block."""

    def __init__(self, polys: Sequence[Polynomial], q: int, nvars: int):
        self.q = q
        self.n = nvars
        inner = 0
        while inner < nvars and q ** (inner + 1) <= _CHUNK:
            inner += 1
        self.inner = inner
        self.outer = nvars - inner
        size = q ** inner
        # grid of the inner coordinates, last coordinate fastest
        axes = np.indices((q,) * inner).reshape(inner, size).astype(np.int64) if inner else np.zeros((0, 1), np.int64)
        self.size = size if inner else 1
        self.axes = axes
        self.polys = []
        cache: Dict[tuple, np.ndarray] = {}
        for f in polys:
            groups: Dict[tuple, List[Tuple[tuple, int]]] = {}
            for e, c in f.terms.items():
                groups.setdefault(e[self.outer:], []).append((e[:self.outer], int(c) % q))
            for ie in groups:
                if ie not in cache:
                    cache[ie] = self._inner_monomial(ie)
            self.polys.append(groups)
        self.cache = cache

    def _inner_monomial(self, ie: tuple) -> np.ndarray:
        q = self.q
        v = np.ones(self.size, dtype=np.int64)
        for i, k in enumerate(ie):
            if k:
                p = np.ones(self.size, dtype=np.int64)
                base = self.axes[i]
                for _ in range(k):
                    p = (p * base) % q
                v = (v * p) % q
        return v

    def blocks(self):
        """Yield (prefix, boolean mask over the inner grid of common zeros)."""
        q = self.q
        for prefix in itertools.product(range(q), repeat=self.outer):
            mask = np.ones(self.size, dtype=bool)
            for groups in self.polys:
                val = np.zeros(self.size, dtype=np.int64)
                for ie, terms in groups.items():
                    s = 0
                    for oe, c in terms:
                        m = c
                        for x, k in zip(prefix, oe):
                            if k:
                                m = m * pow(x, k, q) % q
                        s += m
                    s %= q
                    if s:
                        val = (val + s * self.cache[ie]) % q
                mask &= val == 0
                if not mask.any():
                    break
            yield prefix, mask

    def point(self, prefix, index: int) -> Tuple[int, ...]:
        inner = tuple(int(a[index]) for a in self.axes) if self.inner else ()
        return tuple(prefix) + inner


def _reduced(I: Ideal, q: int) -> List[Polynomial]:
    return [reduce_mod_p(g, q) for g in I.gens]


def _check_budget(q: int, n: int, budget: int):
    if q ** n > budget:
        raise BudgetExceeded(f"{q}^{n} points exceed the oracle budget {budget}")


def count_points(I: Ideal, q: int, budget: int = DEFAULT_BUDGET) -> PointCount:
    """Exact number of common zeros of I in F_q^N."""
    check_prime(q)
    n = I.ring.nvars
    _check_budget(q, n, budget)
    polys = _reduced(I, q)
    if any(f.is_constant() and not f.is_zero() for f in polys):
        return PointCount(q, n, 0)
    ev = _Evaluator([f for f in polys if not f.is_zero()], q, n)
    total = 0
    for _, mask in ev.blocks():
        total += int(mask.sum())
    return PointCount(q, n, total)


def feasible_primes(n: int, primes: Sequence[int] = DEFAULT_PRIMES, budget: int = DEFAULT_BUDGET) -> List[int]:
    return [q for q in primes if q ** n <= budget]


def estimate_dimension(I: Ideal, primes: Sequence[int] = DEFAULT_PRIMES,
                       budget: int = DEFAULT_BUDGET, *, strict: bool = False) -> DimEstimate:
    """Dimension guess from the growth of point counts with q.

    The estimate is the integer fit of ``_integer_fit``; the log-log slope is
    reported alongside.  The result is flagged consistent when either the slope
    rounds cleanly or the counts sit inside the expected error window.

    Primes whose enumeration exceeds the budget are skipped unless ``strict``;
    at least two must remain.
    """
    n = I.ring.nvars
    for q in primes:
        check_prime(q)
    usable = list(primes) if strict else feasible_primes(n, primes, budget)
    if len(usable) < 2:
        raise BudgetExceeded(f"fewer than two of the primes {list(primes)} fit the budget for {n} variables")
    counts = [count_points(I, q, budget) for q in usable]
    values = [c.count for c in counts]
    if all(v == 0 for v in values):
        return DimEstimate(-1, counts, True, None)
    if any(v == 0 for v in values):
        return DimEstimate(0, counts, False, None)
    slope = slope_of(list(zip(usable, values)))
    est, score = _integer_fit(usable, values, n)
    consistent = abs(slope - est) <= SLOPE_TOLERANCE or score <= RESIDUAL_TOLERANCE
    return DimEstimate(est, counts, consistent, slope)


def _residual(qs: Sequence[int], counts: Sequence[int], d: int, c: int) -> float:
    return max(abs(v - c * q ** d) / q ** (d - 0.5) for q, v in zip(qs, counts))


def _integer_fit(qs: Sequence[int], counts: Sequence[int], n: int) -> Tuple[int, float]:
    """(d, score) for the best fit count ~ c q^d with c a positive integer.

    The leading coefficient counts top-dimensional components defined over F_q,
    and the error term is O(q^(d - 1/2)), so each d is scored by the largest
    deviation in units of q^(d - 1/2).  A free log-log slope is dragged off by
    lower order terms at small q; pinning c to an integer is much more stable.
    """
    best = None
    for d in range(n + 1):
        ratios = [v / q ** d for q, v in zip(qs, counts)]
        lo, hi = max(1, math.floor(min(ratios))), max(1, math.ceil(max(ratios)))
        score = min(_residual(qs, counts, d, c) for c in range(lo, hi + 1))
        if best is None or score < best[1] - 1e-12:
            best = (d, score)
    return best


def sample_nonempty(closed: Ideal, excluded: Ideal, primes: Sequence[int] = (3, 5, 7),
                    budget: int = DEFAULT_BUDGET):
    """A point (q, coordinates) of V(closed) minus V(excluded), or None for unknown."""
    if closed.ring != excluded.ring:
        raise InputError("ideals live in different rings")
    n = closed.ring.nvars
    for q in primes:
        check_prime(q)
        _check_budget(q, n, budget)
        cl = [f for f in _reduced(closed, q) if not f.is_zero()]
        ex = _reduced(excluded, q)
        if any(f.is_constant() for f in cl):
            continue
        ex = [f for f in ex if not f.is_zero()]
        if not ex:
            continue  # V(excluded) is everything
        ev = _Evaluator(cl, q, n)
        for prefix, mask in ev.blocks():
            for idx in np.flatnonzero(mask):
                pt = ev.point(prefix, int(idx))
                if any(f.evaluate(pt) != 0 for f in ex):
                    return q, pt
    return None


def slope_of(counts: Sequence[Tuple[int, int]]) -> float:
    """Least-squares slope of log(count) against log(q) for (q, count) pairs."""
    xs = [math.log(q) for q, _ in counts]
    ys = [math.log(c) for _, c in counts]
    return float(np.polyfit(xs, ys, 1)[0])
