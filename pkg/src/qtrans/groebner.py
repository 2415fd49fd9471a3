"""Groebner bases over Q for ideals and submodules of free modules.

The engine is plain Buchberger with the Gebauer-Moeller criteria and the
normal selection strategy.  Internally a polynomial is a dict ``monomial ->
coefficient``; for a submodule of R^r a monomial carries its position in front
of the exponent vector and is ordered position-over-term.

Everything above the engine (membership, elimination, intersection,
saturation, dimension, syzygies) is a thin reduction to one Groebner basis.
"""

from __future__ import annotations

import contextvars
import heapq
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import InputError, ResourceLimit
from .poly import GREVLEX, MonomialOrder, Polynomial, PolyRing, block_order

try:  # gmpy2 rationals are several times faster than Fraction in the inner loop
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction


def _to_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    return Fraction(int(c.numerator), int(c.denominator))


# ---------------------------------------------------------------------------
# Resource caps


@dataclass(frozen=True)
class Limits:
    max_basis: int = 4000
    max_degree: int = 60
    max_pairs: int = 2_000_000


_LIMITS: contextvars.ContextVar = contextvars.ContextVar("groebner_limits", default=Limits())


def get_limits() -> Limits:
    return _LIMITS.get()


@contextmanager
def resource_limits(**kwargs):
    """Temporarily override the caps, e.g. ``with resource_limits(max_degree=10):``."""
    token = _LIMITS.set(Limits(**{**get_limits().__dict__, **kwargs}))
    try:
        yield get_limits()
    finally:
        _LIMITS.reset(token)


# ---------------------------------------------------------------------------
# Engine


class _Engine:
    """Buchberger over dict polynomials; ``pl`` is 1 for module elements, else 0."""

    def __init__(self, order: MonomialOrder, module: bool):
        self.pl = 1 if module else 0
        ok = order.key_function()
        if module:
            def key(m):
                return (-m[0],) + ok(m[1:])
        else:
            key = ok
        self.key = lru_cache(maxsize=None)(key)
        self.nkey = lru_cache(maxsize=None)(lambda m: tuple(-x for x in self.key(m)))
        self.limits = get_limits()

    # monomial helpers
    def divides(self, a, b) -> bool:
        if self.pl and a[0] != b[0]:
            return False
        for x, y in zip(a, b):
            if x > y:
                return False
        return True

    def lcm(self, a, b):
        if self.pl:
            if a[0] != b[0]:
                return None
            return (a[0],) + tuple(max(x, y) for x, y in zip(a[1:], b[1:]))
        return tuple(max(x, y) for x, y in zip(a, b))

    def quotient(self, a, b):
        """a / b as a ring exponent (b divides a)."""
        pl = self.pl
        return tuple(x - y for x, y in zip(a[pl:], b[pl:]))

    def mulmon(self, m, q):
        pl = self.pl
        return m[:pl] + tuple(x + y for x, y in zip(m[pl:], q))

    def disjoint(self, a, b) -> bool:
        if self.pl:
            return False  # product criterion is unsound for modules
        return all(not (x and y) for x, y in zip(a, b))

    def degree(self, m) -> int:
        return sum(m[self.pl:])

    def lead(self, f):
        return max(f, key=self.key)

    def monic(self, f):
        lm = self.lead(f)
        inv = 1 / f[lm]
        return lm, {m: c * inv for m, c in f.items()}

    def reduce(self, f, G, full=True):
        """Remainder of f by G = [(lm, poly)], monic polys; full reduces tails too."""
        f = dict(f)
        nkey = self.nkey
        heap = [(nkey(m), m) for m in f]
        heapq.heapify(heap)
        rem = {}
        divides = self.divides
        while heap:
            _, m = heapq.heappop(heap)
            c = f.get(m)
            if c is None:
                continue
            for lmg, g in G:
                if divides(lmg, m):
                    break
            else:
                if not full:
                    return f
                rem[m] = c
                del f[m]
                continue
            q = self.quotient(m, lmg)
            del f[m]
            for gm, gc in g.items():
                if gm == lmg:
                    continue
                nm = self.mulmon(gm, q)
                v = f.get(nm)
                if v is None:
                    f[nm] = -c * gc
                    heapq.heappush(heap, (nkey(nm), nm))
                else:
                    v = v - c * gc
                    if v:
                        f[nm] = v
                    else:
                        del f[nm]
        return rem

    def spoly(self, a, b, L):
        lma, fa = a
        lmb, fb = b
        qa = self.quotient(L, lma)
        qb = self.quotient(L, lmb)
        out = {}
        for m, c in fa.items():
            out[self.mulmon(m, qa)] = c
        for m, c in fb.items():
            nm = self.mulmon(m, qb)
            v = out.get(nm, 0) - c
            if v:
                out[nm] = v
            else:
                out.pop(nm, None)
        return out

    def run(self, F: List[dict]) -> List[Tuple[tuple, dict]]:
        polys: List[Tuple[tuple, dict]] = []
        G: List[int] = []
        pairs: Dict[Tuple[int, int], tuple] = {}  # active pair -> lcm
        heap: list = []
        lim = self.limits

        def insert(h):
            lm, h = self.monic(h)
            if self.degree(lm) > lim.max_degree:
                raise ResourceLimit(f"Groebner basis degree exceeded {lim.max_degree}")
            idx = len(polys)
            polys.append((lm, h))
            if len(polys) > lim.max_basis:
                raise ResourceLimit(f"Groebner basis size exceeded {lim.max_basis}")
            self._update(polys, G, pairs, heap, idx)
            return lm

        for f in F:
            h = self.reduce(f, [polys[i] for i in G])
            if h:
                lm = insert(h)
                if not any(lm[self.pl:]) and not self.pl:
                    return [polys[-1]]
        npairs = 0
        while heap:
            _, i, j = heapq.heappop(heap)
            L = pairs.pop((i, j), None)
            if L is None:
                continue
            npairs += 1
            if npairs > lim.max_pairs:
                raise ResourceLimit(f"more than {lim.max_pairs} S-pairs")
            s = self.spoly(polys[i], polys[j], L)
            if not s:
                continue
            h = self.reduce(s, [polys[k] for k in G])
            if h:
                lm = insert(h)
                if not self.pl and not any(lm):
                    return [polys[-1]]
        return self._interreduce([polys[i] for i in G])

    def _update(self, polys, G, pairs, heap, new):
        lmh = polys[new][0]
        cands = []
        for g in G:
            L = self.lcm(lmh, polys[g][0])
            if L is not None:
                cands.append((g, L))
        # Gebauer-Moeller criterion M and F on the new pairs
        kept = []
        for idx, (g, L) in enumerate(cands):
            if self.disjoint(lmh, polys[g][0]):
                kept.append((g, L))
                continue
            dominated = False
            for g2, L2 in cands[idx + 1:]:
                if self.divides(L2, L):
                    dominated = True
                    break
            if not dominated:
                for g2, L2 in kept:
                    if self.divides(L2, L):
                        dominated = True
                        break
            if not dominated:
                kept.append((g, L))
        new_pairs = [(g, L) for g, L in kept if not self.disjoint(lmh, polys[g][0])]
        # criterion B on old pairs
        for (i, j), L in list(pairs.items()):
            if self.divides(lmh, L):
                li = self.lcm(polys[i][0], lmh)
                lj = self.lcm(polys[j][0], lmh)
                if li != L and lj != L:
                    del pairs[(i, j)]
        for g, L in new_pairs:
            pairs[(g, new)] = L
            heapq.heappush(heap, (self.key(L), g, new))
        G[:] = [g for g in G if not self.divides(lmh, polys[g][0])] + [new]

    def _interreduce(self, basis):
        basis = [b for b in basis if not any(
            o is not b and self.divides(o[0], b[0]) and (o[0] != b[0] or id(o) < id(b)) for o in basis)]
        out = []
        for i, (lm, f) in enumerate(basis):
            others = basis[:i] + basis[i + 1:]
            r = self.reduce(f, others)
            out.append(self.monic(r))
        out.sort(key=lambda t: self.key(t[0]))
        return out


def _poly_to_dict(f: Polynomial) -> dict:
    return {e: _Q(c.numerator, c.denominator) for e, c in f.terms.items()}


def _dict_to_poly(ring: PolyRing, d: dict) -> Polynomial:
    return Polynomial(ring, {e: _to_fraction(c) for e, c in d.items()}, _clean=True)


def _check_ring(ring: PolyRing):
    if ring.modulus is not None:
        raise InputError("the Groebner engine works over Q only")


# ---------------------------------------------------------------------------
# Ideals and bases


class Ideal:
    """Ideal of a polynomial ring over Q given by generators (zeros dropped)."""

    __slots__ = ("ring", "gens")

    def __init__(self, ring: PolyRing, gens: Iterable[Polynomial] = ()):
        gens = tuple(g for g in gens if not g.is_zero())
        for g in gens:
            if g.ring != ring:
                raise InputError("generator from a different ring")
        self.ring = ring
        self.gens = gens

    @classmethod
    def from_strings(cls, ring: PolyRing, texts: Iterable[str]) -> "Ideal":
        return cls(ring, [ring.parse(t) for t in texts])

    def __repr__(self):
        return "Ideal([" + ", ".join(str(g) for g in self.gens) + "])"

    def __add__(self, other: "Ideal") -> "Ideal":
        if isinstance(other, Polynomial):
            other = Ideal(self.ring, [other])
        return Ideal(self.ring, self.gens + other.gens)

    def __mul__(self, other: "Ideal") -> "Ideal":
        return Ideal(self.ring, [a * b for a in self.gens for b in other.gens])

    def is_zero(self) -> bool:
        return not self.gens

    def groebner(self, order: MonomialOrder = GREVLEX) -> "GroebnerBasis":
        return groebner_basis(self, order)

    def contains(self, f: Polynomial) -> bool:
        return normal_form(f, self.groebner()).is_zero()

    def is_unit(self) -> bool:
        return self.groebner().is_unit()

    def dimension(self) -> int:
        return krull_dimension(self)

    def same_as(self, other: "Ideal") -> bool:
        return self.groebner().polys == other.groebner().polys

    def to_json(self) -> List[str]:
        return [str(g) for g in self.gens]

    def change_ring(self, ring: PolyRing) -> "Ideal":
        return Ideal(ring, [g.change_ring(ring) for g in self.gens])


@dataclass(frozen=True)
class GroebnerBasis:
    ring: PolyRing
    order: MonomialOrder
    polys: Tuple[Polynomial, ...]
    reduced: bool = True

    def is_unit(self) -> bool:
        return len(self.polys) == 1 and self.polys[0].is_constant()

    def leading_monomials(self) -> List[tuple]:
        return [p.leading_term(self.order)[0] for p in self.polys]

    def ideal(self) -> Ideal:
        return Ideal(self.ring, self.polys)

    def normal_form(self, f: Polynomial) -> Polynomial:
        return normal_form(f, self)

    def to_json(self) -> List[str]:
        return [str(p) for p in self.polys]


@lru_cache(maxsize=1024)
def _cached_gb(ring: PolyRing, gens: Tuple[Polynomial, ...], order: MonomialOrder) -> Tuple[Polynomial, ...]:
    eng = _Engine(order, module=False)
    out = eng.run([_poly_to_dict(g) for g in gens])
    return tuple(_dict_to_poly(ring, f) for _, f in out)


def groebner_basis(I: Ideal, order: MonomialOrder = GREVLEX) -> GroebnerBasis:
    """Reduced monic Groebner basis, sorted by increasing leading monomial."""
    _check_ring(I.ring)
    gens = tuple(sorted(set(g.monic() for g in I.gens), key=str))
    return GroebnerBasis(I.ring, order, _cached_gb(I.ring, gens, order))


def normal_form(f: Polynomial, G: GroebnerBasis) -> Polynomial:
    if f.ring != G.ring:
        raise InputError("polynomial and basis live in different rings")
    eng = _Engine(G.order, module=False)
    basis = []
    for p in G.polys:
        d = _poly_to_dict(p)
        basis.append((eng.lead(d), d))
    return _dict_to_poly(G.ring, eng.reduce(_poly_to_dict(f), basis))


def buchberger_criterion_holds(G: GroebnerBasis) -> bool:
    """Check that every S-polynomial of the basis reduces to zero."""
    eng = _Engine(G.order, module=False)
    basis = []
    for p in G.polys:
        d = _poly_to_dict(p)
        basis.append(eng.monic(d))
    for a, b in combinations(basis, 2):
        L = eng.lcm(a[0], b[0])
        if eng.reduce(eng.spoly(a, b, L), basis):
            return False
    return True


# ---------------------------------------------------------------------------
# Derived ideal operations


def _reorder(I: Ideal, first: Sequence[str], second: Sequence[str]):
    ring2 = PolyRing(tuple(first) + tuple(second))
    return ring2, Ideal(ring2, [g.change_ring(ring2) for g in I.gens])


def elimination(I: Ideal, keep: Iterable[str], *, subring: bool = False) -> Ideal:
    """Generators of I intersected with Q[keep].

    The result lives in the ring of ``I`` unless ``subring`` is set, in which case
    it lives in the polynomial ring on ``keep`` (in the order of ``I.ring``).
    """
    keep = set(keep)
    for k in keep:
        I.ring.index(k)
    kept = [n for n in I.ring.names if n in keep]
    gone = [n for n in I.ring.names if n not in keep]
    target = PolyRing(tuple(kept)) if subring else I.ring
    if not gone:
        return Ideal(target, [g.change_ring(target) for g in I.gens])
    ring2, J = _reorder(I, gone, kept)
    G = groebner_basis(J, block_order([len(gone), len(kept)]))
    nz = len(gone)
    out = [p for p in G.polys if all(not any(e[:nz]) for e in p.terms)]
    return Ideal(target, [p.change_ring(target) if subring else _drop_into(p, I.ring) for p in out])


def _drop_into(p: Polynomial, ring: PolyRing) -> Polynomial:
    idx = {n: i for i, n in enumerate(p.ring.names)}
    names = ring.names
    out = {}
    for e, c in p.terms.items():
        out[tuple(e[idx[n]] for n in names)] = c
    return Polynomial(ring, out, _clean=True)


def _with_fresh(ring: PolyRing, prefix: str = "t"):
    name = ring.fresh_names(prefix, 1)[0]
    return ring.extend([name]), name


def ideal_intersection(I: Ideal, J: Ideal) -> Ideal:
    if I.ring != J.ring:
        raise InputError("ideals live in different rings")
    if I.is_zero() or J.is_zero():
        return Ideal(I.ring)
    ring2, t = _with_fresh(I.ring)
    tv = ring2.var(t)
    gens = [tv * g.change_ring(ring2) for g in I.gens]
    gens += [(1 - tv) * g.change_ring(ring2) for g in J.gens]
    K = elimination(Ideal(ring2, gens), I.ring.names)
    return Ideal(I.ring, [_drop_into(g, I.ring) for g in K.gens])


def intersect_all(ideals: Sequence[Ideal], ring: Optional[PolyRing] = None) -> Ideal:
    """Intersection of a list of ideals; the empty intersection is the unit ideal."""
    if not ideals:
        if ring is None:
            raise InputError("empty intersection needs an explicit ring")
        return Ideal(ring, [ring.one()])
    acc = ideals[0]
    for J in ideals[1:]:
        acc = ideal_intersection(acc, J)
    return acc


def saturation(I: Ideal, f: Polynomial) -> Ideal:
    """I : f^infinity."""
    if f.is_zero():
        raise InputError("cannot saturate by zero")
    if f.is_constant():
        return I
    ring2, t = _with_fresh(I.ring)
    gens = [g.change_ring(ring2) for g in I.gens] + [1 - ring2.var(t) * f.change_ring(ring2)]
    K = elimination(Ideal(ring2, gens), I.ring.names)
    return Ideal(I.ring, [_drop_into(g, I.ring) for g in K.gens])


def saturation_by_ideal(I: Ideal, J: Ideal) -> Ideal:
    """I : J^infinity as the intersection of the saturations by each generator."""
    gens = [g for g in J.gens]
    if not gens:
        # J = 0: V(J) is everything, so nothing survives
        return Ideal(I.ring, [I.ring.one()])
    if any(g.is_constant() for g in gens):
        return I
    return intersect_all([saturation(I, g) for g in gens])


def radical_membership(f: Polynomial, I: Ideal) -> bool:
    """True iff f vanishes on V(I) over the algebraic closure."""
    if f.ring != I.ring:
        raise InputError("polynomial and ideal live in different rings")
    if f.is_zero():
        return True
    ring2, t = _with_fresh(I.ring)
    gens = [g.change_ring(ring2) for g in I.gens] + [1 - ring2.var(t) * f.change_ring(ring2)]
    return groebner_basis(Ideal(ring2, gens)).is_unit()


def inclusion_of_varieties(A: Ideal, B: Ideal) -> bool:
    """V(A) contained in V(B)."""
    return all(radical_membership(g, A) for g in B.gens)


def krull_dimension(I: Ideal) -> int:
    """Dimension of V(I) over the algebraic closure; -1 for the unit ideal."""
    G = groebner_basis(I)
    if G.is_unit():
        return -1
    n = I.ring.nvars
    supports = [frozenset(i for i, x in enumerate(m) if x) for m in G.leading_monomials()]
    for size in range(n, -1, -1):
        for S in combinations(range(n), size):
            s = set(S)
            if not any(sup <= s for sup in supports):
                return size
    return 0  # pragma: no cover


# ---------------------------------------------------------------------------
# Modules and syzygies


Vector = Tuple[Polynomial, ...]


def _vec_to_dict(v: Sequence[Polynomial]) -> dict:
    out = {}
    for pos, f in enumerate(v):
        for e, c in f.terms.items():
            out[(pos,) + e] = _Q(c.numerator, c.denominator)
    return out


def _dict_to_vec(ring: PolyRing, d: dict, rank: int) -> Vector:
    parts: List[dict] = [{} for _ in range(rank)]
    for m, c in d.items():
        parts[m[0]][m[1:]] = _to_fraction(c)
    return tuple(Polynomial(ring, p, _clean=True) for p in parts)


@dataclass(frozen=True)
class ModuleBasis:
    ring: PolyRing
    rank: int
    order: MonomialOrder
    vectors: Tuple[Vector, ...]

    def reduce(self, v: Sequence[Polynomial]) -> Vector:
        eng = _Engine(self.order, module=True)
        basis = []
        for w in self.vectors:
            d = _vec_to_dict(w)
            basis.append((eng.lead(d), d))
        return _dict_to_vec(self.ring, eng.reduce(_vec_to_dict(v), basis), self.rank)

    def contains(self, v: Sequence[Polynomial]) -> bool:
        return all(f.is_zero() for f in self.reduce(v))


def _check_vectors(vectors: Sequence[Sequence[Polynomial]], rank: Optional[int] = None):
    if rank is None:
        if not vectors:
            raise InputError("cannot infer the rank of an empty vector list")
        rank = len(vectors[0])
    for v in vectors:
        if len(v) != rank:
            raise InputError("vectors of different lengths")
    return rank


def module_groebner_basis(vectors: Sequence[Sequence[Polynomial]], ring: PolyRing,
                          rank: Optional[int] = None,
                          order: MonomialOrder = GREVLEX) -> ModuleBasis:
    """Reduced basis of a submodule of R^rank, position-over-term."""
    _check_ring(ring)
    rank = _check_vectors(vectors, rank)
    eng = _Engine(order, module=True)
    vecs = [tuple(v) for v in vectors if any(not f.is_zero() for f in v)]
    vecs.sort(key=lambda v: tuple(str(f) for f in v))
    out = eng.run([_vec_to_dict(v) for v in vecs])
    return ModuleBasis(ring, rank, order, tuple(_dict_to_vec(ring, f, rank) for _, f in out))


def module_membership(v: Sequence[Polynomial], vectors: Sequence[Sequence[Polynomial]],
                      ring: PolyRing) -> bool:
    rank = len(v)
    return module_groebner_basis(vectors, ring, rank).contains(v)


def same_module(a: Sequence[Sequence[Polynomial]], b: Sequence[Sequence[Polynomial]],
                ring: PolyRing, rank: int) -> bool:
    A = module_groebner_basis(a, ring, rank)
    B = module_groebner_basis(b, ring, rank)
    return A.vectors == B.vectors


@dataclass(frozen=True)
class SyzygyBasis:
    ring: PolyRing
    rank: int
    vectors: Tuple[Vector, ...]

    def to_json(self) -> List[List[str]]:
        return [[str(f) for f in v] for v in self.vectors]


def syzygy_basis(columns: Sequence[Sequence[Polynomial]], ring: Optional[PolyRing] = None) -> SyzygyBasis:
    """Generators of {a : sum_i a_i * columns[i] = 0}.

    Column i is lifted to (columns[i], e_i) in R^(m+n); basis elements whose
    leading position is past the first m coordinates are pure relations.
    """
    n = len(columns)
    if ring is None:
        if not columns or not columns[0]:
            raise InputError("cannot infer the ring of empty columns")
        ring = columns[0][0].ring
    if n == 0:
        return SyzygyBasis(ring, 0, ())
    m = _check_vectors(columns)
    zero = ring.zero()
    one = ring.one()
    lifted = []
    for i, col in enumerate(columns):
        unit = [zero] * n
        unit[i] = one
        lifted.append(tuple(col) + tuple(unit))
    _check_ring(ring)
    eng = _Engine(GREVLEX, module=True)
    out = eng.run([_vec_to_dict(v) for v in lifted])
    syz = []
    for lm, f in out:
        if lm[0] >= m:
            vec = _dict_to_vec(ring, f, m + n)
            syz.append(vec[m:])
    return SyzygyBasis(ring, n, tuple(syz))


def pairing(vector: Sequence[Polynomial], column_list: Sequence[Sequence[Polynomial]]) -> Vector:
    """sum_i vector[i] * column_list[i], coordinatewise."""
    m = len(column_list[0])
    acc = [vector[0].ring.zero() for _ in range(m)]
    for a, col in zip(vector, column_list):
        for k in range(m):
            acc[k] = acc[k] + a * col[k]
    return tuple(acc)
