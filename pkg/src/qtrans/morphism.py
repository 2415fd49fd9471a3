"""Polynomial maps between affine spaces and the cotangent variety B_phi.

For phi: A^n -> A^m the kernel vector fields are the syzygies of the Jacobian
columns.  B_phi sits in T*A^n = Spec Q[x, xi] and is cut out (as a set) by the
pairings <v, xi> for kernel generators v.  Quasi-transitivity at a fiber is the
inequality dim (phi o Pi)^-1(y) <= n.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .arith import format_rational, parse_rational
from .errors import InputError, NotSubmersion, SizeOutOfRange
from .groebner import (
    Ideal,
    elimination,
    groebner_basis,
    inclusion_of_varieties,
    krull_dimension,
    module_membership,
    radical_membership,
    syzygy_basis,
)
from .poly import PolyMatrix, PolyRing, Polynomial, jacobian, minors

QT_AT_FIBER = "quasi_transitive_at_fiber"
NOT_QT_AT_FIBER = "not_quasi_transitive_at_fiber"


@dataclass(frozen=True)
class PolynomialMorphism:
    ring: PolyRing
    components: Tuple[Polynomial, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise InputError("a morphism needs at least one component")
        if self.ring.nvars < 1:
            raise InputError("a morphism needs at least one source variable")
        if self.ring.modulus is not None:
            raise InputError("morphisms are defined over Q")
        for c in comps:
            if c.ring != self.ring:
                raise InputError("component from a different ring")

    @classmethod
    def from_strings(cls, source_vars: Sequence[str], components: Sequence[str]) -> "PolynomialMorphism":
        ring = PolyRing(tuple(source_vars))
        return cls(ring, tuple(ring.parse(c) for c in components))

    @classmethod
    def from_json(cls, data) -> "PolynomialMorphism":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls.from_strings(data["source_vars"], data["components"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"morphism JSON needs source_vars and components: {exc}") from None

    def to_json(self) -> dict:
        return {"source_vars": list(self.ring.names), "components": [str(c) for c in self.components]}

    @property
    def n(self) -> int:
        return self.ring.nvars

    @property
    def m(self) -> int:
        return len(self.components)

    def jacobian(self) -> PolyMatrix:
        return jacobian(self.components, self.ring)

    def compose(self, inner: "PolynomialMorphism") -> "PolynomialMorphism":
        """self o inner."""
        if inner.m != self.n:
            raise InputError("cannot compose: dimension mismatch")
        return PolynomialMorphism(inner.ring, tuple(c.compose(list(inner.components)) for c in self.components))

    def evaluate(self, point: Sequence) -> Tuple[Fraction, ...]:
        return tuple(c.evaluate(point) for c in self.components)

    def cotangent_ring(self) -> PolyRing:
        return self.ring.cotangent()


def cotangent_vars(ring: PolyRing) -> Tuple[PolyRing, List[Polynomial], List[Polynomial]]:
    """(T* ring, base variables, dual variables) for the base ring."""
    T = ring.cotangent()
    n = ring.nvars
    gens = T.gens()
    return T, gens[:n], gens[n:]


# ---------------------------------------------------------------------------
# Kernel fields and B_phi


def _canonical_vector(v: Sequence[Polynomial]) -> Tuple[Polynomial, ...]:
    """Scale so coefficients are coprime integers with a positive first leading coefficient."""
    from math import gcd, lcm

    den = 1
    for f in v:
        for c in f.terms.values():
            den = lcm(den, Fraction(c).denominator)
    ints = [f.scale(den) for f in v]
    g = 0
    for f in ints:
        for c in f.terms.values():
            g = gcd(g, int(c))
    first = next(f for f in ints if not f.is_zero())
    lc = first.sorted_terms()[0][1]
    if lc < 0:
        g = -g
    return tuple(f.scale(Fraction(1, g)) for f in ints)


def _vector_key(v: Sequence[Polynomial]):
    return tuple((f.total_degree(), str(f)) for f in v)


def minimalize_generators(vectors: Sequence[Sequence[Polynomial]], ring: PolyRing, rank: int) -> List[tuple]:
    """Drop generators lying in the span of the rest; output canonical and sorted."""
    vecs = sorted({_canonical_vector(v) for v in vectors if any(not f.is_zero() for f in v)}, key=_vector_key)
    i = len(vecs) - 1
    while i >= 0 and len(vecs) > 1:
        rest = vecs[:i] + vecs[i + 1:]
        if module_membership(vecs[i], rest, ring):
            vecs = rest
        i -= 1
    return vecs


@lru_cache(maxsize=256)
def kernel_vector_fields(phi: PolynomialMorphism) -> Tuple[Tuple[Polynomial, ...], ...]:
    """Generators of {v : Jac(phi) v = 0} as n-tuples, minimal and in canonical order."""
    cols = phi.jacobian().columns()
    syz = syzygy_basis(cols, phi.ring)
    return tuple(minimalize_generators(syz.vectors, phi.ring, phi.n))


def pairing_polynomial(v: Sequence[Polynomial], T: PolyRing) -> Polynomial:
    """<v, xi> in the cotangent ring T."""
    n = len(v)
    xis = T.gens()[n:]
    acc = T.zero()
    for f, xi in zip(v, xis):
        acc = acc + f.change_ring(T) * xi
    return acc


def b_phi_ideal(phi: PolynomialMorphism) -> Ideal:
    T = phi.cotangent_ring()
    return Ideal(T, [pairing_polynomial(v, T) for v in kernel_vector_fields(phi)])


def _rationals(y: Sequence) -> Tuple[Fraction, ...]:
    out = []
    for v in y:
        out.append(parse_rational(v) if isinstance(v, str) else Fraction(v))
    return tuple(out)


def fiber_ideal(phi: PolynomialMorphism, y: Sequence) -> Ideal:
    y = _rationals(y)
    if len(y) != phi.m:
        raise InputError(f"fiber point needs {phi.m} coordinates, got {len(y)}")
    B = b_phi_ideal(phi)
    T = B.ring
    eqs = [c.change_ring(T) - v for c, v in zip(phi.components, y)]
    return Ideal(T, B.gens + tuple(eqs))


@dataclass
class QTReport:
    fiber: Tuple[Fraction, ...]
    fiber_dimension: int
    source_dimension: int
    verdict: str
    certificate: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "certificate": list(self.certificate),
            "fiber": [format_rational(v) for v in self.fiber],
            "fiber_dimension": self.fiber_dimension,
            "source_dimension": self.source_dimension,
            "verdict": self.verdict,
        }


def qt_check_at(phi: PolynomialMorphism, y: Sequence) -> QTReport:
    y = _rationals(y)
    F = fiber_ideal(phi, y)
    G = groebner_basis(F)
    d = krull_dimension(F)
    verdict = QT_AT_FIBER if d <= phi.n else NOT_QT_AT_FIBER
    return QTReport(y, d, phi.n, verdict, G.to_json())


def generic_fiber_dimension(phi: PolynomialMorphism) -> int:
    """Dimension of the fiber of phi o Pi over a dense part of its image."""
    T = phi.cotangent_ring()
    ynames = T.fresh_names("y", phi.m)
    R = T.extend(ynames)
    B = b_phi_ideal(phi)
    gens = [g.change_ring(R) for g in B.gens]
    gens += [R.var(yn) - c.change_ring(R) for yn, c in zip(ynames, phi.components)]
    inc = Ideal(R, gens)
    total = krull_dimension(inc)
    image = krull_dimension(elimination(inc, ynames, subring=True))
    return total - image


# ---------------------------------------------------------------------------
# The dagger correspondence and conormals


def dagger_pullback(psi: PolynomialMorphism, W: Ideal) -> Ideal:
    """psi^dagger W inside T*X, for W in T*Y = Q[y_1..y_m, eta_1..eta_m] (by position)."""
    n, m = psi.n, psi.m
    if W.ring.nvars != 2 * m:
        raise InputError(f"W must live in a ring with {2 * m} variables (target and dual)")
    T = psi.cotangent_ring()
    etas = T.fresh_names("eta", m)
    R = T.extend(etas)
    eta = [R.var(e) for e in etas]
    comps = [c.change_ring(R) for c in psi.components]
    images = comps + eta
    pulled = [g.compose(images) for g in W.gens]
    J = psi.jacobian()
    xis = R.gens()[n:2 * n]
    rel = []
    for j in range(n):
        acc = R.zero()
        for i in range(m):
            acc = acc + J[i, j].change_ring(R) * eta[i]
        rel.append(xis[j] - acc)
    # submersion check on the projection of W's pullback to X
    locus = elimination(Ideal(R, pulled), psi.ring.names)
    if groebner_basis(locus).is_unit():
        return Ideal(T, [T.one()])
    if m > n:
        raise NotSubmersion("target dimension exceeds source dimension")
    full = [g.change_ring(R) for g in minors(J, m)]
    if all(radical_membership(g, locus) for g in full):
        raise NotSubmersion("Jacobian drops rank on the whole relevant locus")
    K = elimination(Ideal(R, pulled + rel), T.names)
    from .groebner import _drop_into

    return Ideal(T, [_drop_into(g, T) for g in K.gens])


def conormal_ideal(S: Ideal, codim: int, cotangent: Optional[PolyRing] = None) -> Ideal:
    """S plus the (codim+1)-minors of Jac(generators of S) stacked over (xi_1..xi_n)."""
    ring = S.ring
    n = ring.nvars
    T = cotangent if cotangent is not None else ring.cotangent()
    gens = list(S.gens)
    rows = len(gens) + 1
    size = codim + 1
    if codim < 0 or size > rows:
        raise SizeOutOfRange(f"minor size {size} exceeds the {rows} available rows")
    base = [g.change_ring(T) for g in gens]
    if size > n:
        return Ideal(T, base)
    Jrows = [[g.change_ring(T).diff(v) for v in ring.names] for g in gens]
    xis = T.gens()[n:2 * n]
    M = PolyMatrix(T, Jrows + [xis])
    return Ideal(T, base + minors(M, size))


def inclusion_check(A: Ideal, B: Ideal) -> bool:
    """V(A) is contained in V(B)."""
    if A.ring != B.ring:
        raise InputError("ideals live in different rings")
    return inclusion_of_varieties(A, B)


def kernel_rank_at(phi: PolynomialMorphism, point: Sequence) -> int:
    """Rank of the kernel-field matrix at a point."""
    from .arith import exact_rank

    rows = [[f.evaluate(point) for f in v] for v in kernel_vector_fields(phi)]
    return exact_rank(rows) if rows else 0


def sheaf_fiber_dimension_at(phi: PolynomialMorphism, point: Sequence) -> int:
    """Dimension of the fiber of Im(D phi) at a point: n minus the relation-matrix rank."""
    return phi.n - kernel_rank_at(phi, point)


def morphism_to_text(phi: PolynomialMorphism) -> str:
    return json.dumps(phi.to_json(), sort_keys=True)


def ideal_from_json(data) -> Ideal:
    """{"vars": [...], "generators": [...]}"""
    if isinstance(data, str):
        data = json.loads(data)
    try:
        ring = PolyRing(tuple(data["vars"]))
        return Ideal(ring, [ring.parse(g) for g in data["generators"]])
    except (KeyError, TypeError) as exc:
        raise InputError(f"ideal JSON needs vars and generators: {exc}") from None


def ideal_to_json(I: Ideal) -> Dict[str, list]:
    return {"generators": I.to_json(), "vars": list(I.ring.names)}
