"""Stratifications of affine varieties and of maps to the affine line.

A stratum is a locally closed set V(closed) minus V(excluded).  Strata are
indexed by a finite poset; the closure of a stratum must lie in the union of
the strata below it.  On top of that this module builds the recursive
stratification of a polynomial f: A^n -> A^1 (smooth-locus peeling, critical
values, rank of Im(Df)) with the two gluing operations, and audits the
resulting stratified map against the cotangent variety B_f.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Tuple

import sympy

from .arith import exact_rank, format_rational
from .errors import (
    DecompositionMismatch,
    InputError,
    PresentationUnsupported,
    QTransError,
    ResourceLimit,
)
from .groebner import (
    Ideal,
    elimination,
    groebner_basis,
    inclusion_of_varieties,
    intersect_all,
    krull_dimension,
    radical_membership,
    saturation_by_ideal,
)
from .morphism import (
    PolynomialMorphism,
    conormal_ideal,
    fiber_ideal,
    kernel_vector_fields,
)
from .poly import PolyMatrix, PolyRing, Polynomial, minors

Label = Hashable


# ---------------------------------------------------------------------------
# Posets


class Poset:
    """Finite partial order; ``pairs`` lists relations a <= b (reflexive ones optional)."""

    def __init__(self, elements: Iterable[Label], pairs: Iterable[Tuple[Label, Label]] = ()):
        elements = tuple(elements)
        if len(set(elements)) != len(elements):
            raise InputError("duplicate poset elements")
        es = set(elements)
        rel = {(a, a) for a in elements}
        for a, b in pairs:
            if a not in es or b not in es:
                raise InputError(f"relation {(a, b)} mentions an unknown element")
            rel.add((a, b))
        for a, b in rel:
            if a != b and (b, a) in rel:
                raise InputError(f"antisymmetry fails for {a!r}, {b!r}")
        for a, b in rel:
            for c, d in rel:
                if b == c and (a, d) not in rel:
                    raise InputError(f"transitivity fails: {a!r} <= {b!r} <= {d!r}")
        self.elements = elements
        self.rel = frozenset(rel)

    @classmethod
    def closure_of(cls, elements: Iterable[Label], pairs: Iterable[Tuple[Label, Label]]) -> "Poset":
        """Poset generated by the given relations (transitive closure)."""
        elements = tuple(elements)
        rel = set(pairs) | {(a, a) for a in elements}
        changed = True
        while changed:
            changed = False
            for a, b in list(rel):
                for c, d in list(rel):
                    if b == c and (a, d) not in rel:
                        rel.add((a, d))
                        changed = True
        return cls(elements, rel)

    @classmethod
    def chain(cls, top_down: Sequence[Label]) -> "Poset":
        """Total order with ``top_down[0]`` the largest element."""
        els = tuple(top_down)
        return cls(els, [(els[j], els[i]) for i in range(len(els)) for j in range(i, len(els))])

    def __len__(self):
        return len(self.elements)

    def __contains__(self, a):
        return a in set(self.elements)

    def leq(self, a, b) -> bool:
        return (a, b) in self.rel

    def lt(self, a, b) -> bool:
        return a != b and (a, b) in self.rel

    def below(self, p) -> List[Label]:
        return [q for q in self.elements if self.leq(q, p)]

    def height(self, p) -> int:
        """Length of the longest chain below p."""
        return _height(self, p)

    def strict_pairs(self) -> List[Tuple[Label, Label]]:
        return [(a, b) for a, b in self.rel if a != b]

    def linear_extension(self, key=repr) -> List[Label]:
        """Ascending list compatible with the order; ties broken by ``key``."""
        return sorted(self.elements, key=lambda a: (self.height(a), key(a)))

    def relabel(self, mapping: Dict[Label, Label]) -> "Poset":
        return Poset([mapping[a] for a in self.elements], [(mapping[a], mapping[b]) for a, b in self.rel])

    def restrict(self, keep: Iterable[Label]) -> "Poset":
        keep = [a for a in self.elements if a in set(keep)]
        ks = set(keep)
        return Poset(keep, [(a, b) for a, b in self.rel if a in ks and b in ks])

    def is_isomorphic_to(self, other: "Poset") -> bool:
        from itertools import permutations

        if len(self) != len(other):
            return False
        if len(self) > 8:
            raise ResourceLimit("poset isomorphism test limited to 8 elements")
        for perm in permutations(other.elements):
            m = dict(zip(self.elements, perm))
            if all(((m[a], m[b]) in other.rel) == ((a, b) in self.rel)
                   for a in self.elements for b in self.elements):
                return True
        return False

    def to_json(self) -> dict:
        return {
            "elements": [str(a) for a in self.elements],
            "pairs": sorted([str(a), str(b)] for a, b in self.strict_pairs()),
        }

    @classmethod
    def from_json(cls, data) -> "Poset":
        return cls.closure_of(data["elements"], [tuple(p) for p in data.get("pairs", [])])

    def __repr__(self):
        return f"Poset({list(self.elements)}, {sorted(self.strict_pairs(), key=repr)})"


def _height(P: Poset, p) -> int:
    best = 0
    for q in P.elements:
        if P.lt(q, p):
            best = max(best, 1 + _height(P, q))
    return best


def product_poset(A: Poset, B: Poset) -> Poset:
    els = [(a, b) for a in A.elements for b in B.elements]
    pairs = [((a, b), (c, d)) for (a, b) in els for (c, d) in els if A.leq(a, c) and B.leq(b, d)]
    return Poset(els, pairs)


def stacked_union(upper: Poset, lower: Poset, tag_upper="U", tag_lower="Z") -> Poset:
    """Disjoint union where every element of ``upper`` is above every element of ``lower``."""
    els = [(tag_upper, a) for a in upper.elements] + [(tag_lower, b) for b in lower.elements]
    pairs = [((tag_upper, a), (tag_upper, b)) for a, b in upper.rel]
    pairs += [((tag_lower, a), (tag_lower, b)) for a, b in lower.rel]
    pairs += [((tag_lower, b), (tag_upper, a)) for a in upper.elements for b in lower.elements]
    return Poset(els, pairs)


# ---------------------------------------------------------------------------
# Locally closed pieces


def unit_ideal(ring: PolyRing) -> Ideal:
    return Ideal(ring, [ring.one()])


def zero_ideal(ring: PolyRing) -> Ideal:
    return Ideal(ring, [])


def _canon(I: Ideal) -> Ideal:
    return Ideal(I.ring, groebner_basis(I).polys)


@dataclass(frozen=True)
class Piece:
    """V(closed) minus V(excluded)."""

    closed: Ideal
    excluded: Ideal

    @property
    def ring(self) -> PolyRing:
        return self.closed.ring

    @classmethod
    def whole(cls, ring: PolyRing) -> "Piece":
        return cls(zero_ideal(ring), unit_ideal(ring))

    @classmethod
    def closed_set(cls, I: Ideal) -> "Piece":
        return cls(I, unit_ideal(I.ring))

    def is_empty(self) -> bool:
        return inclusion_of_varieties(self.closed, self.excluded)

    def meet(self, other: "Piece") -> "Piece":
        return Piece(_canon(self.closed + other.closed), _canon(self.excluded * other.excluded))

    def minus(self, Z: Ideal) -> "Piece":
        """Remove V(Z)."""
        return Piece(self.closed, _canon(self.excluded * Z))

    def within(self, Z: Ideal) -> "Piece":
        """Intersect with V(Z)."""
        return Piece(_canon(self.closed + Z), self.excluded)

    def closure(self) -> Ideal:
        return _closure(self.closed, self.excluded)

    def pullback(self, f: Sequence[Polynomial]) -> "Piece":
        """Preimage under a map whose components are ``f`` (one per target variable)."""
        fl = list(f)
        ring = fl[0].ring
        return Piece(Ideal(ring, [g.compose(fl) for g in self.closed.gens]),
                     Ideal(ring, [g.compose(fl) for g in self.excluded.gens]))

    def to_json(self) -> dict:
        return {"closed": groebner_basis(self.closed).to_json(),
                "excluded": groebner_basis(self.excluded).to_json()}

    def key(self):
        return (tuple(groebner_basis(self.closed).to_json()), tuple(groebner_basis(self.excluded).to_json()))


def _closure(I: Ideal, J: Ideal) -> Ideal:
    if groebner_basis(J).is_unit():
        return I
    return saturation_by_ideal(I, J)


def piece_contains(outer: Piece, inner: Piece) -> bool:
    """inner is a subset of outer."""
    # inner minus V(outer.closed) must be empty, and inner meets V(outer.excluded) emptily
    A = inner.closure()
    if not all(radical_membership(g, A) for g in outer.closed.gens):
        return False
    return inclusion_of_varieties(inner.closed + outer.excluded, inner.excluded)


# ---------------------------------------------------------------------------
# Data


@dataclass
class StratDatum:
    ring: PolyRing
    poset: Poset
    pieces: Dict[Label, Piece]
    ambient: Optional[Piece] = None

    def __post_init__(self):
        if set(self.pieces) != set(self.poset.elements):
            raise InputError("pieces and poset elements differ")
        if self.ambient is None:
            self.ambient = Piece.whole(self.ring)

    def labels(self) -> List[Label]:
        return list(self.poset.elements)

    def to_json(self) -> dict:
        return {
            "ambient": self.ambient.to_json(),
            "pieces": {str(k): self.pieces[k].to_json() for k in self.poset.elements},
            "poset": self.poset.to_json(),
            "vars": list(self.ring.names),
        }

    @classmethod
    def from_json(cls, data) -> "StratDatum":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            ring = PolyRing(tuple(data["vars"]))
            poset = Poset.from_json(data["poset"])
            pieces = {}
            for label in poset.elements:
                p = data["pieces"][label]
                pieces[label] = Piece(Ideal.from_strings(ring, p.get("closed", [])),
                                      Ideal.from_strings(ring, p.get("excluded", ["1"])))
            amb = data.get("ambient")
            ambient = None
            if amb is not None:
                ambient = Piece(Ideal.from_strings(ring, amb.get("closed", [])),
                                Ideal.from_strings(ring, amb.get("excluded", ["1"])))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed stratification JSON: {exc}") from None
        return cls(ring, poset, pieces, ambient)


@dataclass
class StratifiedMorphism:
    """f: X -> Y with stratifications of source and target and the poset map alpha."""

    components: Tuple[Polynomial, ...]
    source: StratDatum
    target: StratDatum
    alpha: Dict[Label, Label]

    def __post_init__(self):
        self.components = tuple(self.components)
        for s in self.source.labels():
            if s not in self.alpha:
                raise InputError(f"alpha is undefined on {s!r}")
        for s, t in self.alpha.items():
            if t not in self.target.pieces:
                raise InputError(f"alpha sends {s!r} to unknown {t!r}")
        for a in self.source.labels():
            for b in self.source.labels():
                if self.source.poset.leq(a, b) and not self.target.poset.leq(self.alpha[a], self.alpha[b]):
                    raise InputError("alpha does not respect the order")

    def to_json(self) -> dict:
        return {
            "alpha": {str(k): str(v) for k, v in sorted(self.alpha.items(), key=lambda t: str(t[0]))},
            "map": [str(c) for c in self.components],
            "source": self.source.to_json(),
            "target": self.target.to_json(),
        }


# ---------------------------------------------------------------------------
# Validation


def _covering_gaps(ambient: Piece, pieces: Sequence[Piece], limit: int = 4096) -> List[Piece]:
    """Nonempty leftovers of ambient minus the union of pieces."""
    rest = [ambient] if not ambient.is_empty() else []
    for P in pieces:
        nxt = []
        for R in rest:
            for cand in (R.minus(P.closed), Piece(_canon(R.closed + P.excluded), R.excluded)):
                if not cand.is_empty():
                    nxt.append(cand)
        rest = nxt
        if len(rest) > limit:
            raise ResourceLimit("covering check produced too many leftover pieces")
    return rest


def _sample_uncovered(D: StratDatum, primes, budget: int = 200_000):
    """An F_q point of the ambient set lying in no piece, or None (advisory only)."""
    from itertools import product

    from .poly import reduce_mod_p

    n = D.ring.nvars

    def member(piece: Piece, q, pt):
        if any(reduce_mod_p(g, q).evaluate(pt) for g in piece.closed.gens):
            return False
        return any(reduce_mod_p(g, q).evaluate(pt) for g in piece.excluded.gens)

    for q in primes:
        if q ** n > budget:
            break
        for pt in product(range(q), repeat=n):
            if member(D.ambient, q, pt) and not any(member(P, q, pt) for P in D.pieces.values()):
                return q, pt
    return None


def validate_stratification(D: StratDatum, *, sample_primes=(3, 5, 7)) -> dict:
    """Disjointness, covering and the closure condition; violations are listed."""
    labels = D.labels()
    violations = []
    advisory = False
    nonempty = {p: not D.pieces[p].is_empty() for p in labels}
    for p, q in combinations(labels, 2):
        A, B = D.pieces[p], D.pieces[q]
        if not inclusion_of_varieties(A.closed + B.closed, A.excluded * B.excluded):
            violations.append({"kind": "disjointness", "pieces": [str(p), str(q)]})
    for p in labels:
        if not piece_contains(D.ambient, D.pieces[p]):
            violations.append({"kind": "outside_ambient", "pieces": [str(p)]})
    try:
        gaps = _covering_gaps(D.ambient, [D.pieces[p] for p in labels])
        for g in gaps:
            violations.append({"kind": "covering", "pieces": [], "gap": g.to_json()})
    except ResourceLimit:
        advisory = True
        w = _sample_uncovered(D, sample_primes)
        if w is not None:
            violations.append({"kind": "covering", "pieces": [], "witness": [w[0], list(w[1])]})
    for p in labels:
        if not nonempty[p]:
            continue
        cl = D.pieces[p].closure()
        for q in labels:
            if q == p or D.poset.leq(q, p) or not nonempty[q]:
                continue
            Q = D.pieces[q]
            if not inclusion_of_varieties(cl + Q.closed, Q.excluded):
                violations.append({"kind": "closure", "pieces": [str(p), str(q)]})
    kinds = {v["kind"] for v in violations}
    return {
        "advisory": advisory,
        "closure": "closure" not in kinds,
        "covering": "covering" not in kinds,
        "disjoint": "disjointness" not in kinds,
        "valid": not violations,
        "violations": violations,
    }


def validate_morphism(sm: StratifiedMorphism) -> dict:
    """Both stratifications valid and every source piece maps into its alpha-target."""
    src = validate_stratification(sm.source)
    tgt = validate_stratification(sm.target)
    bad = []
    for s, t in sm.alpha.items():
        S = sm.source.pieces[s]
        if S.is_empty():
            continue
        T = sm.target.pieces[t].pullback(sm.components)
        if not piece_contains(T, S):
            bad.append([str(s), str(t)])
    return {"maps_into": not bad, "source": src, "target": tgt,
            "valid": src["valid"] and tgt["valid"] and not bad, "violations": bad}


# ---------------------------------------------------------------------------
# Smoothness: reduced presentations and the Jacobian criterion


def squarefree_part(f: Polynomial) -> Polynomial:
    """Squarefree part over Q (via sympy), made primitive."""
    if f.is_constant():
        return f
    gens = sympy.symbols(list(f.ring.names))
    P = sympy.Poly.from_dict({e: sympy.Rational(c.numerator, c.denominator) for e, c in f.terms.items()},
                             *gens, domain="QQ")
    S = P.sqf_part()
    out = {}
    for e, c in S.terms():
        c = sympy.Rational(c)
        out[tuple(e)] = Fraction(int(c.p), int(c.q))
    return Polynomial(f.ring, out).primitive()


@dataclass(frozen=True)
class Presentation:
    """Generators cutting out a piece reduced, of codimension ``codim`` in A^n."""

    gens: Tuple[Polynomial, ...]
    codim: int
    dim: int
    closure: Ideal

    def jacobian_rows(self) -> List[List[Polynomial]]:
        names = self.closure.ring.names
        return [[g.diff(v) for v in names] for g in self.gens]

    def singular_ideal(self) -> Ideal:
        """gens plus the codim-sized minors of their Jacobian."""
        ring = self.closure.ring
        if self.codim == 0:
            return unit_ideal(ring)
        M = PolyMatrix(ring, self.jacobian_rows())
        return Ideal(ring, list(self.gens) + minors(M, self.codim))


def _minors_or_empty(rows, ring, size) -> List[Polynomial]:
    if not rows or size > min(len(rows), len(rows[0])):
        return []
    if size == 0:
        return [ring.one()]
    return minors(PolyMatrix(ring, rows), size)


def present(piece: Piece, codim: Optional[int] = None) -> Optional[Presentation]:
    """A presentation suitable for the Jacobian criterion, or None if the piece is empty.

    Raises PresentationUnsupported when no candidate generating set makes the
    Jacobian criterion exact on the piece.
    """
    ring = piece.ring
    n = ring.nvars
    sat = piece.closure()
    G = groebner_basis(sat)
    if G.is_unit() or piece.is_empty():
        return None
    if not G.polys:
        return Presentation((), 0, n, sat)
    d = krull_dimension(sat)
    c = n - d
    if codim is not None:
        if codim != c:
            raise PresentationUnsupported(f"declared codimension {codim} but the piece has codimension {c}")
        gens = tuple(G.polys)
    elif len(G.polys) == 1:
        gens = (squarefree_part(G.polys[0]),)
    else:
        cands = {squarefree_part(g) for g in G.polys}
        if d + 1 < n:
            for S in combinations(ring.names, d + 1):
                for g in elimination(sat, S).gens:
                    cands.add(squarefree_part(g))
        gens = tuple(sorted(cands, key=str))
    P = Presentation(gens, c, d, sat)
    _check_honest(P, piece)
    return P


def _check_honest(P: Presentation, piece: Piece) -> None:
    ring = P.closure.ring
    if P.codim == 0:
        return
    rows = P.jacobian_rows()
    sing = Ideal(ring, list(P.gens) + _minors_or_empty(rows, ring, P.codim))
    if krull_dimension(_closure(sing, piece.excluded)) >= P.dim:
        raise PresentationUnsupported("Jacobian criterion degenerates on a top-dimensional component")
    higher = _minors_or_empty(rows, ring, P.codim + 1)
    if higher and not all(radical_membership(g, P.closure) for g in higher):
        raise PresentationUnsupported("piece is not equidimensional (lower-dimensional components)")


def singular_part(piece: Piece, P: Presentation) -> Piece:
    return Piece(_canon(P.singular_ideal()), piece.excluded)


def is_smooth(piece: Piece) -> bool:
    P = present(piece)
    if P is None:
        return True
    return singular_part(piece, P).is_empty()


def reg_chain(piece: Piece, codim: Optional[int] = None, depth: int = 0) -> List[Piece]:
    """Reg of a piece: smooth locus first, then Reg of the singular locus."""
    if depth > 64:
        raise ResourceLimit("Reg recursion too deep")
    P = present(piece, codim if depth == 0 else None)
    if P is None:
        return []
    sing = singular_part(piece, P)
    if sing.is_empty():
        return [piece]
    smooth = piece.minus(sing.closed)
    return [smooth] + reg_chain(sing, None, depth + 1)


def reg_stratify(X: Ideal, codim: Optional[int] = None, prefix: str = "R") -> StratDatum:
    """Chain stratification of V(X) by iterated smooth loci.

    With ``codim`` unset the closed set must be a hypersurface (or a point set /
    whole space); with ``codim`` given the generators are taken as a complete
    intersection of that codimension.
    """
    ring = X.ring
    base = Piece.closed_set(X)
    if codim is None:
        sat = groebner_basis(X)
        if len(sat.polys) > 1 and krull_dimension(X) > 0:
            raise PresentationUnsupported("not a hypersurface; declare a complete-intersection codimension")
    chain = reg_chain(base, codim)
    labels = [f"{prefix}{i}" for i in range(len(chain))]
    return StratDatum(ring, Poset.chain(labels), dict(zip(labels, chain)), ambient=base)


# ---------------------------------------------------------------------------
# Rank of Im(Df) through the kernel presentation


def kernel_matrix_rows(phi: PolynomialMorphism) -> List[List[Polynomial]]:
    return [list(v) for v in kernel_vector_fields(phi)]


def fitting_minors(phi: PolynomialMorphism, r: int) -> Ideal:
    """Ideal of r x r minors of the kernel matrix (unit for r = 0, zero if r is too big)."""
    rows = kernel_matrix_rows(phi)
    if r == 0:
        return unit_ideal(phi.ring)
    return Ideal(phi.ring, _minors_or_empty(rows, phi.ring, r))


def rank_stratification(phi: PolynomialMorphism) -> StratDatum:
    """Loci of constant sheaf-fiber dimension of Im(D phi), labelled ``fiberdim<k>``."""
    n = phi.n
    rows = kernel_matrix_rows(phi)
    rmax = min(len(rows), n)
    pieces = []
    for r in range(rmax, -1, -1):
        P = Piece(_canon(fitting_minors(phi, r + 1)), _canon(fitting_minors(phi, r)))
        if not P.is_empty():
            pieces.append((f"fiberdim{n - r}", P))
    labels = [a for a, _ in pieces]
    return StratDatum(phi.ring, Poset.chain(labels), dict(pieces))


def max_kernel_rank_on(phi: PolynomialMorphism, piece: Piece) -> int:
    rows = kernel_matrix_rows(phi)
    cl = piece.closure()
    for r in range(min(len(rows), phi.n), 0, -1):
        ms = _minors_or_empty(rows, phi.ring, r)
        if any(not radical_membership(g, cl) for g in ms):
            return r
    return 0


# ---------------------------------------------------------------------------
# Gluing


def _require(cond: bool, msg: str):
    if not cond:
        raise DecompositionMismatch(msg)


def _trivial(components, src_ring, tgt_ring, X: Piece, Y: Piece) -> StratifiedMorphism:
    if X.is_empty():
        source = StratDatum(src_ring, Poset([]), {}, X)
        return StratifiedMorphism(components, source, StratDatum(tgt_ring, Poset(["y"]), {"y": Y}, Y), {})
    source = StratDatum(src_ring, Poset(["x"]), {"x": X}, X)
    target = StratDatum(tgt_ring, Poset(["y"]), {"y": Y}, Y)
    return StratifiedMorphism(components, source, target, {"x": "y"})


def _union_piece(a: Piece, b: Piece) -> Piece:
    """A piece describing the union when a is open in the union and b is closed in it."""
    return Piece(_canon(ideal_intersection_safe(a.closed, b.closed)), _canon(a.excluded * b.excluded))


def ideal_intersection_safe(I: Ideal, J: Ideal) -> Ideal:
    from .groebner import ideal_intersection

    return ideal_intersection(I, J)


def target_glue(a: StratifiedMorphism, b: StratifiedMorphism, z_ideal: Optional[Ideal] = None,
                ambient: Optional[Tuple[Piece, Piece]] = None) -> StratifiedMorphism:
    """Glue over an open U (from ``a``) and closed Z = V(z_ideal) (from ``b``) of the target."""
    if a.components != b.components:
        raise DecompositionMismatch("the two halves describe different maps")
    if z_ideal is not None:
        for t, P in a.target.pieces.items():
            _require(P.within(z_ideal).is_empty(), f"target piece {t!r} of the open half meets Z")
        for t, P in b.target.pieces.items():
            _require(piece_contains(Piece.closed_set(z_ideal), P), f"target piece {t!r} of the closed half leaves Z")
    T = stacked_union(a.target.poset, b.target.poset)
    S = stacked_union(a.source.poset, b.source.poset)
    tp = {("U", k): v for k, v in a.target.pieces.items()}
    tp.update({("Z", k): v for k, v in b.target.pieces.items()})
    sp = {("U", k): v for k, v in a.source.pieces.items()}
    sp.update({("Z", k): v for k, v in b.source.pieces.items()})
    alpha = {("U", k): ("U", v) for k, v in a.alpha.items()}
    alpha.update({("Z", k): ("Z", v) for k, v in b.alpha.items()})
    if ambient is None:
        ambient = (_union_piece(a.source.ambient, b.source.ambient), _union_piece(a.target.ambient, b.target.ambient))
    return StratifiedMorphism(a.components, StratDatum(a.source.ring, S, sp, ambient[0]),
                              StratDatum(a.target.ring, T, tp, ambient[1]), alpha)


def _reg_of_stratified(ring: PolyRing, order: List[Label], pieces: Dict[Label, Piece]):
    """Reg(Y, t): Reg of each stratum, strata stacked along the linear order ``order`` (ascending)."""
    labels = []
    pcs = {}
    pairs = []
    blocks = []
    for i, q in enumerate(order):
        chain = reg_chain(pieces[q])
        block = [(i, r) for r in range(len(chain))]
        for lab, P in zip(block, chain):
            pcs[lab] = P
        labels.extend(block)
        blocks.append(block)
    for i, bi in enumerate(blocks):
        for j, bj in enumerate(blocks):
            for (ii, r) in bi:
                for (jj, s) in bj:
                    if (ii == jj and s <= r) or ii < jj:
                        pairs.append(((ii, r), (jj, s)))
    return Poset(labels, pairs), pcs


def source_glue(a: StratifiedMorphism, b: StratifiedMorphism, z_ideal: Optional[Ideal] = None,
                ambient: Optional[Piece] = None) -> StratifiedMorphism:
    """Glue over an open U (from ``a``) and closed Z = V(z_ideal) (from ``b``) of the source."""
    if a.components != b.components:
        raise DecompositionMismatch("the two halves describe different maps")
    if z_ideal is not None:
        for s, P in a.source.pieces.items():
            _require(P.within(z_ideal).is_empty(), f"source piece {s!r} of the open half meets Z")
        for s, P in b.source.pieces.items():
            _require(piece_contains(Piece.closed_set(z_ideal), P), f"source piece {s!r} of the closed half leaves Z")
    tring = a.target.ring
    # T0 = T_U x T_Z restricted to nonempty intersections
    t0 = {}
    for u, PU in a.target.pieces.items():
        for z, PZ in b.target.pieces.items():
            P = PU.meet(PZ)
            if not P.is_empty():
                t0[(u, z)] = P
    T0 = product_poset(a.target.poset, b.target.poset).restrict(t0)
    order = T0.linear_extension(key=lambda q: repr(t0[q].key()))
    T, tp = _reg_of_stratified(tring, order, t0)
    S0 = stacked_union(a.source.poset, b.source.poset)
    s0p = {("U", k): v for k, v in a.source.pieces.items()}
    s0p.update({("Z", k): v for k, v in b.source.pieces.items()})
    full = product_poset(S0, T)
    sp = {}
    for s, PS in s0p.items():
        for t, PT in tp.items():
            P = PS.meet(PT.pullback(a.components))
            if not P.is_empty():
                sp[(s, t)] = P
    S = full.restrict(sp)
    alpha = {st: st[1] for st in sp}
    if ambient is None:
        ambient = _union_piece(a.source.ambient, b.source.ambient)
    tamb = a.target.ambient
    return StratifiedMorphism(a.components, StratDatum(a.source.ring, S, sp, ambient),
                              StratDatum(tring, T, tp, tamb), alpha)


def canonical_labels(sm: StratifiedMorphism, src_prefix="S", tgt_prefix="T") -> StratifiedMorphism:
    """Relabel strata S0, S1, ... and T0, T1, ... with the top strata first."""
    def order(D: StratDatum):
        return sorted(D.labels(), key=lambda p: (-D.poset.height(p), D.pieces[p].key()))

    tmap = {t: f"{tgt_prefix}{i}" for i, t in enumerate(order(sm.target))}
    smap = {s: f"{src_prefix}{i}" for i, s in enumerate(order(sm.source))}
    src = StratDatum(sm.source.ring, sm.source.poset.relabel(smap),
                     {smap[k]: v for k, v in sm.source.pieces.items()}, sm.source.ambient)
    tgt = StratDatum(sm.target.ring, sm.target.poset.relabel(tmap),
                     {tmap[k]: v for k, v in sm.target.pieces.items()}, sm.target.ambient)
    return StratifiedMorphism(sm.components, src, tgt, {smap[s]: tmap[t] for s, t in sm.alpha.items()})


# ---------------------------------------------------------------------------
# The recursive stratification of f: A^n -> A^1


@dataclass
class _Ctx:
    phi: PolynomialMorphism
    tring: PolyRing
    trace: List[str] = field(default_factory=list)
    depth_limit: int = 40


def _critical_values(ctx: _Ctx, X: Piece, P: Presentation) -> Optional[Polynomial]:
    """Generator of the critical-value polynomial of f restricted to X, or None if none."""
    phi = ctx.phi
    ring = phi.ring
    f = phi.components[0]
    n = ring.nvars
    c = P.codim
    if c + 1 > n:
        crit = X.closure()
    else:
        rows = P.jacobian_rows() + [[f.diff(v) for v in ring.names]]
        crit = Ideal(ring, list(P.closure.gens) + minors(PolyMatrix(ring, rows), c + 1))
    crit_piece = Piece(_canon(crit), X.excluded)
    if crit_piece.is_empty():
        return None
    tname = ctx.tring.names[0]
    R = ring.extend([tname]) if tname not in ring.names else None
    if R is None:
        raise InputError(f"target variable {tname!r} clashes with a source variable")
    sat = crit_piece.closure()
    gens = [g.change_ring(R) for g in sat.gens] + [R.var(tname) - f.change_ring(R)]
    E = elimination(Ideal(R, gens), [tname], subring=True)
    EG = groebner_basis(Ideal(ctx.tring, [g.change_ring(ctx.tring) for g in E.gens]))
    if not EG.polys:
        raise PresentationUnsupported("critical values are dense; presentation is not honest")
    return squarefree_part(EG.polys[0])


def _stratify(ctx: _Ctx, X: Piece, Y: Piece, depth: int) -> StratifiedMorphism:
    phi = ctx.phi
    comps = phi.components
    if depth > ctx.depth_limit:
        raise ResourceLimit("stratification recursion too deep")
    if X.is_empty():
        return _trivial(comps, phi.ring, ctx.tring, X, Y)
    # Case 5 never triggers: every locally closed subset of A^1 is smooth
    PY = present(Y)
    if PY is not None and not singular_part(Y, PY).is_empty():
        raise PresentationUnsupported("singular target pieces are not supported")
    P = present(X)
    sing = singular_part(X, P)
    if not sing.is_empty():
        ctx.trace.append(f"{'  ' * depth}case4: peel the smooth locus")
        U = X.minus(sing.closed)
        a = _stratify(ctx, U, Y, depth + 1)
        b = _stratify(ctx, sing, Y, depth + 1)
        return source_glue(a, b, ambient=X)
    ydim = krull_dimension(Y.closure())
    if ydim >= 1:
        h = _critical_values(ctx, X, P)
        if h is not None:
            Z = Ideal(ctx.tring, [h])
            YZ = Y.within(Z)
            if not YZ.is_empty():
                ctx.trace.append(f"{'  ' * depth}case3: critical values {h}")
                hf = h.compose(list(comps))
                XU = X.minus(Ideal(phi.ring, [hf]))
                XZ = X.within(Ideal(phi.ring, [hf]))
                a = _stratify(ctx, XU, Y.minus(Z), depth + 1)
                b = _stratify(ctx, XZ, YZ, depth + 1)
                return target_glue(a, b, ambient=(X, Y))
    r = max_kernel_rank_on(phi, X)
    if r > 0:
        drop = Ideal(phi.ring, _minors_or_empty(kernel_matrix_rows(phi), phi.ring, r))
        XZ = X.within(drop)
        if not XZ.is_empty():
            ctx.trace.append(f"{'  ' * depth}case2: rank of Im(Df) jumps")
            a = _stratify(ctx, X.minus(drop), Y, depth + 1)
            b = _stratify(ctx, XZ, Y, depth + 1)
            return source_glue(a, b, ambient=X)
    ctx.trace.append(f"{'  ' * depth}case1: trivial")
    return _trivial(comps, phi.ring, ctx.tring, X, Y)


def target_ring_for(phi: PolynomialMorphism) -> PolyRing:
    return PolyRing(phi.ring.fresh_names("t", 1)[:1] if "t" in phi.ring.names else ("t",))


def functorial_stratify(phi: PolynomialMorphism, trace: Optional[List[str]] = None) -> StratifiedMorphism:
    """Stratified map for f: A^n -> A^1 built by the case recursion and the two gluings."""
    if phi.m != 1:
        raise InputError("only maps to the affine line are supported")
    tring = target_ring_for(phi)
    ctx = _Ctx(phi, tring)
    X = Piece.whole(phi.ring)
    Y = Piece.whole(tring)
    sm = _stratify(ctx, X, Y, 0)
    if trace is not None:
        trace.extend(ctx.trace)
    return canonical_labels(sm)


def trivial_morphism(phi: PolynomialMorphism) -> StratifiedMorphism:
    tring = target_ring_for(phi)
    return canonical_labels(_trivial(phi.components, phi.ring, tring, Piece.whole(phi.ring), Piece.whole(tring)))


def with_source(phi: PolynomialMorphism, D: StratDatum) -> StratifiedMorphism:
    """Pair a source stratification with the trivial target (A^1 as one stratum)."""
    tring = target_ring_for(phi)
    Y = Piece.whole(tring)
    return StratifiedMorphism(phi.components, D, StratDatum(tring, Poset(["T0"]), {"T0": Y}, Y),
                              {s: "T0" for s in D.labels()})


# ---------------------------------------------------------------------------
# Audit against B_f


def _cotangent_piece(piece: Piece, T: PolyRing) -> Piece:
    return Piece(piece.closed.change_ring(T), piece.excluded.change_ring(T))


def coarse_and_vertical_audit(sm: StratifiedMorphism, y: Sequence) -> dict:
    """Compare the B_f fiber over y with the union of conormals of stratum-fiber pieces."""
    ring = sm.source.ring
    phi = PolynomialMorphism(ring, sm.components)
    y = tuple(Fraction(v) for v in y)
    F = fiber_ideal(phi, y)
    T = F.ring
    n = phi.n
    dimF = krull_dimension(F)
    fiber_eqs = Ideal(ring, [c - v for c, v in zip(phi.components, y)])
    strata = []
    conormals = []
    vertical_ok = True
    unaudited = False
    for label in sm.source.labels():
        S = sm.source.pieces[label]
        piece = S.within(fiber_eqs)
        entry = {"label": str(label)}
        if piece.is_empty():
            entry["status"] = "empty"
            strata.append(entry)
            continue
        try:
            P = present(piece)
            if not singular_part(piece, P).is_empty():
                raise PresentationUnsupported("stratum meets the fiber in a singular set")
        except PresentationUnsupported as exc:
            entry["status"] = "unaudited"
            entry["reason"] = str(exc)
            unaudited = True
            strata.append(entry)
            continue
        CN = conormal_ideal(Ideal(ring, P.gens), P.codim, T) if P.gens else Ideal(T, [])
        CNp = Piece(CN, piece.excluded.change_ring(T))
        CNbar = CNp.closure()
        conormals.append(CNbar)
        # vertical extendability, stratum by stratum: B-fiber over the piece lies in the conormal
        over = _cotangent_piece(piece, T)
        here = _closure(_canon(F + over.closed), over.excluded)
        ok = inclusion_of_varieties(here, CNbar)
        vertical_ok = vertical_ok and ok
        entry.update({"codim": P.codim, "dim": P.dim, "status": "audited", "vertically_extendable_here": ok})
        strata.append(entry)
    certificate = None
    if dimF > n:
        # every conormal variety in T*A^n has dimension n
        vertical = False
        certificate = "dimension"
    elif unaudited:
        vertical = None if vertical_ok else False
    else:
        vertical = vertical_ok
    coarse = None
    C_json = None
    if not unaudited:
        C = intersect_all(conormals, T)
        coarse = inclusion_of_varieties(C, F)
        C_json = groebner_basis(C).to_json()
    if vertical is False or coarse is False:
        strong = False
    elif vertical is None or coarse is None:
        strong = None
    else:
        strong = True
    return {
        "coarse": coarse,
        "conormal_union": C_json,
        "fiber": [format_rational(v) for v in y],
        "fiber_dimension": dimF,
        "source_dimension": n,
        "strata": strata,
        "strongThom": strong,
        "vertical_certificate": certificate,
        "verticallyExtendable": vertical,
    }


def submersive_at(sm: StratifiedMorphism, label, point: Sequence) -> bool:
    """Does f restricted to the source stratum have surjective differential onto the target stratum at point?"""
    S = sm.source.pieces[label]
    P = present(S)
    Tp = sm.target.pieces[sm.alpha[label]]
    tdim = krull_dimension(Tp.closure())
    if tdim == 0:
        return True
    ring = sm.source.ring
    f = sm.components[0]
    grad = [f.diff(v).evaluate(point) for v in ring.names]
    rows = [[g.diff(v).evaluate(point) for v in ring.names] for g in P.gens]
    # f is submersive on the stratum iff grad is not in the span of the normal rows
    return exact_rank(rows + [grad]) > exact_rank(rows) if rows else any(grad)
