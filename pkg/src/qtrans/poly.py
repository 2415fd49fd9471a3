"""Multivariate polynomials over Q or F_p with dense exponent tuples.

A :class:`Polynomial` is an immutable mapping ``exponent tuple -> coefficient``.
Monomial orders are represented by sort keys: a monomial is larger than another
exactly when its key tuple is larger, which lets the Groebner code compare and
sort monomials with plain tuple comparison.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .arith import check_prime, format_rational
from .errors import BadPrime, InputError, PolySyntaxError, SizeOutOfRange, UnknownVariable

Exp = Tuple[int, ...]

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


# ---------------------------------------------------------------------------
# Rings and orders


@dataclass(frozen=True)
class PolyRing:
    names: Tuple[str, ...]
    modulus: Optional[int] = None

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(set(names)) != len(names):
            raise InputError(f"duplicate variable names in {names}")
        for n in names:
            if not _NAME_RE.match(n):
                raise InputError(f"invalid variable name {n!r}")
        if self.modulus is not None:
            check_prime(self.modulus)

    @property
    def nvars(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariable(f"{name!r} is not a variable of {self.names}") from None

    def coeff(self, c):
        if self.modulus is not None:
            if isinstance(c, Fraction):
                if c.denominator % self.modulus == 0:
                    raise BadPrime(f"denominator of {c} vanishes mod {self.modulus}")
                return c.numerator * pow(c.denominator, -1, self.modulus) % self.modulus
            return int(c) % self.modulus
        return Fraction(c)

    def zero(self) -> "Polynomial":
        return Polynomial(self, {})

    def one(self) -> "Polynomial":
        return self.const(1)

    def const(self, c) -> "Polynomial":
        return Polynomial(self, {(0,) * self.nvars: c})

    def var(self, name: str) -> "Polynomial":
        i = self.index(name)
        e = [0] * self.nvars
        e[i] = 1
        return Polynomial(self, {tuple(e): 1})

    def gens(self) -> List["Polynomial"]:
        return [self.var(n) for n in self.names]

    def monomial(self, exp: Sequence[int], c=1) -> "Polynomial":
        return Polynomial(self, {tuple(exp): c})

    def fresh_names(self, prefix: str, count: int) -> Tuple[str, ...]:
        """``count`` names ``prefix1..`` not clashing with this ring's variables."""
        taken = set(self.names)
        while True:
            cand = tuple(f"{prefix}{i + 1}" for i in range(count))
            if not taken.intersection(cand):
                return cand
            prefix = prefix + "_"

    def extend(self, extra: Sequence[str]) -> "PolyRing":
        return PolyRing(self.names + tuple(extra), self.modulus)

    def cotangent(self) -> "PolyRing":
        """Coordinate ring of T*A^n: base variables followed by dual variables."""
        return self.extend(self.fresh_names("xi", self.nvars))

    def with_modulus(self, p: Optional[int]) -> "PolyRing":
        return PolyRing(self.names, p)

    def parse(self, text: str) -> "Polynomial":
        return parse_polynomial(text, self)


def _grevlex_key(e: Exp) -> tuple:
    return (sum(e),) + tuple(-x for x in reversed(e))


def _lex_key(e: Exp) -> tuple:
    return e


@dataclass(frozen=True)
class MonomialOrder:
    """lex, grevlex, or a block order: ``blocks`` = ((size, inner kind), ...)."""

    kind: str = "grevlex"
    blocks: Tuple[Tuple[int, str], ...] = ()

    def __post_init__(self):
        if self.kind not in ("lex", "grevlex", "block"):
            raise InputError(f"unknown monomial order {self.kind!r}")
        if self.kind == "block":
            if not self.blocks:
                raise InputError("block order needs at least one block")
            for size, inner in self.blocks:
                if size < 0 or inner not in ("lex", "grevlex"):
                    raise InputError(f"bad block {(size, inner)}")

    def key_function(self) -> Callable[[Exp], tuple]:
        return _key_function(self)

    def key(self, exp: Exp) -> tuple:
        return _key_function(self)(tuple(exp))


@lru_cache(maxsize=None)
def _key_function(order: MonomialOrder) -> Callable[[Exp], tuple]:
    if order.kind == "lex":
        return _lex_key
    if order.kind == "grevlex":
        return _grevlex_key
    spans = []
    start = 0
    for size, inner in order.blocks:
        spans.append((start, start + size, _lex_key if inner == "lex" else _grevlex_key))
        start += size

    def key(e: Exp) -> tuple:
        out: tuple = ()
        for a, b, f in spans:
            out += f(e[a:b])
        return out

    return key


LEX = MonomialOrder("lex")
GREVLEX = MonomialOrder("grevlex")


def block_order(sizes: Sequence[int], inner: str = "grevlex") -> MonomialOrder:
    return MonomialOrder("block", tuple((s, inner) for s in sizes))


def order_from_name(name: str) -> MonomialOrder:
    if name == "lex":
        return LEX
    if name == "grevlex":
        return GREVLEX
    raise InputError(f"unknown order {name!r} (expected lex or grevlex)")


# ---------------------------------------------------------------------------
# Polynomials


class Polynomial:
    __slots__ = ("ring", "terms", "_hash")

    def __init__(self, ring: PolyRing, terms: Mapping[Exp, object] = None, *, _clean: bool = False):
        self.ring = ring
        if _clean:
            self.terms = terms
        else:
            clean: Dict[Exp, object] = {}
            n = ring.nvars
            for e, c in (terms or {}).items():
                e = tuple(e)
                if len(e) != n:
                    raise InputError(f"exponent {e} does not fit ring with {n} variables")
                c = ring.coeff(c)
                if c:
                    clean[e] = clean.get(e, 0) + c
            self.terms = {e: c for e, c in clean.items() if c}
            if ring.modulus is not None:
                self.terms = {e: c % ring.modulus for e, c in self.terms.items() if c % ring.modulus}
        self._hash = None

    # -- basic protocol -------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.ring == other.ring and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == self.ring.const(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring, frozenset(self.terms.items())))
        return self._hash

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.ring != self.ring:
                raise InputError(f"ring mismatch: {self.ring.names} vs {other.ring.names}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.ring.const(other)
        return NotImplemented

    def _make(self, terms: Dict[Exp, object]) -> "Polynomial":
        m = self.ring.modulus
        if m is None:
            return Polynomial(self.ring, {e: c for e, c in terms.items() if c}, _clean=True)
        return Polynomial(self.ring, {e: c % m for e, c in terms.items() if c % m}, _clean=True)

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return self._make(out)

    __radd__ = __add__

    def __neg__(self):
        return self._make({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) - c
        return self._make(out)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out: Dict[Exp, object] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return self._make(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise InputError("negative polynomial power")
        result = self.ring.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c) -> "Polynomial":
        c = self.ring.coeff(c)
        return self._make({e: v * c for e, v in self.terms.items()})

    def mul_monomial(self, exp: Exp, c=1) -> "Polynomial":
        return self._make({tuple(a + b for a, b in zip(e, exp)): v * c for e, v in self.terms.items()})

    # -- inspection -----------------------------------------------------------

    def sorted_terms(self, order: MonomialOrder = GREVLEX) -> List[Tuple[Exp, object]]:
        key = order.key_function()
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    def leading_term(self, order: MonomialOrder = GREVLEX) -> Tuple[Exp, object]:
        key = order.key_function()
        e = max(self.terms, key=key)
        return e, self.terms[e]

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, name: str) -> int:
        i = self.ring.index(name)
        return max((e[i] for e in self.terms), default=-1)

    def support(self) -> frozenset:
        """Indices of the variables that occur."""
        return frozenset(i for e in self.terms for i, x in enumerate(e) if x)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_coefficient(self):
        return self.terms.get((0,) * self.ring.nvars, 0)

    # -- calculus and evaluation ---------------------------------------------

    def diff(self, name: str) -> "Polynomial":
        return partial_derivative(self, name)

    def evaluate(self, point: Sequence) -> object:
        """Exact value at a point (rationals over Q, residues over F_p)."""
        if len(point) != self.ring.nvars:
            raise InputError("point has the wrong number of coordinates")
        m = self.ring.modulus
        total = 0
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v = v * (pow(x, k, m) if m else x ** k)
            total += v
        if m:
            return total % m
        return Fraction(total)

    def compose(self, images: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute variable i by ``images[i]`` (all in one common ring)."""
        if len(images) != self.ring.nvars:
            raise InputError("need one image per variable")
        if not images:
            return self
        target = images[0].ring
        cache: Dict[Tuple[int, int], Polynomial] = {}

        def power(i, k):
            if (i, k) not in cache:
                cache[(i, k)] = images[i] ** k
            return cache[(i, k)]

        out = target.zero()
        acc: Dict[Exp, object] = {}
        for e, c in self.terms.items():
            t = target.const(c)
            for i, k in enumerate(e):
                if k:
                    t = t * power(i, k)
            for e2, c2 in t.terms.items():
                acc[e2] = acc.get(e2, 0) + c2
        return out._make(acc)

    def substitute(self, values: Mapping[str, object]) -> "Polynomial":
        """Replace some variables by polynomials of the same ring or by constants."""
        images = []
        for name in self.ring.names:
            if name in values:
                v = values[name]
                images.append(v if isinstance(v, Polynomial) else self.ring.const(v))
            else:
                images.append(self.ring.var(name))
        return self.compose(images)

    def change_ring(self, ring: PolyRing) -> "Polynomial":
        """Move into ``ring`` by matching variable names (only used variables must exist there)."""
        if ring == self.ring:
            return self
        idx = {i: ring.index(self.ring.names[i]) for i in sorted(self.support())}
        out = {}
        for e, c in self.terms.items():
            new = [0] * ring.nvars
            for i, x in enumerate(e):
                if x:
                    new[idx[i]] = x
            out[tuple(new)] = c
        return Polynomial(ring, out)

    def monic(self, order: MonomialOrder = GREVLEX) -> "Polynomial":
        if not self.terms:
            return self
        _, c = self.leading_term(order)
        m = self.ring.modulus
        inv = pow(c, -1, m) if m else 1 / Fraction(c)
        return self._make({e: v * inv for e, v in self.terms.items()})

    def primitive(self) -> "Polynomial":
        """Scale to integer coefficients with gcd 1 and positive grevlex-leading coefficient."""
        if not self.terms or self.ring.modulus is not None:
            return self
        from math import gcd, lcm

        den = 1
        for c in self.terms.values():
            den = lcm(den, Fraction(c).denominator)
        ints = {e: int(Fraction(c) * den) for e, c in self.terms.items()}
        g = 0
        for v in ints.values():
            g = gcd(g, v)
        _, lc = max(ints.items(), key=lambda t: _grevlex_key(t[0]))
        if lc < 0:
            g = -g
        return Polynomial(self.ring, {e: Fraction(v // g) for e, v in ints.items()}, _clean=True)

    # -- printing -------------------------------------------------------------

    def __str__(self):
        return format_polynomial(self)

    def __repr__(self):
        return f"Polynomial({format_polynomial(self)!r}, vars={self.ring.names})"


def format_monomial(e: Exp, names: Sequence[str]) -> str:
    parts = []
    for n, k in zip(names, e):
        if k == 1:
            parts.append(n)
        elif k > 1:
            parts.append(f"{n}^{k}")
    return "*".join(parts)


def format_polynomial(f: Polynomial) -> str:
    """Canonical text: grevlex-descending terms, explicit ``*`` and ``^``."""
    if not f.terms:
        return "0"
    out = []
    for i, (e, c) in enumerate(f.sorted_terms(GREVLEX)):
        c = Fraction(c)
        neg = c < 0
        a = -c if neg else c
        mon = format_monomial(e, f.ring.names)
        if not mon:
            body = format_rational(a)
        elif a == 1:
            body = mon
        else:
            body = f"{format_rational(a)}*{mon}"
        if i == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


# ---------------------------------------------------------------------------
# Parser


_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


def _tokenize(text: str):
    pos = 0
    toks = []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m.group(0).strip() == "":
            break
        start = m.start(1) if m.group(1) else m.start(2) if m.group(2) else m.start(3)
        if m.group(1):
            toks.append(("num", m.group(1), start))
        elif m.group(2):
            toks.append(("name", m.group(2), start))
        else:
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise PolySyntaxError(f"unexpected character {ch!r}", start)
            toks.append((ch, ch, start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, ring: PolyRing):
        self.toks = _tokenize(text)
        self.i = 0
        self.ring = ring

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise PolySyntaxError(f"expected {kind!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def expr(self) -> Polynomial:
        result = self.term()
        while self.peek()[0] in "+-" and self.peek()[0] != "end":
            op = self.take()[0]
            rhs = self.term()
            result = result + rhs if op == "+" else result - rhs
        return result

    def term(self) -> Polynomial:
        result = self.factor()
        while self.peek()[0] == "*":
            self.take()
            result = result * self.factor()
        return result

    def factor(self) -> Polynomial:
        tok = self.peek()
        if tok[0] in ("-", "+"):
            self.take()
            inner = self.factor()
            return -inner if tok[0] == "-" else inner
        base = self.base()
        if self.peek()[0] == "^":
            self.take()
            k = int(self.take("num")[1])
            base = base ** k
        return base

    def base(self) -> Polynomial:
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            num = int(tok[1])
            if self.peek()[0] == "/":
                self.take()
                den_tok = self.take("num")
                den = int(den_tok[1])
                if den == 0:
                    raise PolySyntaxError("zero denominator", den_tok[2])
                return self.ring.const(Fraction(num, den))
            return self.ring.const(num)
        if tok[0] == "name":
            self.take()
            if tok[1] not in self.ring.names:
                raise UnknownVariable(f"{tok[1]!r} is not a variable of {self.ring.names}")
            return self.ring.var(tok[1])
        if tok[0] == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        what = "end of input" if tok[0] == "end" else repr(tok[1])
        raise PolySyntaxError(f"unexpected {what}", tok[2])


def parse_polynomial(text: str, ring: PolyRing) -> Polynomial:
    p = _Parser(text, ring)
    result = p.expr()
    tok = p.peek()
    if tok[0] != "end":
        raise PolySyntaxError(f"trailing input {tok[1]!r}", tok[2])
    return result


# ---------------------------------------------------------------------------
# Differentiation and matrices


def partial_derivative(f: Polynomial, name: str) -> Polynomial:
    i = f.ring.index(name)
    out = {}
    for e, c in f.terms.items():
        k = e[i]
        if k:
            ne = list(e)
            ne[i] = k - 1
            out[tuple(ne)] = c * k
    return f._make(out)


class PolyMatrix:
    """Rectangular matrix of polynomials over one ring."""

    __slots__ = ("ring", "rows")

    def __init__(self, ring: PolyRing, rows: Sequence[Sequence[Polynomial]]):
        rows = [tuple(r) for r in rows]
        if rows and len({len(r) for r in rows}) != 1:
            raise InputError("matrix rows have different lengths")
        for r in rows:
            for x in r:
                if x.ring != ring:
                    raise InputError("matrix entry from a different ring")
        self.ring = ring
        self.rows = tuple(rows)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.rows), (len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, PolyMatrix) and self.ring == other.ring and self.rows == other.rows

    def column(self, j: int) -> Tuple[Polynomial, ...]:
        return tuple(r[j] for r in self.rows)

    def columns(self) -> List[Tuple[Polynomial, ...]]:
        return [self.column(j) for j in range(self.shape[1])]

    def transpose(self) -> "PolyMatrix":
        return PolyMatrix(self.ring, self.columns())

    def stack(self, row: Sequence[Polynomial]) -> "PolyMatrix":
        return PolyMatrix(self.ring, list(self.rows) + [tuple(row)])

    def evaluate(self, point: Sequence) -> List[List[object]]:
        return [[x.evaluate(point) for x in r] for r in self.rows]

    def __matmul__(self, other: "PolyMatrix") -> "PolyMatrix":
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise InputError("shape mismatch in matrix product")
        zero = self.ring.zero()
        rows = []
        for i in range(n):
            row = []
            for j in range(m):
                acc = zero
                for t in range(k):
                    acc = acc + self.rows[i][t] * other.rows[t][j]
                row.append(acc)
            rows.append(row)
        return PolyMatrix(self.ring, rows)

    def __repr__(self):
        return "PolyMatrix([" + ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self.rows) + "])"


def determinant(rows: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Laplace expansion along the first row; fine for the small sizes used here."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = rows[0][0].ring.zero()
    for j in range(n):
        if rows[0][j].is_zero():
            continue
        sub = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * determinant(sub)
        total = total + term if j % 2 == 0 else total - term
    return total


def minors(M: PolyMatrix, size: int) -> List[Polynomial]:
    """All size x size minors, rows-combination major, then column combinations."""
    nr, nc = M.shape
    if size < 1 or size > min(nr, nc):
        raise SizeOutOfRange(f"minor size {size} outside 1..{min(nr, nc)}")
    out = []
    for rs in combinations(range(nr), size):
        for cs in combinations(range(nc), size):
            out.append(determinant([[M.rows[i][j] for j in cs] for i in rs]))
    return out


def jacobian(components: Sequence[Polynomial], ring: Optional[PolyRing] = None,
             variables: Optional[Sequence[str]] = None) -> PolyMatrix:
    """m x n matrix of partial derivatives d(component_i)/d(variable_j)."""
    if ring is None:
        ring = components[0].ring
    names = ring.names if variables is None else tuple(variables)
    rows = [[partial_derivative(f, v) for v in names] for f in components]
    return PolyMatrix(ring, rows)


def reduce_mod_p(f: Polynomial, p: int) -> Polynomial:
    check_prime(p)
    if f.ring.modulus is not None:
        raise InputError("polynomial is already over a prime field")
    ring = f.ring.with_modulus(p)
    out = {}
    for e, c in f.terms.items():
        c = Fraction(c)
        if c.denominator % p == 0:
            raise BadPrime(f"coefficient {c} has denominator divisible by {p}")
        v = c.numerator * pow(c.denominator, -1, p) % p
        if v:
            out[e] = v
    return Polynomial(ring, out, _clean=True)


def polynomial_ring(names: Iterable[str], modulus: Optional[int] = None) -> PolyRing:
    return PolyRing(tuple(names), modulus)
