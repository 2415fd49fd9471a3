from __future__ import annotations

import random
from fractions import Fraction

import pytest

from qtrans.errors import BadPrime, PolySyntaxError, SizeOutOfRange, UnknownVariable
from qtrans.poly import (
    LEX,
    PolyMatrix,
    PolyRing,
    jacobian,
    minors,
    partial_derivative,
    reduce_mod_p,
)

R3 = PolyRing(("x", "y", "z"))
FOUR_LINES = "x*y*(x+y)*(x+y*z)"


def test_parse_expands_products():
    f = R3.parse(FOUR_LINES)
    g = R3.parse("x^3*y + x^2*y^2 + x^2*y^2*z + x*y^3*z")
    assert f == g
    assert R3.parse("x^2*y*(x+y)") == R3.parse("x^3*y + x^2*y^2")


def test_parse_matches_evaluation():
    f = R3.parse(FOUR_LINES)
    rng = random.Random(1)
    for _ in range(20):
        x, y, z = (Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(3))
        assert f.evaluate((x, y, z)) == x * y * (x + y) * (x + y * z)


@pytest.mark.parametrize("text", ["x+*y", "x^", "(x+y", "x y)", "2^x", ""])
def test_syntax_errors(text):
    with pytest.raises(PolySyntaxError):
        R3.parse(text)


def test_syntax_error_position():
    with pytest.raises(PolySyntaxError) as info:
        R3.parse("x+*y")
    assert info.value.position == 2


def test_unknown_variable():
    with pytest.raises(UnknownVariable):
        R3.parse("x + w")


def test_canonical_printing_is_stable():
    f = R3.parse("1/2*x*y - x^2 - 3")
    assert str(f) == "-x^2 + 1/2*x*y - 3"
    assert R3.parse(str(f)) == f


def test_derivatives():
    R2 = PolyRing(("x", "y"))
    assert partial_derivative(R2.parse("x^3*y + x^2*y^2"), "x") == R2.parse("3*x^2*y + 2*x*y^2")
    assert partial_derivative(R3.parse(FOUR_LINES), "z") == R3.parse("x^2*y^2 + x*y^3")
    assert partial_derivative(R2.parse("7"), "x").is_zero()


def test_jacobians():
    R2 = PolyRing(("x", "y"))
    J = jacobian([R2.parse("x"), R2.parse("x*y")], R2)
    assert [[str(e) for e in r] for r in J.rows] == [["1", "0"], ["y", "x"]]
    I = jacobian([R2.parse("x"), R2.parse("y")], R2)
    assert [[str(e) for e in r] for r in I.rows] == [["1", "0"], ["0", "1"]]
    R4 = PolyRing(("x", "y", "z", "w"))
    Jpsi = jacobian([R4.parse("x+z"), R4.parse("x*y+z*w")], R4)
    assert [str(e) for e in Jpsi.rows[1]] == ["y", "x", "w", "z"]


def test_minors():
    R2 = PolyRing(("x", "y"))
    T = R2.cotangent()
    one, zero = R2.one(), R2.zero()
    assert [str(m) for m in minors(PolyMatrix(R2, [[one, zero], [zero, one]]), 2)] == ["1"]
    M = PolyMatrix(T, [[T.parse("2*x"), T.parse("2*y")], [T.parse("xi1"), T.parse("xi2")]])
    assert minors(M, 2) == [T.parse("2*x*xi2 - 2*y*xi1")]
    J = PolyMatrix(R2, [[one, zero], [R2.parse("y"), R2.parse("x")]])
    assert [str(m) for m in minors(J, 1)] == ["1", "0", "y", "x"]
    with pytest.raises(SizeOutOfRange):
        minors(J, 3)


def test_reduction_mod_p():
    R2 = PolyRing(("x", "y"))
    f = reduce_mod_p(R2.parse("x^3*y + x^2*y^2"), 2)
    assert str(f) == "x^3*y + x^2*y^2"
    assert reduce_mod_p(R2.parse("3*x"), 3).is_zero()
    with pytest.raises(BadPrime):
        reduce_mod_p(R2.parse("1/2*x"), 2)


def test_lex_leading_term():
    R2 = PolyRing(("x", "y"))
    f = R2.parse("y^5 + x")
    assert f.leading_term(LEX)[0] == (1, 0)
    assert f.leading_term()[0] == (0, 5)


def test_compose_and_arithmetic():
    R2 = PolyRing(("x", "y"))
    f = R2.parse("x*y - 1")
    g = f.compose([R2.parse("x+1"), R2.parse("y")])
    assert g == R2.parse("x*y + y - 1")
    assert (f + R2.one()) * R2.parse("2") == R2.parse("2*x*y")
    assert f ** 2 == R2.parse("x^2*y^2 - 2*x*y + 1")
