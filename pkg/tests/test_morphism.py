from __future__ import annotations

import pytest

from qtrans.errors import InputError, NotSubmersion, SizeOutOfRange
from qtrans.groebner import Ideal, groebner_basis, inclusion_of_varieties, krull_dimension, same_module
from qtrans.morphism import (
    NOT_QT_AT_FIBER,
    QT_AT_FIBER,
    PolynomialMorphism,
    b_phi_ideal,
    conormal_ideal,
    dagger_pullback,
    fiber_ideal,
    generic_fiber_dimension,
    ideal_from_json,
    inclusion_check,
    kernel_rank_at,
    kernel_vector_fields,
    qt_check_at,
    sheaf_fiber_dimension_at,
)
from qtrans.poly import PolyRing

FOUR_LINES = PolynomialMorphism.from_strings("xyz", ["x*y*(x+y)*(x+y*z)"])
CUBIC = PolynomialMorphism.from_strings("xyz", ["x^2*y*(x+y)"])
PSI = PolynomialMorphism.from_strings("xyzw", ["x+z", "x*y+z*w"])
BLOWUP = PolynomialMorphism.from_strings("xy", ["x", "x*y"])


def _strs(fields):
    return [[str(f) for f in v] for v in fields]


def test_kernel_of_blowup_chart_is_zero():
    assert kernel_vector_fields(BLOWUP) == ()


def test_kernel_of_cubic():
    K = kernel_vector_fields(CUBIC)
    R = CUBIC.ring
    expected = [[R.parse("x*(x+2*y)"), R.parse("-y*(3*x+2*y)"), R.zero()], [R.zero(), R.zero(), R.one()]]
    assert same_module(K, expected, R, 3)
    for v in K:
        for row in CUBIC.jacobian().rows:
            acc = R.zero()
            for a, b in zip(row, v):
                acc = acc + a * b
            assert acc.is_zero()


def test_kernel_of_psi():
    R = PSI.ring
    v = [[R.parse(s) for s in t] for t in (("-x", "y-w", "x", "0"), ("-z", "0", "z", "y-w"), ("0", "-z", "0", "x"))]
    assert same_module(kernel_vector_fields(PSI), v, R, 4)


def test_b_phi():
    assert b_phi_ideal(BLOWUP).is_zero()
    const = PolynomialMorphism.from_strings("x", ["1"])
    B = b_phi_ideal(const)
    assert B.same_as(Ideal(B.ring, [B.ring.parse("xi1")]))
    B = b_phi_ideal(PSI)
    T = B.ring
    expected = Ideal(T, [T.parse("-x*xi1+(y-w)*xi2+x*xi3"), T.parse("-z*xi1+z*xi3+(y-w)*xi4"),
                      T.parse("-z*xi2+x*xi4")])
    assert inclusion_of_varieties(B, expected) and inclusion_of_varieties(expected, B)


def test_fiber_ideals():
    ident = PolynomialMorphism.from_strings("x", ["x"])
    F = fiber_ideal(ident, [0])
    assert F.same_as(Ideal(F.ring, [F.ring.parse("x")]))
    assert krull_dimension(F) == 1
    F = fiber_ideal(BLOWUP, [0, 0])
    assert F.same_as(Ideal(F.ring, [F.ring.parse("x"), F.ring.parse("x*y")]))
    assert krull_dimension(F) == 3
    with pytest.raises(InputError):
        fiber_ideal(BLOWUP, [0])


@pytest.mark.parametrize("phi,y,dim,verdict", [
    (FOUR_LINES, [0], 4, NOT_QT_AT_FIBER),
    (CUBIC, [0], 3, QT_AT_FIBER),
    (PSI, [0, 0], 5, NOT_QT_AT_FIBER),
    (BLOWUP, [0, 0], 3, NOT_QT_AT_FIBER),
    (PolynomialMorphism.from_strings("x", ["x"]), [0], 1, QT_AT_FIBER),
    (FOUR_LINES, [1], 3, QT_AT_FIBER),
])
def test_qt_check(phi, y, dim, verdict):
    r = qt_check_at(phi, y)
    assert r.fiber_dimension == dim
    assert r.verdict == verdict
    assert r.to_json()["source_dimension"] == phi.n


@pytest.mark.parametrize("phi,dim", [
    (PolynomialMorphism.from_strings("xy", ["x"]), 2),
    (PolynomialMorphism.from_strings("x", ["x"]), 1),
    (FOUR_LINES, 3),
    (CUBIC, 3),
])
def test_generic_fiber_dimension(phi, dim):
    assert generic_fiber_dimension(phi) == dim


def test_dagger_pullback_projection():
    pr = PolynomialMorphism.from_strings("xyz", ["x", "y"])
    W = b_phi_ideal(PolynomialMorphism.from_strings("xy", ["x*y"]))
    D = dagger_pullback(pr, W)
    T = D.ring
    assert D.same_as(Ideal(T, [T.parse("x*xi1 - y*xi2"), T.parse("xi3")]))
    Z = dagger_pullback(pr, Ideal(W.ring, []))
    assert Z.same_as(Ideal(T, [T.parse("xi3")]))
    U = dagger_pullback(pr, Ideal(W.ring, [W.ring.one()]))
    assert groebner_basis(U).is_unit()


def test_dagger_requires_submersion():
    sq = PolynomialMorphism.from_strings("x", ["x^2"])
    Ty = PolyRing(("u", "eta"))
    with pytest.raises(NotSubmersion):
        dagger_pullback(sq, Ideal(Ty, [Ty.parse("u")]))
    with pytest.raises(InputError):
        dagger_pullback(sq, Ideal(PolyRing(("u",)), []))


def test_conormals():
    R2 = PolyRing(("x", "y"))
    C = conormal_ideal(Ideal(R2, [R2.parse("x"), R2.parse("y")]), 2)
    assert C.same_as(Ideal(C.ring, [C.ring.parse("x"), C.ring.parse("y")]))
    C = conormal_ideal(Ideal(R2, [R2.parse("x")]), 1)
    assert C.same_as(Ideal(C.ring, [C.ring.parse("x"), C.ring.parse("xi2")]))
    C = conormal_ideal(Ideal(R2, [R2.parse("x^2+y^2-1")]), 1)
    assert C.same_as(Ideal(C.ring, [C.ring.parse("x^2+y^2-1"), C.ring.parse("2*x*xi2 - 2*y*xi1")]))
    with pytest.raises(SizeOutOfRange):
        conormal_ideal(Ideal(R2, [R2.parse("x")]), 2)


def test_inclusion_check():
    R = PolyRing(("x", "y"))
    I = lambda *g: Ideal(R, [R.parse(s) for s in g])
    assert inclusion_check(I("x^2"), I("x"))
    assert inclusion_check(I("x"), I("x*y"))
    assert not inclusion_check(I("x*y"), I("x"))


def test_pointwise_rank():
    assert kernel_rank_at(CUBIC, (1, 1, 0)) == 2
    assert kernel_rank_at(CUBIC, (0, 0, 5)) == 1
    assert sheaf_fiber_dimension_at(CUBIC, (0, 0, 5)) == 2
    assert sheaf_fiber_dimension_at(BLOWUP, (0, 0)) == 2


def test_json_roundtrip():
    assert PolynomialMorphism.from_json(PSI.to_json()) == PSI
    I = ideal_from_json({"vars": ["a", "b"], "generators": ["a*b", "a-1"]})
    assert I.ring.names == ("a", "b")
    with pytest.raises(InputError):
        ideal_from_json({"generators": []})
