from __future__ import annotations

import pytest

from qtrans.errors import InputError
from qtrans.groebner import Ideal
from qtrans.morphism import PolynomialMorphism
from qtrans.poly import PolyRing
from qtrans.stratify import (
    Piece,
    Poset,
    StratDatum,
    StratifiedMorphism,
    coarse_and_vertical_audit,
    functorial_stratify,
    product_poset,
    rank_stratification,
    reg_stratify,
    source_glue,
    stacked_union,
    target_glue,
    trivial_morphism,
    validate_morphism,
    validate_stratification,
    with_source,
)

R = PolyRing(("x", "y"))


def I(*gens, ring=R):
    return Ideal(ring, [ring.parse(g) for g in gens])


def test_poset_basics():
    P = Poset.chain(["a", "b", "c"])
    assert P.leq("c", "a") and not P.leq("a", "c")
    assert P.height("a") == 2
    with pytest.raises(InputError):
        Poset(["a", "b"], [("a", "b"), ("b", "a")])
    with pytest.raises(InputError):
        Poset(["a", "b", "c"], [("a", "b"), ("b", "c")])
    Q = Poset.closure_of(["a", "b", "c"], [("a", "b"), ("b", "c")])
    assert Q.leq("a", "c")
    assert Poset.from_json(Q.to_json()).rel == Q.rel


def test_product_and_stack():
    A = Poset.chain(["1", "0"])
    assert len(product_poset(A, A)) == 4
    S = stacked_union(Poset(["u"]), Poset(["z"]))
    assert S.lt(("Z", "z"), ("U", "u"))


def test_validation_examples():
    D = StratDatum(R, Poset.chain(["1", "0"]), {"1": Piece(I(), I("x*y")), "0": Piece(I("x*y"), I("1"))})
    assert validate_stratification(D)["valid"]
    D2 = StratDatum(R, Poset.chain(["0", "1"]), {"1": Piece(I(), I("x*y")), "0": Piece(I("x*y"), I("1"))})
    v = validate_stratification(D2)
    assert not v["valid"] and not v["closure"] and v["disjoint"] and v["covering"]
    D3 = StratDatum(R, Poset(["a", "b"]), {"a": Piece(I("x"), I("1")), "b": Piece(I("y"), I("1"))})
    v = validate_stratification(D3)
    assert not v["disjoint"] and not v["covering"]


def test_strat_datum_json_roundtrip():
    D = StratDatum(R, Poset.chain(["1", "0"]), {"1": Piece(I(), I("x*y")), "0": Piece(I("x*y"), I("1"))})
    E = StratDatum.from_json(D.to_json())
    assert E.to_json() == D.to_json()


@pytest.mark.parametrize("gen,count", [("x*y", 2), ("x^2+y^2-1", 1), ("y^2-x^3", 2)])
def test_reg_chains(gen, count):
    D = reg_stratify(I(gen))
    assert len(D.labels()) == count
    assert validate_stratification(D)["valid"]


def test_reg_of_node_bottom_is_origin():
    D = reg_stratify(I("x*y"))
    bottom = [p for p in D.labels() if D.poset.height(p) == 0][0]
    assert D.pieces[bottom].closure().same_as(I("x", "y"))


def _count(sm):
    return len(sm.source.labels()), len(sm.target.labels())


def test_submersion_is_trivial():
    phi = PolynomialMorphism.from_strings("x", ["x"])
    sm = functorial_stratify(phi)
    assert _count(sm) == (1, 1)
    audit = coarse_and_vertical_audit(sm, [0])
    assert audit["strongThom"] is True


def test_square_map():
    sm = functorial_stratify(PolynomialMorphism.from_strings("x", ["x^2"]))
    assert _count(sm) == (2, 2)
    assert validate_morphism(sm)["valid"]
    top = [t for t in sm.target.labels() if sm.target.poset.height(t) == 1][0]
    assert sm.target.pieces[top].excluded.same_as(I("t", ring=sm.target.ring))


def test_node_map():
    phi = PolynomialMorphism.from_strings("xy", ["x*y"])
    trace = []
    sm = functorial_stratify(phi, trace)
    assert _count(sm) == (3, 2)
    assert validate_morphism(sm)["valid"]
    assert sm.source.poset.height("S0") == 2
    audit = coarse_and_vertical_audit(sm, [0])
    assert audit["verticallyExtendable"] is True
    assert audit["coarse"] is True
    assert audit["strongThom"] is True
    assert trace


def test_cubic_is_strong_thom_at_zero():
    phi = PolynomialMorphism.from_strings("xyz", ["x^2*y*(x+y)"])
    sm = functorial_stratify(phi)
    assert validate_morphism(sm)["valid"]
    assert coarse_and_vertical_audit(sm, [0])["strongThom"] is True


def test_rank_stratifications():
    blow = PolynomialMorphism.from_strings("xy", ["x", "x*y"])
    assert len(rank_stratification(blow).labels()) == 1
    const = PolynomialMorphism.from_strings("x", ["1"])
    D = rank_stratification(const)
    assert D.labels() == ["fiberdim0"]
    cubic = PolynomialMorphism.from_strings("xyz", ["x^2*y*(x+y)"])
    D = rank_stratification(cubic)
    assert len(D.labels()) == 2
    assert validate_stratification(D)["valid"]


def test_four_lines_not_vertically_extendable():
    phi = PolynomialMorphism.from_strings("xyz", ["x*y*(x+y)*(x+y*z)"])
    D = rank_stratification(phi)
    assert validate_stratification(D)["valid"]
    audit = coarse_and_vertical_audit(with_source(phi, D), [0])
    assert audit["verticallyExtendable"] is False
    assert audit["strongThom"] is False


def _half(components, source_piece, target_pieces, tring):
    """One source piece mapping to the top of a chain of target pieces."""
    labels = list(target_pieces)
    target = StratDatum(tring, Poset.chain(labels), target_pieces, Piece.whole(tring))
    source = StratDatum(R, Poset(["s"]), {"s": source_piece}, source_piece)
    return StratifiedMorphism(components, source, target, {"s": labels[0]})


def test_target_glue_stacks_posets():
    tring = PolyRing(("t",))
    comps = (R.parse("x"),)
    a = _half(comps, Piece(I(), I("x")), {"u": Piece(I(ring=tring), I("t", ring=tring))}, tring)
    b = _half(comps, Piece(I("x"), I("1")), {"z": Piece(I("t", ring=tring), I("1", ring=tring))}, tring)
    g = target_glue(a, b, I("t", ring=tring))
    assert g.target.poset.lt(("Z", "z"), ("U", "u"))
    assert len(g.source.labels()) == 2


def test_source_glue_two_by_two():
    tring = PolyRing(("t",))
    comps = (R.parse("x"),)
    tp = {"u1": Piece(I(ring=tring), I("t", ring=tring)), "u0": Piece(I("t", ring=tring), I("1", ring=tring))}
    a = _half(comps, Piece(I(), I("y")), dict(tp), tring)
    b = _half(comps, Piece(I("y"), I("1")), dict(tp), tring)
    g = source_glue(a, b, I("y"))
    assert len(g.target.labels()) == 2
    assert len(g.source.labels()) == 2 * 2
    for s, t in g.alpha.items():
        assert s[1] == t


def test_trivial_morphism():
    sm = trivial_morphism(PolynomialMorphism.from_strings("xy", ["x+y"]))
    assert _count(sm) == (1, 1)
