from __future__ import annotations

from fractions import Fraction

import pytest

from qtrans.arith import CyclotomicNumber
from qtrans.errors import DimensionMismatch, InputError, ScaleOutOfRange, WindowMismatch
from qtrans.padic import (
    IntegerPolyMap,
    LevelMeasure,
    Window,
    blowup_chart,
    closed_form_as_stated,
    closed_form_direct,
    coarsen,
    convolve,
    convolved_germs,
    delta,
    direction_ball_pushforwards,
    fourier,
    fourier_support,
    fourier_table_vs,
    germ_rank,
    haar_ball,
    mu_n,
    psi_measure,
    pushforward,
    refine,
    restrict,
    support_formula_as_stated,
    support_formula_direct,
    support_germs,
)


def test_haar_balls():
    mu = haar_ball(2, 1, 1, (0,), 0, 1)
    assert mu.values == {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}
    mu = haar_ball(2, 3, 2, (0, 0), 1, Fraction(1, 4))
    assert len(mu.values) == 16 and set(mu.values.values()) == {Fraction(1, 64)}
    assert haar_ball(3, 2, 2, (0, 0), 0, 0).values == {}
    with pytest.raises(ScaleOutOfRange):
        haar_ball(2, 2, 1, (0,), 3, 1)


def test_pushforward_examples():
    ident = IntegerPolyMap.from_strings("xy", ["x", "y"])
    mu = haar_ball(3, 2, 2, (1, 0), 1, Fraction(1, 9))
    assert pushforward(mu, ident) == mu
    push = pushforward(haar_ball(2, 1, 2, (0, 0), 0, 1), blowup_chart())
    assert push.values == {(0, 0): Fraction(1, 2), (1, 0): Fraction(1, 4), (1, 1): Fraction(1, 4)}
    const = IntegerPolyMap.from_strings("xy", ["3"])
    assert pushforward(mu, const).values == {(3,): Fraction(1, 9)}
    with pytest.raises(DimensionMismatch):
        pushforward(haar_ball(2, 1, 1, (0,), 0, 1), blowup_chart())


def test_integer_maps_only():
    with pytest.raises(InputError):
        IntegerPolyMap.from_strings("x", ["1/2*x"])


def test_convolution_examples():
    mu = mu_n(2, 1, 3)
    assert convolve(delta(2, 3, 2), mu) == mu
    u = haar_ball(3, 1, 2, (0, 0), 0, 1)
    assert convolve(u, u) == u
    with pytest.raises(WindowMismatch):
        convolve(mu, mu_n(2, 1, 4))
    with pytest.raises(WindowMismatch):
        convolve(restrict(mu, 1), mu)


def test_convolution_identity_at_level_four():
    mu = mu_n(2, 1, 4)
    assert psi_measure(2, 1, 4) == convolve(mu, mu)


def test_fourier_examples():
    F = fourier(haar_ball(3, 2, 2, (0, 0), 0, 1))
    one = CyclotomicNumber.from_rational(3, 2, 1)
    assert F[(0, 0)] == one
    assert all(v.is_zero() for B, v in F.items() if B != (0, 0))
    F = fourier(delta(2, 3, 1))
    assert all(v == CyclotomicNumber.from_rational(2, 3, 1) for v in F.values())


def test_fourier_of_mu1_is_rational_and_matches_direct_integral():
    mu = mu_n(2, 1, 3)
    assert fourier_table_vs(mu, closed_form_direct, 1) == []


def test_fourier_points_subset():
    mu = mu_n(3, 0, 2)
    F = fourier(mu)
    G = fourier(mu, [(1, 2), (4, 0)])
    assert G[(1, 2)] == F[(1, 2)] and G[(4, 0)] == F[(4, 0)]


@pytest.mark.parametrize("p,n", [(2, 0), (3, 0)])
def test_closed_forms_agree_when_n_is_zero(p, n):
    assert fourier_table_vs(mu_n(p, n, n + 2), closed_form_as_stated, n) == []


def test_closed_form_as_stated_differs_from_direct_integral_for_n_one():
    # at (a, b) = (0, 1/2), p = 2, n = 1 the integrand chi(b x y) is identically 1 on (2Z_2)^2
    assert closed_form_direct(2, 1, Fraction(0), Fraction(2)) == Fraction(1, 4)
    assert closed_form_as_stated(2, 1, Fraction(0), Fraction(2)) == Fraction(1, 8)


def test_restrict_examples():
    mu = mu_n(2, 1, 3)
    assert restrict(mu, 0) == mu
    assert restrict(delta(3, 2, 2, (1, 0)), 1).values == {}
    r = restrict(haar_ball(2, 2, 2, (0, 0), 0, 1), 1)
    assert len(r.values) == 4 and r.total_mass() == Fraction(1, 4)
    with pytest.raises(ScaleOutOfRange):
        restrict(mu, 4)


def test_germ_rank_examples():
    mu = mu_n(2, 0, 3)
    assert germ_rank([mu], 0) == 1
    assert germ_rank([mu, mu.scale(2)], 0) == 1
    assert germ_rank(convolved_germs(2, 6, 1, range(3)), 1) == 3
    with pytest.raises(WindowMismatch):
        germ_rank([mu, mu_n(3, 0, 3)], 0)


def test_support_germs_examples():
    mu = mu_n(2, 0, 3)
    assert support_germs([mu, mu], 1) == 1
    z = LevelMeasure(Window(2, 3, 2), {})
    assert support_germs([z, z], 1) == 1
    for p in (2, 3, 5):
        balls = direction_ball_pushforwards(p, 3, m=1)
        assert support_germs(balls, 1) == p


def test_support_formula_direct_matches_brute_force():
    for p, n, N in [(2, 1, 0), (2, 2, 1), (3, 1, 0), (2, 0, 1)]:
        k = n + 2
        mu = mu_n(p, n, k)
        got = fourier_support(restrict(convolve(mu, mu), N))
        assert got == support_formula_direct(p, k, n, N)


def test_support_formula_as_stated_coincides_in_small_cases():
    for p, n, N in [(2, 0, 0), (2, 1, 1), (3, 0, 1)]:
        k = n + 2
        mu = mu_n(p, n, k)
        assert fourier_support(restrict(convolve(mu, mu), N)) == support_formula_as_stated(p, k, n, N)


def test_level_change():
    mu = haar_ball(2, 2, 2, (1, 0), 1, Fraction(1, 4))
    assert coarsen(refine(mu, 4), 2) == mu
    with pytest.raises(ScaleOutOfRange):
        coarsen(mu, 3)


def test_measure_json_roundtrip():
    mu = mu_n(3, 1, 3)
    assert LevelMeasure.from_json(mu.to_json()) == mu
    # x = 0 mod 27 sends all 9 cosets of y to (0, 0), each of mass 1/729
    assert mu.to_json()["values"]["0,0"] == "1/81"
    with pytest.raises(InputError):
        LevelMeasure.from_json({"p": 2})


def test_window_checks():
    with pytest.raises(ScaleOutOfRange):
        Window(2, 2, 1, (3,))
    with pytest.raises(WindowMismatch):
        LevelMeasure(Window(2, 2, 1, (1,)), {(1,): 1})
