import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from poincaredist.errors import DegenerateQuadrupleError, DomainError
from poincaredist.intervals import (
    Interval,
    PointQuadruple,
    cross_ratio,
    cross_ratio_alt,
    poincare_coordinate,
    poincare_distance,
    poincare_inverse_coordinate,
)
from poincaredist.maps import affine_normalizer

LOG3 = 1.0986122886681098


def test_cross_ratio_basic():
    assert cross_ratio(PointQuadruple(0, 1, 2, 3)) == pytest.approx(0.25, abs=1e-15)
    assert cross_ratio_alt(PointQuadruple(0, 1, 2, 3)) == pytest.approx(1 / 3, abs=1e-15)


def test_cross_ratio_middle_collapse():
    # Cr -> 1 as the two middle points merge
    eps = 1e-6
    val = cross_ratio(PointQuadruple(0, 0.5, 0.5 + eps, 1))
    assert abs(val - 1.0) < 1e-5


def test_cross_ratio_moebius_image():
    # image of (0,1,2,3) under x -> 1/(x+1), reordered increasingly
    pts = sorted(1.0 / (x + 1.0) for x in (0, 1, 2, 3))
    assert cross_ratio(PointQuadruple(*pts)) == pytest.approx(0.25, rel=1e-12)


def test_cross_ratio_alt_moebius_image():
    pts = [x / (x + 1.0) for x in (0, 1, 2, 3)]
    assert cross_ratio_alt(PointQuadruple(*pts)) == pytest.approx(1 / 3, rel=1e-12)


def test_degenerate_quadruple_rejected():
    with pytest.raises(DegenerateQuadrupleError):
        PointQuadruple(0, 1, 1 + 1e-16, 3)
    with pytest.raises(DegenerateQuadrupleError):
        PointQuadruple(0, -1, 2, 3)


def test_interval_invariants():
    with pytest.raises(DomainError):
        Interval(1.0, 1.0)
    with pytest.raises(DomainError):
        Interval(2.0, 1.0)
    assert Interval(2.0, 6.0).length == 4.0


def test_poincare_coordinate_closed_form():
    I = Interval(0.0, 1.0)
    assert poincare_coordinate(I, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert poincare_coordinate(I, 0.75) == pytest.approx(LOG3, rel=1e-14)
    assert poincare_coordinate(Interval(2.0, 6.0), 4.0) == pytest.approx(0.0, abs=1e-15)


def test_poincare_coordinate_out_of_domain():
    I = Interval(0.0, 1.0)
    for x in (-0.5, 0.0, 1.0, 1.5):
        with pytest.raises(DomainError):
            poincare_coordinate(I, x)


def test_poincare_distance_values():
    I = Interval(0.0, 1.0)
    assert poincare_distance(I, 0.3, 0.3) == 0.0
    assert poincare_distance(I, 0.25, 0.75) == pytest.approx(2 * LOG3, rel=1e-13)
    assert poincare_distance(I, 0.5, 0.75) == pytest.approx(LOG3, rel=1e-13)
    # distance equals |log Cr(lo, x, y, hi)| directly
    direct = abs(math.log(cross_ratio(PointQuadruple(0.0, 0.25, 0.75, 1.0))))
    assert poincare_distance(I, 0.25, 0.75) == pytest.approx(direct, rel=1e-13)


def test_affine_normalizer_examples():
    ident = affine_normalizer(Interval(0.0, 1.0))
    assert ident.value(0.3) == pytest.approx(0.3, abs=1e-15)
    a = affine_normalizer(Interval(2.0, 6.0))
    assert a.value(4.0) == pytest.approx(0.5, abs=1e-15)
    # P_I = P_[0,1] o A_I on a grid
    I = Interval(-1.5, 2.5)
    an = affine_normalizer(I)
    unit = Interval(0.0, 1.0)
    for x in np.linspace(-1.4, 2.4, 17):
        assert poincare_coordinate(I, x) == pytest.approx(
            poincare_coordinate(unit, float(an.value(x))), rel=1e-11, abs=1e-11
        )


@st.composite
def increasing_quadruples(draw):
    base = draw(st.floats(-5, 5))
    gaps = [draw(st.floats(0.01, 3.0)) for _ in range(3)]
    pts = [base]
    for g in gaps:
        pts.append(pts[-1] + g)
    return PointQuadruple(*pts)


@given(
    increasing_quadruples(),
    st.floats(0.5, 5.0),
    st.booleans(),
    st.floats(-3.0, 3.0),
    st.floats(0.2, 2.0),
)
@settings(max_examples=150, deadline=None)
def test_cross_ratio_moebius_invariance(q, pole_gap, pole_right, shift, scale):
    # f(x) = shift + sign*scale/(pole - x) is a Moebius map, increasing on
    # the quadruple's span when the pole sits outside it
    a, _, _, d = q.as_tuple()
    if pole_right:
        pole = d + pole_gap
        f = lambda x: shift + scale / (pole - x)
    else:
        pole = a - pole_gap
        f = lambda x: shift - scale / (pole - x)
    image = PointQuadruple(*[f(x) for x in q.as_tuple()])
    assert cross_ratio(image) == pytest.approx(cross_ratio(q), rel=1e-12)
    assert cross_ratio_alt(image) == pytest.approx(cross_ratio_alt(q), rel=1e-12)


@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
@settings(max_examples=150, deadline=None)
def test_poincare_distance_additivity(u1, u2, u3):
    I = Interval(-0.5, 1.75)
    x, y, z = sorted(I.denormalized(u) for u in (u1, u2, u3))
    if y - x < 1e-9 or z - y < 1e-9:
        return
    total = poincare_distance(I, x, z)
    parts = poincare_distance(I, x, y) + poincare_distance(I, y, z)
    assert total == pytest.approx(parts, rel=1e-12, abs=1e-12)


def test_coordinate_strictly_monotone():
    I = Interval(0.25, 4.0)
    xs = np.linspace(0.26, 3.99, 400)
    vals = [float(poincare_coordinate(I, x)) for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_inverse_coordinate_round_trip():
    I = Interval(-2.0, 3.0)
    for g in (-15.0, -2.0, 0.0, 1.0, 17.5):
        x = poincare_inverse_coordinate(I, g)
        assert poincare_coordinate(I, float(x)) == pytest.approx(g, rel=1e-9, abs=1e-9)
