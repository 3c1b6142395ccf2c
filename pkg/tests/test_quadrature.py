import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grushin_qc.geometry import Polyline
from grushin_qc.quadrature import QuadratureError, graded_to_zero, grushin_length, segment_lengths

from oracles import segment_length_quad


def seg(*pts):
    return Polyline.from_vertices(pts)


def test_length_examples():
    assert grushin_length(seg((1, 0), (3, 0)), 1) == pytest.approx(2, rel=1e-12)
    assert grushin_length(seg((0, 0), (0, 1)), 1) == math.inf
    assert grushin_length(seg((1, 0), (1, 2)), 1) == pytest.approx(2, rel=1e-12)


def test_oblique_segment_touching_Y_diverges_for_alpha_one():
    assert grushin_length(seg((0, 0), (1, 1)), 1) == math.inf
    assert grushin_length(seg((-1, -1), (1, 1)), 2) == math.inf


def test_integrable_singularity_matches_quad():
    got = grushin_length(seg((0, 0), (1, 1)), 0.5)
    assert got == pytest.approx(segment_length_quad((0, 0), (1, 1), 0.5), rel=1e-7)
    got = grushin_length(seg((-1, 0.2), (2, 1.3)), 0.5)
    assert got == pytest.approx(segment_length_quad((-1, 0.2), (2, 1.3), 0.5), rel=1e-7)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 3), st.floats(-2, 2), st.floats(0.2, 3), st.floats(-2, 2), st.sampled_from([0.5, 1.0, 2.0]))
def test_off_Y_segments_match_quad(x0, y0, x1, y1, a):
    if abs(x1 - x0) < 1e-9 and abs(y1 - y0) < 1e-9:
        return
    got = grushin_length(seg((x0, y0), (x1, y1)), a)
    assert got == pytest.approx(segment_length_quad((x0, y0), (x1, y1), a), rel=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10), st.floats(-3, 3))
def test_length_invariant_under_reparametrisation(scale, shift):
    v = np.array([[0.5, 0.0], [1.5, 1.0], [-0.7, 2.0], [2.0, 2.5]])
    t = np.array([0.0, 0.3, 0.6, 1.0])
    a = Polyline(v, t)
    b = Polyline(v, scale * t + shift)
    assert grushin_length(a, 0.5) == grushin_length(b, 0.5)


def test_euclidean_limit():
    v = np.array([[0.0, 0.0], [1.0, 2.0], [-1.0, 3.0]])
    assert np.allclose(segment_lengths(v, 0.0), [math.sqrt(5), math.sqrt(5)])


def test_graded_piece_closed_form():
    # int_0^1 sqrt(1 + m^2 x^-2a) with m = 0 is just the width
    assert graded_to_zero(2.0, 0.0, 1.0) == 2.0
    # alpha = 1/2, slope 1: int_0^w sqrt(1 + 1/x) dx has closed form
    w = 0.7
    exact = math.sqrt(w * (w + 1)) + math.asinh(math.sqrt(w))
    assert graded_to_zero(w, 1.0, 0.5) == pytest.approx(exact, rel=1e-9)


def test_quadrature_error_is_not_infinity():
    assert issubclass(QuadratureError, ArithmeticError)
