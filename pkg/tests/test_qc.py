import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from conftest import fd_configurations, jitter
from miura.core.errors import SingularTriangleError
from miura.geometry.pattern import build_initial
from miura.geometry.surface import Rect
from miura.optimization.fdcheck import check_gradient, check_hessian, random_directions
from miura.optimization.qc import BeltramiOperator, beltrami, dilation, energy_mu, mu_from_coeffs, triangle_affine

REST = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def _mu(image):
    return complex(mu_from_coeffs(np.array(triangle_affine(REST, image))))


def test_affine_coefficients_of_a_stretch():
    assert triangle_affine(REST, [[0, 0], [2, 0], [0, 3]]) == pytest.approx((2.0, 0.0, 0.0, 3.0))


def test_affine_coefficients_of_a_shear():
    assert triangle_affine(REST, [[0, 0], [1, 0], [1, 1]]) == pytest.approx((1.0, 1.0, 0.0, 1.0))


def test_affine_coefficients_of_a_symmetric_skew():
    assert triangle_affine(REST, [[0, 0], [1, 0.2], [0.2, 1]]) == pytest.approx((1.0, 0.2, 0.2, 1.0))


def test_identity_and_conformal_maps_have_zero_mu():
    assert abs(_mu(REST)) == 0.0
    c, s = 2.0 * math.cos(0.7), 2.0 * math.sin(0.7)
    rotated = REST @ np.array([[c, s], [-s, c]]) + [0.3, -1.0]
    assert abs(_mu(rotated)) == pytest.approx(0.0, abs=1e-14)


def test_anisotropic_scaling():
    assert abs(_mu(REST * [1.2, 0.8])) == pytest.approx(0.2)


def test_orientation_reversal_exceeds_one():
    assert abs(_mu(REST * [1.0, -2.0])) == pytest.approx(3.0)


def test_collinear_rest_triangle_is_singular():
    with pytest.raises(SingularTriangleError):
        triangle_affine([[0, 0], [1, 1], [2, 2]], REST)


@pytest.mark.parametrize("maxmu,expected", [(0.0, 1.0), (0.5, 3.0), (1.0 / 3.0, 2.0)])
def test_dilation(maxmu, expected):
    assert dilation(maxmu) == pytest.approx(expected)


@pytest.mark.parametrize("maxmu", [1.0, 1.5])
def test_dilation_is_infinite_once_mu_reaches_one(maxmu):
    assert math.isinf(dilation(maxmu))


def test_dilation_rejects_negative_input():
    with pytest.raises(ValueError):
        dilation(-0.1)


@pytest.fixture
def pattern():
    return build_initial((4, 6), Rect(-1, 1, -1, 1))


def test_field_of_the_initial_pattern_is_conformal(pattern):
    field = BeltramiOperator(pattern).field(pattern.vertices0)
    assert field.max_abs == pytest.approx(0.0, abs=1e-13)
    assert field.foldover_count == 0


def test_field_of_a_scaled_pattern(pattern):
    op = BeltramiOperator(pattern)
    field = op.field(pattern.vertices0 * [1.2, 0.8])
    assert_allclose(np.abs(field.mu), 0.2)
    assert field.mean_abs == pytest.approx(0.2)
    value, _, _ = op.energy(pattern.vertices0 * [1.2, 0.8])
    assert value == pytest.approx(0.04)


def test_mirrored_pattern_is_all_foldover(pattern):
    field = BeltramiOperator(pattern).field(pattern.vertices0 * [1.0, -2.0])
    assert field.foldover_count == len(pattern.tris)


def test_energy_vanishes_with_zero_gradient_at_rest(pattern):
    value, grad, H = BeltramiOperator(pattern).energy(pattern.vertices0)
    assert value == pytest.approx(0.0, abs=1e-26)
    assert np.max(np.abs(grad)) <= 1e-12
    assert H.shape == (2 * pattern.n_vertices, 2 * pattern.n_vertices)


@settings(max_examples=25, deadline=None)
@given(angle=st.floats(-math.pi, math.pi), scale=st.floats(0.2, 5.0),
       tx=st.floats(-3.0, 3.0), ty=st.floats(-3.0, 3.0))
def test_mu_is_invariant_under_similarities_of_the_image(angle, scale, tx, ty):
    p = build_initial((3, 4), Rect(-1, 1, -1, 1))
    op = BeltramiOperator(p)
    y = jitter(p, np.random.default_rng(7), scale=0.2)
    c, s = scale * math.cos(angle), scale * math.sin(angle)
    moved = y @ np.array([[c, s], [-s, c]]) + [tx, ty]
    assert_allclose(np.abs(op.field(moved).mu), np.abs(op.field(y).mu), atol=1e-10)


def test_gradient_and_hessian_match_finite_differences():
    worst_grad = worst_hess = 0.0
    for _, pattern, _, y, rng in fd_configurations("saddle"):
        _, grad, H = energy_mu(pattern, y)
        op = BeltramiOperator(pattern)
        dirs = random_directions(len(y), 2, rng)
        worst_grad = max(worst_grad, check_gradient(lambda x: op.energy(x, hessian=False)[0], grad, y, dirs))
        worst_hess = max(worst_hess, check_hessian(lambda x: op.energy(x, hessian=False)[1], H, y, dirs))
        assert abs(H - H.T).max() <= 1e-12 * max(1.0, abs(H).max())
    assert worst_grad < 1e-6
    assert worst_hess < 1e-4


def test_beltrami_matches_the_operator_field(pattern, rng):
    y = jitter(pattern, rng, scale=0.2)
    field = beltrami(pattern, y)
    assert_allclose(field.mu, BeltramiOperator(pattern).field(y).mu, rtol=0, atol=0)
    assert field.foldover_count == 0


def test_single_reflected_corner_is_one_foldover(pattern):
    counts = np.bincount(pattern.tris.ravel(), minlength=pattern.n_vertices)
    v = int(np.flatnonzero(counts == 1)[0])
    tri = next(t for t in pattern.tris if v in t)
    a, b = (pattern.vertices0[u] for u in tri if u != v)
    p, t = pattern.vertices0[v] - a, b - a
    along = (p @ t) / (t @ t) * t
    y = pattern.vertices0.copy()
    # push v across the opposite edge of its only triangle at half its height
    y[v] = a + along - 0.5 * (p - along)
    field = beltrami(pattern, y)
    assert field.foldover_count == 1
    assert field.max_abs == pytest.approx(3.0)
    value, _, _ = energy_mu(pattern, y)
    assert value > 0.0
