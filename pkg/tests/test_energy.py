import numpy as np
import pytest

from conftest import fd_configurations, jitter, make_setup
from miura.geometry.registry import STUDY_SURFACES
from miura.geometry.pattern import fold
from miura.optimization.energy import (EnergyModel, edge_lengths, energy_center, length_energy_value,
                                       total_energy)
from miura.optimization.fdcheck import check_gradient, check_hessian, random_directions


def test_initial_pattern_has_only_a_centering_term(saddle_setup):
    _, pair, pattern, model = saddle_setup
    e = total_energy(pattern, pair, pattern.vertices0, model)
    assert e.terms["length"] == pytest.approx(0.0, abs=1e-30)
    assert e.terms["mu"] == pytest.approx(0.0, abs=1e-26)
    assert e.terms["center"] > 0
    assert e.value == pytest.approx(0.01 * e.terms["center"])


def test_length_term_of_a_uniform_ten_percent_stretch(saddle_setup):
    _, pair, pattern, model = saddle_setup
    P0 = fold(pattern, pair, pattern.vertices0).positions
    L0 = edge_lengths(pattern, P0)
    # (0.1 L0)^2 / (2 L0) = 0.005 L0 per edge
    value = length_energy_value(pattern, 1.1 * P0, model.ref_lengths)
    assert value == pytest.approx(0.005 * L0.mean())


def test_centering_term_values(saddle_setup):
    _, _, pattern, _ = saddle_setup
    model = EnergyModel(pattern=pattern, weights=(0.0, 0.0, 1.0), ref_lengths=np.ones(len(pattern.edges)),
                        center=(0.0, 0.0), ranges=(2.0, 2.0))
    y = np.tile([1.0, 0.0], (pattern.n_vertices, 1))
    value, grad, H = energy_center(pattern, y, model)
    assert value == pytest.approx(0.25)
    assert grad[0] == pytest.approx(2.0 * 1.0 / 4.0 / pattern.n_vertices)
    assert grad[1] == 0.0
    assert H.diagonal() == pytest.approx(np.full(2 * pattern.n_vertices, 0.5 / pattern.n_vertices))
    value, _, _ = energy_center(pattern, np.zeros_like(y), model)
    assert value == 0.0


def test_centre_defaults_to_the_bounding_box_of_the_initial_pattern(saddle_setup):
    _, _, pattern, model = saddle_setup
    lo, hi = pattern.vertices0.min(axis=0), pattern.vertices0.max(axis=0)
    assert model.center == pytest.approx(tuple(0.5 * (lo + hi)))
    assert model.ranges == (2.0, 2.0)


@pytest.mark.parametrize("weights,term", [((1, 0, 0), "length"), ((0, 1, 0), "mu"), ((0, 0, 1), "center")])
def test_weights_select_single_terms(saddle_setup, rng, weights, term):
    _, pair, pattern, model = saddle_setup
    y = jitter(pattern, rng, scale=0.1)
    e = total_energy(pattern, pair, y, model.with_weights(weights))
    assert e.value == pytest.approx(e.terms[term])


def test_negative_weights_are_rejected(saddle_setup):
    _, _, _, model = saddle_setup
    with pytest.raises(ValueError):
        model.with_weights((1.0, -0.1, 0.0))


@pytest.mark.parametrize("kind", STUDY_SURFACES)
def test_total_energy_derivatives_match_finite_differences(kind):
    worst_grad = worst_hess = 0.0
    for pair, pattern, model, y, rng in fd_configurations(kind):
        e = total_energy(pattern, pair, y, model)
        dirs = random_directions(len(y), 2, rng)
        f = lambda x: total_energy(pattern, pair, x, model).value
        g = lambda x: model.total(fold(pattern, pair, x), hessian=False).gradient
        worst_grad = max(worst_grad, check_gradient(f, e.gradient, y, dirs))
        worst_hess = max(worst_hess, check_hessian(g, e.hessian, y, dirs))
    assert worst_grad < 1e-6
    assert worst_hess < 1e-4


@pytest.mark.parametrize("term", [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)])
def test_single_term_gradients_match_finite_differences(term):
    worst = 0.0
    for pair, pattern, model, y, rng in fd_configurations("saddle", weights=term):
        e = total_energy(pattern, pair, y, model)
        f = lambda x: total_energy(pattern, pair, x, model).value
        worst = max(worst, check_gradient(f, e.gradient, y, random_directions(len(y), 2, rng)))
    assert worst < 1e-6


def test_hessian_is_symmetric(saddle_setup, rng):
    _, pair, pattern, model = saddle_setup
    H = total_energy(pattern, pair, jitter(pattern, rng, scale=0.1), model).hessian
    assert abs(H - H.T).max() == 0.0
