import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from asom_ar.som import (
    DecaySchedule,
    GridShape,
    NeuronGrid,
    SomParams,
    activation,
    decay_step,
    init_grid,
    native_distance,
    neighborhood,
    quantization_error,
    train_som,
    update_native,
    winner,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


# --- grid and init -------------------------------------------------------------

def test_grid_shape_rejects_empty():
    with pytest.raises(ValueError):
        GridShape(0, 3)


def test_square_grids_for_layer_sizes():
    assert GridShape.square(900) == GridShape(30, 30)
    assert GridShape.square(1600) == GridShape(40, 40)
    with pytest.raises(ValueError):
        GridShape.square(10)


def test_init_is_deterministic():
    a = init_grid(GridShape(2, 2), 3, seed=7)
    b = init_grid(GridShape(2, 2), 3, seed=7)
    assert a.weights.tobytes() == b.weights.tobytes()


def test_init_range_and_shape():
    g = init_grid(GridShape(30, 30), 60, seed=1)
    assert g.weights.shape == (900, 60)
    assert g.weights.min() >= 0.0 and g.weights.max() < 1.0


def test_init_rejects_zero_dim():
    with pytest.raises(ValueError):
        init_grid(GridShape(2, 2), 0, seed=0)


# --- distance and activation -----------------------------------------------------

def test_distance_hand_value():
    g = NeuronGrid(GridShape(1, 1), [[3.0, 4.0]])
    assert native_distance(g, [0.0, 0.0])[0, 0] == 25.0


def test_distance_zero_at_identical_weights():
    g = init_grid(GridShape(3, 3), 4, seed=2)
    x = g.neuron((1, 2)).copy()
    assert native_distance(g, x)[1, 2] == 0.0


def test_distance_uniform_for_identical_neurons():
    g = NeuronGrid(GridShape(2, 3), np.tile([0.2, 0.5], (6, 1)))
    z = native_distance(g, [0.9, 0.1])
    assert np.all(z == z[0, 0])


def test_distance_dimension_mismatch():
    g = init_grid(GridShape(2, 2), 3, seed=0)
    with pytest.raises(ValueError):
        native_distance(g, [1.0, 2.0])


def test_activation_two_cell_value():
    sigma = 5.0
    y = activation(np.array([0.0, sigma * math.log(2)]), sigma, 10)
    # exp(-ln 2)^10 = 2^-10
    assert y[0] == 1.0
    assert y[1] == pytest.approx(2.0 ** -10, rel=1e-12)


def test_activation_uniform_distances():
    assert np.all(activation(np.full((3, 3), 4.2), 1.0, 10) == 1.0)


def test_activation_rejects_bad_input():
    with pytest.raises(ValueError):
        activation(np.array([0.0, np.nan]), 1.0, 10)
    with pytest.raises(ValueError):
        activation(np.array([0.0]), 0.0, 10)


@given(hnp.arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                  elements=st.floats(0, 1e4)),
       st.floats(1e-3, 1e6), st.floats(1, 20))
def test_activation_peak_is_exactly_one(z, sigma, s_exp):
    y = activation(z, sigma, s_exp)
    assert y.max() == 1.0
    assert np.all(y >= 0) and np.all(y <= 1)


@given(hnp.arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                  elements=st.floats(0, 30)),
       st.floats(0.5, 1e3))
def test_activation_positive_for_moderate_ranges(z, sigma):
    # (zmax - zmin) * s_exp / sigma <= 600 stays inside the float64 exponent range
    y = activation(z, sigma, 10)
    assert np.all(y > 0)


@given(hnp.arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                  elements=st.integers(0, 5).map(float)))
def test_winner_of_activation_is_min_distance(z):
    w = winner(activation(z, 1.0, 10))
    flat = int(np.argmin(z))  # first minimum in row-major order
    assert w == divmod(flat, z.shape[1])


# --- winner ---------------------------------------------------------------------

def test_winner_single_peak():
    y = np.full((3, 4), 0.1)
    y[2, 1] = 1.0
    assert winner(y) == (2, 1)


def test_winner_tie_goes_to_row_major_first():
    y = np.zeros((3, 4))
    y[0, 3] = y[2, 1] = 1.0
    assert winner(y) == (0, 3)


def test_winner_uniform_map():
    assert winner(np.ones((4, 4))) == (0, 0)


# --- neighbourhood and update ----------------------------------------------------

def test_neighborhood_at_winner_is_one():
    assert neighborhood((2, 3), 1.5, GridShape(5, 5))[2, 3] == 1.0


def test_neighborhood_at_rho_sqrt2():
    rho = 2.0
    # the cell (2, 2) away from (0, 0) sits at distance 2 sqrt 2 = rho sqrt 2
    g = neighborhood((0, 0), rho, GridShape(3, 3))
    assert g[2, 2] == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_neighborhood_large_rho_tends_to_one():
    assert np.allclose(neighborhood((0, 0), 1e9, GridShape(6, 6)), 1.0)


def test_neighborhood_decreases_with_distance():
    g = neighborhood((0, 0), 2.0, GridShape(1, 8))[0]
    assert np.all(np.diff(g) < 0)


def test_update_full_step_lands_on_x():
    g = init_grid(GridShape(3, 3), 2, seed=0)
    x = np.array([0.3, 0.7])
    out = update_native(g, x, (1, 1), 1.0, 0.5)
    assert np.array_equal(out.neuron((1, 1)), x)


def test_update_zero_alpha_is_noop():
    g = init_grid(GridShape(3, 3), 2, seed=0)
    out = update_native(g, [0.3, 0.7], (1, 1), 0.0, 2.0)
    assert np.array_equal(out.weights, g.weights)


def test_update_far_neuron_barely_moves():
    g = init_grid(GridShape(10, 10), 2, seed=0)
    out = update_native(g, [5.0, 5.0], (0, 0), 1.0, 0.1)
    assert np.max(np.abs(out.neuron((9, 9)) - g.neuron((9, 9)))) < 1e-12


def test_update_returns_new_grid():
    g = init_grid(GridShape(2, 2), 2, seed=0)
    before = g.weights.copy()
    update_native(g, [1.0, 1.0], (0, 0), 0.5, 1.0)
    assert np.array_equal(g.weights, before)


@given(hnp.arrays(float, 3, elements=finite), st.floats(0.001, 1.0), st.integers(0, 2 ** 32 - 1))
def test_update_contracts_winner(x, alpha, seed):
    g = init_grid(GridShape(3, 3), 3, seed=seed)
    before = np.linalg.norm(g.neuron((1, 2)) - x)
    after = np.linalg.norm(update_native(g, x, (1, 2), alpha, 1.0).neuron((1, 2)) - x)
    assert after <= (1 - alpha) * before + 1e-12 * max(1.0, before)


# --- decay ----------------------------------------------------------------------

def test_decay_hand_value():
    # 0.1 + 0.99 * (0.01 - 0.1) = 0.1 - 0.0891
    assert decay_step(0.1, 0.99, 0.01) == pytest.approx(0.0109, abs=1e-15)


def test_decay_fixed_point_and_zero_rate():
    assert decay_step(0.01, 0.99, 0.01) == 0.01
    assert decay_step(0.3, 0.0, 0.01) == 0.3


@given(st.floats(-100, 100), st.floats(0, 1), st.floats(-100, 100), st.integers(0, 400))
def test_decay_matches_closed_form(x_i, x_d, x_f, t):
    s = DecaySchedule(x_i, x_d, x_f)
    for _ in range(t):
        s = s.step()
    assert abs(s.value - s.closed_form(t)) < 1e-12 * max(1.0, abs(x_i), abs(x_f))


@given(st.floats(-10, 10), st.floats(0, 1), st.floats(-10, 10))
def test_decay_moves_monotonically_to_final(x_i, x_d, x_f):
    vals = []
    s = DecaySchedule(x_i, x_d, x_f)
    for _ in range(50):
        vals.append(s.value)
        s = s.step()
    dist = np.abs(np.array(vals) - x_f)
    assert np.all(np.diff(dist) <= 1e-15)


def test_decay_rejects_bad_rate():
    with pytest.raises(ValueError):
        DecaySchedule(1.0, 1.5, 0.0)


# --- training ---------------------------------------------------------------------

def test_params_validation():
    with pytest.raises(ValueError):
        SomParams(sigma=0)
    with pytest.raises(ValueError):
        SomParams(softmax_exponent=0.5)
    with pytest.raises(ValueError):
        SomParams(epochs=0)
    with pytest.raises(ValueError):
        SomParams(decay_per="frame")


def test_train_rejects_empty_data():
    with pytest.raises(ValueError):
        train_som(np.empty((0, 2)), GridShape(2, 2), SomParams(epochs=1))


def test_train_single_point_attractor():
    p = np.array([0.25, 0.75])
    g = train_som(np.tile(p, (5, 1)), GridShape(4, 4), SomParams(epochs=200, seed=3))
    w = g.weights[np.argmin(np.linalg.norm(g.weights - p, axis=1))]
    assert np.linalg.norm(w - p) < 1e-3


def test_train_deterministic():
    data = np.random.default_rng(0).random((50, 3))
    params = SomParams(epochs=5, seed=11)
    a = train_som(data, GridShape(4, 4), params)
    b = train_som(data, GridShape(4, 4), params)
    assert a.weights.tobytes() == b.weights.tobytes()


def test_train_seed_changes_result():
    data = np.random.default_rng(0).random((50, 3))
    a = train_som(data, GridShape(4, 4), SomParams(epochs=2, seed=1))
    b = train_som(data, GridShape(4, 4), SomParams(epochs=2, seed=2))
    assert not np.array_equal(a.weights, b.weights)


def test_train_per_epoch_cadence_runs():
    data = np.random.default_rng(0).random((20, 2))
    g = train_som(data, GridShape(3, 3), SomParams(epochs=3, decay_per="epoch"))
    assert np.all(np.isfinite(g.weights))


def test_quantization_error_hand_value():
    g = NeuronGrid(GridShape(1, 2), [[0.0, 0.0], [10.0, 0.0]])
    assert quantization_error(g, [[3.0, 4.0], [10.0, 1.0]]) == pytest.approx(3.0)
