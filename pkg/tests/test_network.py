import numpy as np
import pytest

from sdda.errors import ArgumentError, NumericError
from sdda.network import (AdamState, MlpParams, adam_step, add_gradients, backward, cross_entropy,
                          forward, init_params, softmax)
from sdda.numerics import Rng, finite_diff_gradient, relative_error

DIMS = (2, 16, 16, 8, 3)


def make(seed=0, act="relu"):
    return init_params(DIMS, Rng(seed), act)


def test_init_shapes_and_glorot_bounds():
    p = make()
    assert p.num_layers == 4 and p.adapted_width == 8
    for l, (W, b) in enumerate(zip(p.weights, p.biases)):
        fan_in, fan_out = DIMS[l], DIMS[l + 1]
        assert W.shape == (fan_in, fan_out)
        assert np.all(np.abs(W) <= np.sqrt(6.0 / (fan_in + fan_out)))
        assert not b.any()


def test_init_deterministic():
    a, b = make(4), make(4)
    np.testing.assert_array_equal(a.to_vector(), b.to_vector())
    assert not np.array_equal(a.to_vector(), make(5).to_vector())


def test_vector_round_trip():
    p = make(1)
    q = p.from_vector(p.to_vector())
    np.testing.assert_array_equal(q.to_vector(), p.to_vector())
    with pytest.raises(ArgumentError):
        p.from_vector(np.zeros(3))


def test_params_validation():
    with pytest.raises(ArgumentError):
        MlpParams((2, 3), [np.zeros((3, 2))], [np.zeros(3)])
    with pytest.raises(ArgumentError):
        init_params((2, 3), Rng(0), "sigmoid")


def test_forward_adapted_layer_is_linear():
    p = make(2)
    X = Rng(1).uniform_range(10, -1, 1).reshape(5, 2)
    logits, cache = forward(p, X)
    h = X
    for l in range(2):
        h = np.maximum(h @ p.weights[l] + p.biases[l], 0.0)
    feat = h @ p.weights[2] + p.biases[2]
    np.testing.assert_allclose(cache.adapted_features, feat, rtol=1e-14)
    np.testing.assert_allclose(logits, feat @ p.weights[3] + p.biases[3], rtol=1e-14)


def test_softmax_stable_and_normalized():
    s = softmax(np.array([[1000.0, 1000.0], [0.0, -1000.0]]))
    np.testing.assert_allclose(s.sum(axis=1), 1.0)
    np.testing.assert_allclose(s[0], [0.5, 0.5])


def test_cross_entropy_example():
    loss, d = cross_entropy(np.zeros((2, 3)), np.array([0, 2]))
    assert loss == pytest.approx(np.log(3.0), rel=1e-15)
    np.testing.assert_allclose(d, (np.full((2, 3), 1 / 3) - np.eye(3)[[0, 2]]) / 2)
    with pytest.raises(ArgumentError):
        cross_entropy(np.zeros((2, 3)), np.array([0, 3]))


@pytest.mark.parametrize("act", ["relu", "tanh"])
def test_backward_matches_finite_differences(act):
    p = make(3, act)
    rng = Rng(9)
    X = rng.uniform_range(12, -1, 1).reshape(6, 2)
    y = np.array([0, 1, 2, 0, 1, 2])
    extra = rng.uniform_range(48, -1, 1).reshape(6, 8)

    def f(v):
        q = p.from_vector(v)
        logits, cache = forward(q, X)
        return cross_entropy(logits, y)[0] + float(np.sum(extra * cache.adapted_features))

    logits, cache = forward(p, X)
    _, dlog = cross_entropy(logits, y)
    g = backward(p, cache, dlog, extra)
    assert relative_error(g.to_vector(), finite_diff_gradient(f, p.to_vector())) <= 1e-6


def test_backward_is_linear_in_upstream():
    p = make(6)
    X = Rng(2).uniform_range(8, -1, 1).reshape(4, 2)
    _, cache = forward(p, X)
    dl = Rng(3).uniform_range(12, -1, 1).reshape(4, 3)
    da = Rng(4).uniform_range(32, -1, 1).reshape(4, 8)
    both = backward(p, cache, dl, da)
    summed = add_gradients(backward(p, cache, dlogits=dl), backward(p, cache, dadapted=da))
    np.testing.assert_allclose(both.to_vector(), summed.to_vector(), rtol=1e-12, atol=1e-15)
    with pytest.raises(ArgumentError):
        backward(p, cache)


def test_adam_first_step_moves_by_lr():
    p = make(0)
    g = p.from_vector(np.where(np.arange(p.to_vector().size) % 2 == 0, 1.0, -3.0))
    state, q = adam_step(AdamState.for_params(p), p, g, 0.01)
    step = q.to_vector() - p.to_vector()
    np.testing.assert_allclose(np.abs(step), 0.01, rtol=1e-6)
    assert np.all(np.sign(step) == -np.sign(g.to_vector()))
    assert state.t == 1


def test_adam_minimizes_quadratic():
    p = init_params((2, 2), Rng(0))
    state = AdamState.for_params(p)
    for _ in range(2000):
        state, p = adam_step(state, p, p.from_vector(2.0 * p.to_vector()), 0.05)
    assert np.max(np.abs(p.to_vector())) < 1e-3


def test_adam_rejects_non_finite():
    p = make(0)
    g = p.from_vector(np.full(p.to_vector().size, np.nan))
    with pytest.raises(NumericError):
        adam_step(AdamState.for_params(p), p, g, 0.01)
    with pytest.raises(ArgumentError):
        adam_step(AdamState.for_params(p), p, p.zeros_like(), 0.0)
