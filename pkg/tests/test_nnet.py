import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adaptrust.errors import BadArchitecture, DimensionMismatch, NoSamples
from adaptrust.nnet import Network, TrainConfig, forward, gradient_check, masked_loss, network_new, train


def test_network_new_deterministic():
    a, b = network_new([4, 8, 2], seed=42), network_new([4, 8, 2], seed=42)
    for wa, wb in zip(a.weights + a.biases, b.weights + b.biases):
        assert np.array_equal(wa, wb)
    c = network_new([4, 8, 2], seed=43)
    assert not np.array_equal(a.weights[0], c.weights[0])


def test_network_new_shapes():
    net = network_new([3, 5, 5, 2], seed=7)
    assert [w.shape for w in net.weights] == [(5, 3), (5, 5), (2, 5)]
    assert [b.shape for b in net.biases] == [(5,), (5,), (2,)]


@pytest.mark.parametrize("sizes", [[1], [], [3, 0, 1], [2, 2.5]])
def test_network_new_bad(sizes):
    with pytest.raises(BadArchitecture):
        network_new(sizes)


def test_init_scaled_by_fan_in():
    net = network_new([100, 4, 1], seed=1)
    assert np.abs(net.weights[0]).max() <= 0.1
    assert np.abs(net.weights[1]).max() <= 0.5


def test_forward_zero_net_is_half():
    net = network_new([3, 4, 2], seed=0)
    for w in net.weights:
        w[:] = 0.0
    assert np.array_equal(forward(net, [0.3, -2.0, 7.0]), [0.5, 0.5])


def test_forward_mismatch():
    with pytest.raises(DimensionMismatch):
        forward(network_new([3, 2]), [1.0, 2.0])


def test_forward_golden():
    # [2, 2, 1] net, seed 42, input [1, 0]; value pinned from this implementation
    out = forward(network_new([2, 2, 1], seed=42), [1.0, 0.0])
    assert out.shape == (1,) and 0.0 < out[0] < 1.0
    assert out[0] == pytest.approx(0.5256615689675564, abs=1e-12)


def test_forward_batch_matches_rows():
    net = network_new([3, 6, 2], seed=5)
    x = np.random.default_rng(0).normal(size=(7, 3))
    assert np.allclose(forward(net, x), np.stack([forward(net, r) for r in x]), atol=0, rtol=1e-15)


@given(st.integers(0, 2**31), st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_forward_in_unit_interval(seed, x):
    out = forward(network_new([3, 5, 4], seed=seed), x)
    assert np.all((out >= 0.0) & (out <= 1.0))


def toy_samples():
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, size=(60, 2))
    y = (x[:, 0] + x[:, 1] > 0).astype(float)
    return [(xi, np.array([yi]), None) for xi, yi in zip(x, y)]


def test_train_separable_toy():
    net = network_new([2, 8, 1], seed=3)
    history = train(net, toy_samples(), TrainConfig(learning_rate=1.0, epochs=500, batch_size=8, seed=1))
    assert len(history) == 500
    assert history[-1] < 0.05


def test_train_deterministic():
    runs = []
    for _ in range(2):
        net = network_new([2, 8, 1], seed=3)
        runs.append(train(net, toy_samples(), TrainConfig(0.5, 20, 8, 9)))
    assert runs[0] == runs[1]


def test_train_config_rejects():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1.0)


def test_train_errors():
    net = network_new([2, 3, 1])
    with pytest.raises(NoSamples):
        train(net, [], TrainConfig(epochs=1))
    with pytest.raises(DimensionMismatch):
        train(net, [(np.zeros(3), np.zeros(1), None)], TrainConfig(epochs=1))


def test_zero_learning_rate_freezes():
    net = network_new([2, 8, 1], seed=3)
    before = net.copy()
    train(net, toy_samples(), TrainConfig(learning_rate=0.0, epochs=5))
    for a, b in zip(net.weights + net.biases, before.weights + before.biases):
        assert np.array_equal(a, b)


def test_mask_excludes_components():
    net = network_new([2, 4, 2], seed=2)
    x = np.array([[0.2, 0.7]])
    y = np.array([[0.1, 0.9]])
    base = masked_loss(net, x, y, np.array([[1.0, 0.0]]))
    y2 = np.array([[0.1, -50.0]])  # masked target changes nothing
    assert masked_loss(net, x, y2, np.array([[1.0, 0.0]])) == base
    net2 = net.copy()
    train(net, [(x[0], y[0], np.array([1.0, 0.0]))], TrainConfig(0.5, 3, 1, 0))
    train(net2, [(x[0], y2[0], np.array([1.0, 0.0]))], TrainConfig(0.5, 3, 1, 0))
    assert np.array_equal(net.weights[0], net2.weights[0])


def test_small_lr_loss_nonincreasing_convex():
    # a single sigmoid layer with full-batch steps at lr 1e-3
    rng = np.random.default_rng(4)
    x = rng.normal(size=(20, 3))
    y = rng.uniform(size=(20, 1))
    net = network_new([3, 1], seed=4)
    history = train(net, [(a, b, None) for a, b in zip(x, y)], TrainConfig(1e-3, 50, 20, 0))
    assert all(b <= a + 1e-15 for a, b in zip(history, history[1:]))


@given(st.integers(0, 2**31))
def test_gradient_check_random_nets(seed):
    rng = np.random.default_rng(seed)
    sizes = [int(rng.integers(1, 4)), int(rng.integers(1, 5)), int(rng.integers(1, 3))]
    net = network_new(sizes, seed=seed)
    for b in net.biases:
        b[:] = rng.normal(scale=0.5, size=b.shape)
    sample = (rng.normal(size=sizes[0]), rng.uniform(size=sizes[-1]), None)
    assert gradient_check(net, sample, 1e-4) < 1e-4


def test_gradient_check_zero_weights_finite():
    net = network_new([2, 3, 1], seed=0)
    for w in net.weights:
        w[:] = 0.0
    err = gradient_check(net, (np.array([0.5, -0.5]), np.array([0.5]), None), 1e-4)
    assert np.isfinite(err)


def test_gradient_check_restores_and_rejects():
    net = network_new([2, 3, 1], seed=0)
    before = net.copy()
    gradient_check(net, (np.array([0.5, -0.5]), np.array([0.2]), None))
    assert all(np.array_equal(a, b) for a, b in zip(net.weights, before.weights))
    with pytest.raises(ValueError):
        gradient_check(net, (np.array([0.5, -0.5]), np.array([0.2]), None), 0.0)


def test_network_shape_validation():
    with pytest.raises(BadArchitecture):
        Network((2, 1), [np.zeros((2, 1))], [np.zeros(1)])
    with pytest.raises(BadArchitecture):
        Network((2, 1), [np.zeros((1, 2))], [np.zeros(1)], hidden_activation="relu")
