import numpy as np
import pytest

import oracles
from qaead.cae import (
    MlpAutoencoder, apply_magnitude_pruning, backward, batch_rmse, cae_scores, forward, init_mlp, mirror_layers,
    param_count, rmse_loss, train_cae,
)
from qaead.data import SynthConfig, Target, fit_scaler, synth_dataset, transform
from qaead.errors import ConsistencyError, DataError
from qaead.optim import TrainConfig


def fd_check(model, X):
    _, cache = forward(model, X)
    g = backward(model, X, cache)
    for i in range(len(model.weights)):
        for arr, grad in ((model.weights[i], g.weights[i]), (model.biases[i], g.biases[i])):
            def f(v, arr=arr):
                saved = arr.copy()
                arr[...] = v.reshape(arr.shape)
                out = batch_rmse(model, X)
                arr[...] = saved
                return out
            fd = oracles.central_fd(f, arr.ravel().copy())
            np.testing.assert_allclose(grad.ravel(), fd, atol=1e-6)


def test_param_count_examples():
    assert param_count([5, 4, 3, 2, 3, 4, 5]) == 97
    assert param_count([2, 1, 2]) == 7
    for n in (1, 3, 8):
        assert param_count([n, n]) == n * n + n
    with pytest.raises(ValueError):
        param_count([4])


def test_param_count_equals_stored_scalars(rng):
    for _ in range(30):
        sizes = rng.integers(1, 12, size=int(rng.integers(2, 7))).tolist()
        m = init_mlp(sizes, seed=1, check_shape=False)
        assert m.n_params == param_count(sizes)


def test_mirror_layers():
    assert mirror_layers(5, [4, 3, 2]) == [5, 4, 3, 2, 3, 4, 5]
    assert mirror_layers(8, [3]) == [8, 3, 8]


def test_shape_invariants():
    with pytest.raises(ValueError):
        init_mlp([4, 3, 2, 4])
    with pytest.raises(ValueError):
        init_mlp([3, 3, 3])


def test_forward_zero_weights():
    m = MlpAutoencoder([3, 2, 3], [np.zeros((3, 2)), np.zeros((2, 3))], [np.zeros(2), np.zeros(3)])
    x_hat, _ = forward(m, [0.2, 0.5, 0.9])
    np.testing.assert_array_equal(x_hat, 0)


def test_forward_identity_network():
    # identity weights; the last input is 0 so a 2-wide latent loses nothing
    sizes = [3, 3, 2, 3, 3]
    W = [np.eye(3), np.eye(3)[:, :2], np.eye(3)[:2, :], np.eye(3)]
    b = [np.zeros(s) for s in sizes[1:]]
    m = MlpAutoencoder(sizes, W, b, check_shape=False)
    x = np.array([0.3, 0.8, 0.0])
    np.testing.assert_allclose(forward(m, x)[0], x)


def test_forward_matches_scalar_oracle(rng):
    for sizes in ([4, 2, 4], [5, 4, 3, 2, 3, 4, 5]):
        m = init_mlp(sizes, seed=7)
        for i in range(len(m.biases)):
            m.biases[i] = rng.normal(size=m.biases[i].shape)
        x = rng.uniform(0, 1, sizes[0])
        linear = {i for i in range(len(m.weights)) if m.is_linear(i)}
        ref = oracles.mlp_forward_oracle(m.weights, m.biases, x, m.slope, linear)
        np.testing.assert_allclose(forward(m, x)[0], ref, atol=1e-12)


def test_linear_layers_feed_latent_and_output():
    m = init_mlp([5, 4, 3, 2, 3, 4, 5])
    assert [m.is_linear(i) for i in range(6)] == [False, False, True, False, False, True]


def test_rmse_examples():
    assert rmse_loss([1, 2], [1, 2]) == 0.0
    assert rmse_loss([0, 0], [1, 1]) == 1.0
    assert rmse_loss([1, 2, 3], [2, 2, 2]) == pytest.approx(np.sqrt(2 / 3))
    with pytest.raises(ValueError):
        rmse_loss([1, 2], [1, 2, 3])


def test_backward_finite_differences(rng):
    for sizes in ([4, 3, 2, 3, 4], [6, 2, 6], [5, 4, 3, 2, 3, 4, 5]):
        m = init_mlp(sizes, seed=int(rng.integers(1000)))
        for i in range(len(m.biases)):
            m.biases[i] = rng.normal(scale=0.1, size=m.biases[i].shape)
        fd_check(m, rng.uniform(0, 1, (7, sizes[0])))


def test_backward_perfect_reconstruction_is_zero():
    sizes = [2, 2, 1, 2, 2]
    W = [np.eye(2), np.array([[1.0], [0.0]]), np.array([[1.0, 0.0]]), np.eye(2)]
    m = MlpAutoencoder(sizes, W, [np.zeros(s) for s in sizes[1:]], check_shape=False)
    X = np.array([[0.4, 0.0], [0.9, 0.0]])
    _, cache = forward(m, X)
    assert np.all(backward(m, X, cache).flat() == 0)


def test_single_neuron_gradient_sign():
    # y = w x with a 1-1 linear map, loss |w x - x|
    def grad_at(w):
        m = MlpAutoencoder([1, 1], [np.array([[w]])], [np.zeros(1)], check_shape=False)
        x = np.array([[0.7]])
        _, cache = forward(m, x)
        return backward(m, x, cache).weights[0][0, 0]
    assert grad_at(0.5) < 0 < grad_at(1.5)


def test_backward_stale_cache():
    m = init_mlp([4, 2, 4])
    x = np.full((1, 4), 0.5)
    _, cache = forward(m, x)
    m2 = init_mlp([4, 2, 4])
    with pytest.raises(ConsistencyError):
        backward(m2, x, cache)
    trained, _ = train_cae(m, np.full((4, 4), 0.5), TrainConfig(epochs=1, batch_size=2))
    _, cache = forward(trained, x)
    from qaead.cae import _assign, _flatten
    _assign(trained, _flatten(trained))
    with pytest.raises(ConsistencyError):
        backward(trained, x, cache)


def test_pruning_examples():
    m = MlpAutoencoder([2, 1, 2], [np.array([[-0.1], [0.5]]), np.array([[-0.3, 0.2]])],
                       [np.zeros(1), np.zeros(2)])
    assert apply_magnitude_pruning(m, 0.0).prune_mask is None
    p = apply_magnitude_pruning(m, 0.5)
    np.testing.assert_array_equal(p.prune_mask[0].ravel(), [0, 1])
    np.testing.assert_array_equal(p.prune_mask[1].ravel(), [1, 0])
    np.testing.assert_array_equal(p.weights[0].ravel(), [0, 0.5])
    assert p.n_masked + p.n_effective_params == p.n_params
    for bad in (-0.1, 1.0):
        with pytest.raises(ValueError):
            apply_magnitude_pruning(m, bad)


def test_pruning_table_sparsity():
    m = init_mlp(mirror_layers(8, [5, 4]), seed=0)
    n_w = sum(w.size for w in m.weights)
    p = apply_magnitude_pruning(m, 0.553)
    assert p.n_masked == int(np.floor(0.553 * n_w))
    assert p.n_effective_params == param_count(m.layer_sizes) - p.n_masked


def test_pruned_gradients_and_training_keep_mask(rng):
    ds = synth_dataset(SynthConfig(n_background=300, n_signal=10), seed=1)
    bg = ds.features[ds.labels == 0]
    X = transform(fit_scaler(bg, ds.feature_kinds, Target.CAE), bg)
    m = apply_magnitude_pruning(init_mlp(mirror_layers(8, [4, 3]), seed=2), 0.5)
    _, cache = forward(m, X[:5])
    g = backward(m, X[:5], cache)
    for gw, mask in zip(g.weights, m.prune_mask):
        assert np.all(gw[mask == 0] == 0)
    trained, losses = train_cae(m, X, TrainConfig(epochs=50, batch_size=30, lr=0.001))
    assert len(losses) == 51 and losses[-1] < losses[0]
    for w, mask in zip(trained.weights, trained.prune_mask):
        assert np.all(w[mask == 0] == 0)


def test_train_zero_epochs_and_determinism(rng):
    X = rng.uniform(0, 1, (40, 4))
    m = init_mlp([4, 2, 4], seed=3)
    same, losses = train_cae(m, X, TrainConfig(epochs=0, batch_size=10))
    for a, b in zip(same.weights, m.weights):
        np.testing.assert_array_equal(a, b)
    assert len(losses) == 1
    cfg = TrainConfig(epochs=3, batch_size=8, lr=0.001, seed=4)
    a, la = train_cae(m, X, cfg)
    b, lb = train_cae(m, X, cfg)
    assert la == lb
    with pytest.raises(DataError):
        train_cae(m, X * 3, cfg)


def test_scores_and_round_trip(tmp_path, rng):
    m = apply_magnitude_pruning(init_mlp([5, 3, 5], seed=9), 0.3)
    X = rng.uniform(0, 1, (6, 5))
    np.testing.assert_allclose(cae_scores(m, X), [rmse_loss(x, forward(m, x)[0]) for x in X], atol=1e-14)
    m.save(tmp_path / "cae.json")
    back = MlpAutoencoder.load(tmp_path / "cae.json")
    np.testing.assert_array_equal(cae_scores(back, X), cae_scores(m, X))
    assert back.n_masked == m.n_masked
