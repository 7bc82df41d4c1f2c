import math

import numpy as np
import pytest

import oracles
from qaead.circuits import Circuit, QaePartition, feature_map_rx
from qaead.data import SynthConfig, Target, fit_scaler, synth_dataset, transform
from qaead.errors import DataError, UnsupportedGateError
from qaead.optim import AdamState, TrainConfig, adam_step, parameter_shift_grad, train, write_training_log
from qaead.qae import QaeModel, batch_loss
from qaead.statevec import Gate, GateKind, Param


@pytest.fixture(scope="module")
def scaled_background():
    ds = synth_dataset(SynthConfig(n_background=400, n_signal=10), seed=3)
    bg = ds.features[ds.labels == 0]
    return transform(fit_scaler(bg, ds.feature_kinds, Target.QAE), bg)


def test_shift_rule_analytic_single_rotation():
    # theta_0 = 0: trash = RY(theta_1)|0>, loss = 1 - cos^2(theta_1 / 2)
    m = QaeModel.create("rx", 2, "hea", 1)
    x = np.zeros((1, 2))
    g = parameter_shift_grad(m, x, np.array([0.0, np.pi / 2]))
    np.testing.assert_allclose(g, [0.0, 0.5], atol=1e-12)
    np.testing.assert_allclose(parameter_shift_grad(m, x, np.zeros(2)), [0.0, 0.0], atol=1e-12)


def test_shift_rule_matches_finite_differences(rng):
    m = QaeModel.create("g", 8, "new", 2, 2)
    X = rng.uniform(0, np.pi, (5, 8))
    theta = rng.uniform(0, 2 * np.pi, m.ansatz.n_params)
    fd = oracles.central_fd(lambda t: batch_loss(m, X, t), theta)
    np.testing.assert_allclose(parameter_shift_grad(m, X, theta), fd, atol=1e-6)


def test_unsupported_parameterized_gates():
    part = QaePartition.standard(2, 1)
    g_gate = Circuit(2, (Gate(GateKind.G, (0,), (Param(0), 0.0, 0.0)),))
    with pytest.raises(UnsupportedGateError):
        parameter_shift_grad(QaeModel(feature_map_rx(2), g_gate, part, [0.1]), np.zeros((1, 2)))
    shared = Circuit(2, (Gate(GateKind.RY, (0,), (Param(0),)), Gate(GateKind.RY, (1,), (Param(0),))))
    with pytest.raises(UnsupportedGateError):
        parameter_shift_grad(QaeModel(feature_map_rx(2), shared, part, [0.1]), np.zeros((1, 2)))


def test_adam_zero_gradient():
    s = AdamState.zeros(3)
    s2, th = adam_step(s, np.ones(3), np.zeros(3))
    np.testing.assert_array_equal(th, np.ones(3))
    assert s2.step == 1 and s.step == 0


def test_adam_first_step_is_signed_lr():
    for g in (3.0, -0.2, 1e-3):
        s = AdamState.zeros(1, lr=0.01)
        _, th = adam_step(s, np.zeros(1), np.array([g]))
        assert th[0] == pytest.approx(-0.01 * g / (abs(g) + 1e-8), rel=1e-12)
        assert th[0] == pytest.approx(-0.01 * np.sign(g), rel=1e-4)


def test_adam_constant_gradient_does_not_grow():
    s = AdamState.zeros(4, lr=0.005)
    theta = np.zeros(4)
    g = np.array([0.5, -2.0, 1e-3, 7.0])
    s, t1 = adam_step(s, theta, g)
    s, t2 = adam_step(s, t1, g)
    assert np.all(np.abs(t2 - t1) <= np.abs(t1 - theta) * (1 + 1e-6))


def test_adam_matches_textbook_recurrence(rng):
    lr, b1, b2, eps = 0.003, 0.9, 0.999, 1e-8
    s = AdamState.zeros(3, lr=lr)
    theta = rng.normal(size=3)
    m = v = np.zeros(3)
    ref = theta.copy()
    for t in range(1, 30):
        g = rng.normal(size=3)
        s, theta = adam_step(s, theta, g)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g ** 2
        ref = ref - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    np.testing.assert_allclose(theta, ref, rtol=1e-12, atol=1e-14)


def test_adam_dimension_mismatch():
    with pytest.raises(ValueError):
        adam_step(AdamState.zeros(2), np.zeros(3), np.zeros(3))


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=-1)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)


def test_one_epoch_step_count(scaled_background):
    X = scaled_background[:130]
    m = QaeModel.create("g", 8, "new", 2)
    for bs in (130, 50, 1):
        res = train(m, X, TrainConfig(epochs=1, batch_size=bs))
        assert res.n_steps == math.ceil(130 / bs)
        assert len(res.losses) == 2


def test_train_rejects_unscaled_or_oversized(scaled_background):
    m = QaeModel.create("g", 8, "new", 2)
    with pytest.raises(DataError):
        train(m, scaled_background[:20] * 2, TrainConfig(epochs=1, batch_size=5))
    with pytest.raises(DataError):
        train(m, scaled_background[:20], TrainConfig(epochs=1, batch_size=50))


def test_training_is_deterministic(scaled_background):
    X = scaled_background[:100]
    m = QaeModel.create("g", 8, "new", 2)
    cfg = TrainConfig(epochs=3, batch_size=20, seed=11)
    a, b = train(m, X, cfg), train(m, X, cfg)
    assert a.losses == b.losses
    np.testing.assert_array_equal(a.model.theta, b.model.theta)
    c = train(m, X, TrainConfig(epochs=3, batch_size=20, seed=12))
    assert c.losses != a.losses


def test_descent_sanity(scaled_background):
    X = scaled_background[:200]
    m = QaeModel.create("g", 8, "new", 2)
    res = train(m, X, TrainConfig(epochs=60, batch_size=50, lr=0.005, seed=0))
    losses = np.array(res.losses)
    assert losses[-1] < losses[0]
    avg = np.convolve(losses, np.ones(10) / 10, mode="valid")
    steps = np.diff(avg)
    assert np.mean(steps <= 0) >= 0.9


def test_snapshots_and_log(tmp_path, scaled_background):
    X = scaled_background[:60]
    m = QaeModel.create("g", 8, "new", 2)
    cfg = TrainConfig(epochs=5, batch_size=30, snapshot_every=2, snapshot_q=True, snapshot_m2=True)
    res = train(m, X, cfg, validation=X[:10])
    assert [s.epoch for s in res.snapshots] == [0, 2, 4, 5]
    for s in res.snapshots:
        assert 0 <= s.mean_q <= 1 and 0 <= s.mean_m2 <= np.log2(17) - 1
        assert s.loss == res.losses[s.epoch]
    path = write_training_log(tmp_path / "log.csv", res.losses, res.snapshots)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,mean_loss,mean_Q,mean_M2"
    assert len(lines) == 7
    assert lines[2].endswith(",,")  # epoch 1 not sampled


def test_keep_init_starts_from_model_theta(scaled_background):
    X = scaled_background[:40]
    m = QaeModel.create("g", 8, "new", 2)
    m = m.with_theta(np.full(4, 0.3))
    res = train(m, X, TrainConfig(epochs=0, batch_size=10, init="keep"))
    np.testing.assert_array_equal(res.model.theta, m.theta)
    assert res.losses == [pytest.approx(batch_loss(m, X))]
