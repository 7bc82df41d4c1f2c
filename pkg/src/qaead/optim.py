"""Parameter-shift gradients, Adam, and the QAE training loop."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError, UnsupportedGateError
from .metrics import Metric, metric_batch
from .qae import QaeModel, batch_losses_for_thetas, encoded_states
from .statevec import ROTATIONS, Param

QAE_LR = 0.005
CAE_LR = 0.001
_RANGE_TOL = 1e-9


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = QAE_LR
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, lr: float = QAE_LR, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, lr, **kw)


def adam_step(state: AdamState, theta, grad) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update; returns fresh state and parameters."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if theta.shape != grad.shape or theta.shape != state.m.shape:
        raise ValueError(f"shape mismatch: theta {theta.shape}, grad {grad.shape}, state {state.m.shape}")
    t = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = m / (1 - state.beta1 ** t)
    v_hat = v / (1 - state.beta2 ** t)
    new_theta = theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return replace(state, m=m, v=v, step=t), new_theta


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 50
    lr: float = QAE_LR
    seed: int = 0
    snapshot_every: int = 0
    snapshot_q: bool = False
    snapshot_m2: bool = False
    n_validation: int = 1000
    init: str = "uniform"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.init not in ("uniform", "keep"):
            raise ValueError("init must be 'uniform' or 'keep'")


def _check_shift_rule(model: QaeModel) -> None:
    uses = Counter()
    for g in model.ansatz.gates:
        for a in g.angles:
            if isinstance(a, Param):
                if g.kind not in ROTATIONS:
                    raise UnsupportedGateError(f"parameter {a.index} drives a {g.kind.value} gate")
                uses[a.index] += 1
    shared = [k for k, c in uses.items() if c > 1]
    if shared:
        raise UnsupportedGateError(f"parameters {shared} drive more than one gate")


def parameter_shift_grad(model: QaeModel, X, theta=None) -> np.ndarray:
    """grad_k = [C(theta_k + pi/2) - C(theta_k - pi/2)] / 2, exact for Pauli rotations."""
    _check_shift_rule(model)
    theta = model.theta if theta is None else np.asarray(theta, dtype=np.float64)
    p = theta.size
    if p == 0:
        return np.zeros(0)
    shifts = np.eye(p) * (np.pi / 2)
    thetas = np.concatenate([theta + shifts, theta - shifts])
    losses = batch_losses_for_thetas(model, X, thetas)
    return 0.5 * (losses[:p] - losses[p:])


def check_scaled(X, upper: float = np.pi) -> None:
    X = np.asarray(X)
    lo, hi = float(X.min()), float(X.max())
    if lo < -_RANGE_TOL or hi > upper + _RANGE_TOL:
        raise DataError(f"features must be scaled into [0, {upper:.6g}], found range [{lo:.6g}, {hi:.6g}]")


def init_theta(n_params: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2 * np.pi, size=n_params)


@dataclass
class Snapshot:
    epoch: int
    loss: float
    mean_q: float | None = None
    mean_m2: float | None = None


@dataclass
class TrainResult:
    model: object
    losses: list[float]
    snapshots: list[Snapshot] = field(default_factory=list)
    n_steps: int = 0

    def write_log(self, path) -> Path:
        return write_training_log(path, self.losses, self.snapshots)


def write_training_log(path, losses, snapshots=()) -> Path:
    """CSV: epoch, mean_loss, mean_Q, mean_M2 (metric cells blank when not sampled)."""
    path = Path(path)
    snaps = {s.epoch: s for s in snapshots}
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "mean_loss", "mean_Q", "mean_M2"])
        for epoch, loss in enumerate(losses):
            s = snaps.get(epoch)
            q = "" if s is None or s.mean_q is None else repr(s.mean_q)
            m = "" if s is None or s.mean_m2 is None else repr(s.mean_m2)
            w.writerow([epoch, repr(float(loss)), q, m])
    return path


def _full_loss(model: QaeModel, X: np.ndarray, theta: np.ndarray) -> float:
    return float(batch_losses_for_thetas(model, X, theta[None, :])[0])


def _snapshot(model: QaeModel, theta, V, cfg: TrainConfig, epoch: int, loss: float) -> Snapshot:
    snap = Snapshot(epoch, loss)
    if cfg.snapshot_q or cfg.snapshot_m2:
        psi = encoded_states(model, V, theta)
        if cfg.snapshot_q:
            snap.mean_q = float(metric_batch(psi, model.n_qubits, Metric.Q).mean())
        if cfg.snapshot_m2:
            snap.mean_m2 = float(metric_batch(psi, model.n_qubits, Metric.M2).mean())
    return snap


def train(model: QaeModel, train_data, cfg: TrainConfig, validation=None) -> TrainResult:
    """Minibatch Adam on the trash-fidelity loss.

    ``losses[0]`` is the full-training-set loss at initialization and
    ``losses[e]`` the loss after epoch ``e``. Snapshots (when enabled) are taken
    at epoch 0, every ``snapshot_every`` epochs, and at the last epoch.
    """
    X = np.asarray(train_data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("training data must be a nonempty matrix")
    check_scaled(X)
    if cfg.batch_size > X.shape[0]:
        raise DataError(f"batch size {cfg.batch_size} exceeds training set size {X.shape[0]}")
    _check_shift_rule(model)
    rng = np.random.default_rng(cfg.seed)
    theta = model.theta.copy() if cfg.init == "keep" else init_theta(model.ansatz.n_params, rng)
    V = X[: cfg.n_validation] if validation is None else np.asarray(validation, dtype=np.float64)
    snapshots_on = cfg.snapshot_every > 0 and (cfg.snapshot_q or cfg.snapshot_m2)

    adam = AdamState.zeros(theta.size, lr=cfg.lr)
    losses = [_full_loss(model, X, theta)]
    snaps = [_snapshot(model, theta, V, cfg, 0, losses[0])] if snapshots_on else []
    n = X.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = X[order[start:start + cfg.batch_size]]
            grad = parameter_shift_grad(model, batch, theta)
            adam, theta = adam_step(adam, theta, grad)
        losses.append(_full_loss(model, X, theta))
        if snapshots_on and (epoch % cfg.snapshot_every == 0 or epoch == cfg.epochs):
            snaps.append(_snapshot(model, theta, V, cfg, epoch, losses[-1]))
    return TrainResult(model.with_theta(theta), losses, snaps, adam.step)
