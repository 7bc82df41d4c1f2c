"""Classical MLP autoencoder baseline with magnitude pruning.

Hidden layers use leaky-ReLU; the layer feeding the latent space and the
output layer are linear. Loss is the per-event RMSE, averaged over a batch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConsistencyError, DataError
from .optim import AdamState, CAE_LR, TrainConfig, check_scaled

LEAKY_SLOPE = 0.01


def param_count(layer_sizes: Sequence[int]) -> int:
    """Weights plus biases of a dense network with the given layer widths."""
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output layer")
    if any(s < 1 for s in sizes):
        raise ValueError("layer widths must be positive")
    return sum(a * b for a, b in zip(sizes[:-1], sizes[1:])) + sum(sizes[1:])


def mirror_layers(n_inputs: int, encoder: Sequence[int]) -> list[int]:
    """[n, h1, ..., latent] -> [n, h1, ..., latent, ..., h1, n]."""
    encoder = [int(h) for h in encoder]
    if not encoder:
        raise ValueError("encoder must contain at least the latent layer")
    return [n_inputs] + encoder + encoder[-2::-1] + [n_inputs]


@dataclass
class MlpAutoencoder:
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    prune_mask: list[np.ndarray] | None = None
    slope: float = LEAKY_SLOPE
    check_shape: bool = True
    version: int = field(default=0, compare=False)

    def __post_init__(self):
        self.layer_sizes = [int(s) for s in self.layer_sizes]
        s = self.layer_sizes
        if len(self.weights) != len(s) - 1 or len(self.biases) != len(s) - 1:
            raise ValueError("one weight matrix and bias vector per connection")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (s[i], s[i + 1]) or b.shape != (s[i + 1],):
                raise ValueError(f"layer {i} has shape {w.shape}/{b.shape}, expected ({s[i]}, {s[i + 1]})")
        if self.check_shape:
            if s != s[::-1]:
                raise ValueError(f"encoder and decoder must mirror each other: {s}")
            if s[self.latent_index] >= s[0]:
                raise ValueError("latent width must be strictly less than the input width")
        if self.prune_mask is not None:
            self.weights = [w * m for w, m in zip(self.weights, self.prune_mask)]

    @property
    def latent_index(self) -> int:
        return len(self.layer_sizes) // 2

    @property
    def n_params(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    @property
    def n_masked(self) -> int:
        return 0 if self.prune_mask is None else int(sum(np.sum(m == 0) for m in self.prune_mask))

    @property
    def n_effective_params(self) -> int:
        return self.n_params - self.n_masked

    def is_linear(self, layer: int) -> bool:
        out = layer + 1
        return out == self.latent_index or out == len(self.layer_sizes) - 1

    def to_dict(self) -> dict:
        return {
            "family": "cae",
            "layer_sizes": self.layer_sizes,
            "slope": self.slope,
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "mask": None if self.prune_mask is None else [m.ravel().astype(int).tolist() for m in self.prune_mask],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpAutoencoder":
        s = doc["layer_sizes"]
        shapes = list(zip(s[:-1], s[1:]))
        weights = [np.array(w, dtype=float).reshape(sh) for w, sh in zip(doc["weights"], shapes)]
        biases = [np.array(b, dtype=float) for b in doc["biases"]]
        mask = None
        if doc.get("mask") is not None:
            mask = [np.array(m, dtype=float).reshape(sh) for m, sh in zip(doc["mask"], shapes)]
        return cls(s, weights, biases, mask, doc.get("slope", LEAKY_SLOPE))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MlpAutoencoder":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def init_mlp(layer_sizes: Sequence[int], seed: int = 0, slope: float = LEAKY_SLOPE,
             check_shape: bool = True) -> MlpAutoencoder:
    """He-uniform weights scaled by fan-in, zero biases."""
    rng = np.random.default_rng(seed)
    sizes = [int(s) for s in layer_sizes]
    weights, biases = [], []
    for a, b in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / a)
        weights.append(rng.uniform(-limit, limit, size=(a, b)))
        biases.append(np.zeros(b))
    return MlpAutoencoder(sizes, weights, biases, None, slope, check_shape)


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre: list[np.ndarray]
    post: list[np.ndarray]
    model_id: int
    version: int


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def flat(self) -> np.ndarray:
        return np.concatenate([w.ravel() for w in self.weights] + [b.ravel() for b in self.biases])


def forward(model: MlpAutoencoder, x) -> tuple[np.ndarray, ForwardCache]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != model.layer_sizes[0]:
        raise ValueError(f"expected {model.layer_sizes[0]} inputs, got shape {x.shape}")
    pre, post = [], [X]
    h = X
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = z if model.is_linear(i) else np.where(z > 0, z, model.slope * z)
        pre.append(z)
        post.append(h)
    cache = ForwardCache(X, pre, post, id(model), model.version)
    return (h[0] if single else h), cache


def rmse_loss(x, x_hat) -> float:
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {x_hat.shape}")
    return float(np.sqrt(np.mean((x_hat - x) ** 2)))


def rmse_per_event(X, X_hat) -> np.ndarray:
    return np.sqrt(np.mean((np.asarray(X_hat) - np.asarray(X)) ** 2, axis=-1))


def batch_rmse(model: MlpAutoencoder, X) -> float:
    X_hat, _ = forward(model, np.atleast_2d(X))
    return float(np.mean(rmse_per_event(np.atleast_2d(X), X_hat)))


def backward(model: MlpAutoencoder, x, cache: ForwardCache) -> Gradients:
    """Gradient of the batch-mean per-event RMSE; zero where masked or at a perfect fit."""
    if cache.model_id != id(model) or cache.version != model.version:
        raise ConsistencyError("forward cache is stale; rerun forward on the current model")
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if X.shape != cache.inputs.shape or not np.array_equal(X, cache.inputs):
        raise ConsistencyError("inputs differ from the cached forward pass")
    B, n = X.shape
    X_hat = cache.post[-1]
    diff = X_hat - X
    loss = np.sqrt(np.mean(diff ** 2, axis=1, keepdims=True))
    safe = np.where(loss > 0, loss, 1.0)
    delta = np.where(loss > 0, diff / (n * safe), 0.0) / B
    gw, gb = [None] * len(model.weights), [None] * len(model.weights)
    for i in range(len(model.weights) - 1, -1, -1):
        if not model.is_linear(i):
            delta = delta * np.where(cache.pre[i] > 0, 1.0, model.slope)
        gw[i] = cache.post[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if model.prune_mask is not None:
            gw[i] = gw[i] * model.prune_mask[i]
        delta = delta @ model.weights[i].T
    return Gradients(gw, gb)


def apply_magnitude_pruning(model: MlpAutoencoder, sparsity: float) -> MlpAutoencoder:
    """Mask the floor(sparsity * n_weights) smallest-magnitude weights, ranked globally.

    Biases are never pruned. Ties break by position (layer, row, column).
    """
    if not 0 <= sparsity < 1:
        raise ValueError(f"sparsity must be in [0, 1), got {sparsity}")
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    if sparsity == 0:
        return MlpAutoencoder(model.layer_sizes, weights, biases, None, model.slope, model.check_shape)
    flat = np.concatenate([np.abs(w).ravel() for w in weights])
    k = int(math.floor(sparsity * flat.size))
    keep = np.ones(flat.size)
    keep[np.argsort(flat, kind="stable")[:k]] = 0.0
    masks, start = [], 0
    for w in weights:
        masks.append(keep[start:start + w.size].reshape(w.shape))
        start += w.size
    return MlpAutoencoder(model.layer_sizes, weights, biases, masks, model.slope, model.check_shape)


def copy_model(model: MlpAutoencoder) -> MlpAutoencoder:
    mask = None if model.prune_mask is None else [m.copy() for m in model.prune_mask]
    return MlpAutoencoder(list(model.layer_sizes), [w.copy() for w in model.weights],
                          [b.copy() for b in model.biases], mask, model.slope, model.check_shape)


def _flatten(model: MlpAutoencoder) -> np.ndarray:
    return np.concatenate([w.ravel() for w in model.weights] + [b.ravel() for b in model.biases])


def _assign(model: MlpAutoencoder, flat: np.ndarray) -> None:
    start = 0
    for i, w in enumerate(model.weights):
        model.weights[i] = flat[start:start + w.size].reshape(w.shape)
        start += w.size
    for i, b in enumerate(model.biases):
        model.biases[i] = flat[start:start + b.size].copy()
        start += b.size
    if model.prune_mask is not None:
        model.weights = [w * m for w, m in zip(model.weights, model.prune_mask)]
    model.version += 1


def train_cae(model: MlpAutoencoder, data, cfg: TrainConfig) -> tuple[MlpAutoencoder, list[float]]:
    """Minibatch Adam; the prune mask is re-applied after every step.

    Returns a trained copy and the loss trace (initial loss first, then one
    full-data mean RMSE per epoch).
    """
    X = np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("training data must be a nonempty matrix")
    check_scaled(X, upper=1.0)
    if cfg.batch_size > X.shape[0]:
        raise DataError(f"batch size {cfg.batch_size} exceeds training set size {X.shape[0]}")
    out = copy_model(model)
    rng = np.random.default_rng(cfg.seed)
    theta = _flatten(out)
    adam = AdamState.zeros(theta.size, lr=cfg.lr if cfg.lr is not None else CAE_LR)
    losses = [batch_rmse(out, X)]
    for _ in range(cfg.epochs):
        order = rng.permutation(X.shape[0])
        for start in range(0, X.shape[0], cfg.batch_size):
            batch = X[order[start:start + cfg.batch_size]]
            _, cache = forward(out, batch)
            grad = backward(out, batch, cache).flat()
            adam, theta = adam_step_flat(adam, theta, grad)
            _assign(out, theta)
            theta = _flatten(out)
        losses.append(batch_rmse(out, X))
    return out, losses


def adam_step_flat(adam: AdamState, theta: np.ndarray, grad: np.ndarray):
    from .optim import adam_step
    return adam_step(adam, theta, grad)


def cae_scores(model: MlpAutoencoder, X) -> np.ndarray:
    X_hat, _ = forward(model, np.atleast_2d(X))
    return rmse_per_event(np.atleast_2d(X), X_hat)
