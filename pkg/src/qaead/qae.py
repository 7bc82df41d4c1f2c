"""QAE loss: trash-space fidelity against |0...0>, exact or via a SWAP test."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .circuits import (
    Circuit, QaePartition, assemble_qae_circuit, build_ansatz, build_feature_map, run,
)


class FidelityMode(str, enum.Enum):
    EXACT = "exact"
    SWAP_TEST = "swap_test"


@dataclass
class QaeModel:
    feature_map: Circuit
    ansatz: Circuit
    partition: QaePartition
    theta: np.ndarray
    fidelity_mode: FidelityMode = FidelityMode.EXACT
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        self.fidelity_mode = FidelityMode(self.fidelity_mode)
        if self.theta.shape != (self.ansatz.n_params,):
            raise ValueError(f"theta must have length {self.ansatz.n_params}, got {self.theta.shape}")
        n = self.partition.n_data_qubits
        if self.feature_map.n_qubits != n or self.ansatz.n_qubits != n:
            raise ValueError("feature map, ansatz and partition disagree on qubit count")

    @property
    def n_qubits(self) -> int:
        return self.partition.n_data_qubits

    @property
    def n_features(self) -> int:
        return self.feature_map.n_data

    def with_theta(self, theta) -> "QaeModel":
        return replace(self, theta=np.array(theta, dtype=np.float64))

    @classmethod
    def create(cls, feature_map: str, n_features: int, ansatz: str, latent_size: int,
               layers: int = 1, theta=None, fidelity_mode=FidelityMode.EXACT) -> "QaeModel":
        fm = build_feature_map(feature_map, n_features)
        an = build_ansatz(ansatz, fm.n_qubits, latent_size, layers)
        part = QaePartition.standard(fm.n_qubits, latent_size)
        if theta is None:
            theta = np.zeros(an.n_params)
        spec = {"feature_map": feature_map, "n_features": n_features, "ansatz": ansatz,
                "latent_size": latent_size, "layers": layers}
        return cls(fm, an, part, theta, fidelity_mode, spec)

    def to_dict(self) -> dict:
        return {
            "family": "qae",
            "spec": self.spec,
            "fidelity_mode": self.fidelity_mode.value,
            "theta": [float(t) for t in self.theta],
            "partition": {"latent": list(self.partition.latent), "trash": list(self.partition.trash),
                          "reference": list(self.partition.reference), "ancilla": self.partition.ancilla},
            "feature_map": self.feature_map.to_dict(),
            "ansatz": self.ansatz.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QaeModel":
        p = doc["partition"]
        return cls(Circuit.from_dict(doc["feature_map"]), Circuit.from_dict(doc["ansatz"]),
                   QaePartition(p["latent"], p["trash"], p["reference"], p["ancilla"]),
                   doc["theta"], doc.get("fidelity_mode", "exact"), doc.get("spec", {}))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "QaeModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _as_batch(model: QaeModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features per event, got shape {X.shape}")
    return X


def feature_states(model: QaeModel, X) -> np.ndarray:
    return run(model.feature_map, X=_as_batch(model, X))


def encoded_states(model: QaeModel, X, theta=None) -> np.ndarray:
    """States after feature map and ansatz, shape ``(B, 2**n)``."""
    theta = model.theta if theta is None else theta
    return run(model.ansatz, theta, psi=feature_states(model, X))


def trash_zero_probability(psi: np.ndarray, n: int, trash) -> np.ndarray:
    """<0..0| rho_trash |0..0> for each row of ``psi``."""
    v = psi.reshape((psi.shape[0],) + (2,) * n)
    idx = [slice(None)] * (n + 1)
    for q in trash:
        idx[q + 1] = 0
    sub = v[tuple(idx)]
    return np.sum(np.abs(sub.reshape(psi.shape[0], -1)) ** 2, axis=1)


def _swap_test_fidelities(model: QaeModel, X: np.ndarray, theta) -> np.ndarray:
    circ = assemble_qae_circuit(model.feature_map, model.ansatz, model.partition)
    psi = run(circ, theta, X)
    n = circ.n_qubits
    a = model.partition.ancilla
    v = psi.reshape(psi.shape[0], 2 ** a, 2, 2 ** (n - a - 1))
    p0 = np.sum(np.abs(v[:, :, 0, :]) ** 2, axis=(1, 2))
    return 2.0 * p0 - 1.0


def trash_fidelities(model: QaeModel, X, theta=None, mode: FidelityMode | None = None) -> np.ndarray:
    X = _as_batch(model, X)
    theta = model.theta if theta is None else np.asarray(theta, dtype=np.float64)
    mode = FidelityMode(mode or model.fidelity_mode)
    if mode == FidelityMode.SWAP_TEST:
        return _swap_test_fidelities(model, X, theta)
    psi = encoded_states(model, X, theta)
    return trash_zero_probability(psi, model.n_qubits, model.partition.trash)


def trash_fidelity(model: QaeModel, x, mode: FidelityMode | None = None) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a single feature vector")
    return float(trash_fidelities(model, x[None, :], mode=mode)[0])


def batch_loss(model: QaeModel, X, theta=None) -> float:
    """Mean of 1 - F over the batch."""
    X = _as_batch(model, X)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    return float(np.mean(1.0 - trash_fidelities(model, X, theta)))


def batch_losses_for_thetas(model: QaeModel, X, thetas: np.ndarray) -> np.ndarray:
    """Batch loss for each row of ``thetas``; shares the feature-map pass."""
    X = _as_batch(model, X)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    if model.fidelity_mode == FidelityMode.SWAP_TEST:
        return np.array([batch_loss(model, X, t) for t in thetas])
    b = X.shape[0]
    k = thetas.shape[0]
    base = feature_states(model, X)
    psi = np.tile(base, (k, 1))
    theta_rows = np.repeat(thetas, b, axis=0)
    psi = run(model.ansatz, theta_rows, psi=psi)
    fid = trash_zero_probability(psi, model.n_qubits, model.partition.trash).reshape(k, b)
    return np.mean(1.0 - fid, axis=1)


def anomaly_scores(model: QaeModel, X) -> np.ndarray:
    return 1.0 - trash_fidelities(model, X)


def anomaly_score(model: QaeModel, x) -> float:
    return 1.0 - trash_fidelity(model, x)
