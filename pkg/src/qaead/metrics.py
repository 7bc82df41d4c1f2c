"""Meyer-Wallach entanglement Q and stabilizer 2-Renyi entropy (magic) M2.

Both have a vectorized fast path used in training snapshots and histograms,
and a slow literal form kept for cross-checking.
"""
from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .circuits import Circuit, run
from .errors import SizeError, StateError
from .statevec import StateVector, single_qubit_purities

MAX_MAGIC_QUBITS = 8
_NORM_TOL = 1e-8


def _check_normalized(psi: np.ndarray) -> None:
    norms = np.linalg.norm(psi, axis=-1)
    if np.any(np.abs(norms - 1.0) > _NORM_TOL):
        raise StateError(f"state not normalized (norm {norms.ravel()[0]:.6g})")


def _as_rows(state) -> tuple[np.ndarray, int]:
    if isinstance(state, StateVector):
        return state.amplitudes[None, :], state.n_qubits
    amps = np.asarray(state, dtype=np.complex128)
    amps = amps[None, :] if amps.ndim == 1 else amps
    n = int(round(np.log2(amps.shape[1])))
    if 2 ** n != amps.shape[1]:
        raise SizeError(f"length {amps.shape[1]} is not a power of two")
    return amps, n


# ---------------------------------------------------------------------------
# entanglement

def meyer_wallach_batch(psi: np.ndarray, n: int) -> np.ndarray:
    """Q = 2 (1 - mean single-qubit purity) for each row."""
    _check_normalized(psi)
    q = 2.0 * (1.0 - single_qubit_purities(psi, n).mean(axis=1))
    return np.clip(q, 0.0, 1.0)


def meyer_wallach_q(state) -> float:
    psi, n = _as_rows(state)
    return float(meyer_wallach_batch(psi, n)[0])


def meyer_wallach_q_literal(state) -> float:
    """Q from the projector maps l_j(b) and the wedge-distance D, no shortcuts."""
    psi, n = _as_rows(state)
    _check_normalized(psi)
    psi = psi[0]
    total = 0.0
    for j in range(n):
        v = psi.reshape(2 ** j, 2, 2 ** (n - j - 1))
        u0 = v[:, 0, :].ravel()
        u1 = v[:, 1, :].ravel()
        d = 0.0
        for i in range(u0.size):
            for k in range(u0.size):
                d += abs(u0[i] * u1[k] - u0[k] * u1[i]) ** 2
        total += 0.5 * d
    return 4.0 / n * total


# ---------------------------------------------------------------------------
# magic

@lru_cache(maxsize=None)
def _hadamard_sign_matrix(n: int) -> np.ndarray:
    h = np.array([[1.0, 1.0], [1.0, -1.0]])
    out = np.ones((1, 1))
    for _ in range(n):
        out = np.kron(out, h)
    return out


@lru_cache(maxsize=None)
def _xor_table(n: int) -> np.ndarray:
    i = np.arange(2 ** n)
    return i[None, :] ^ i[:, None]


def _xz_expectations(psi: np.ndarray, n: int) -> np.ndarray:
    """E[b, x, z] = <psi_b| X^x Z^z |psi_b>, shape ``(B, 2**n, 2**n)``."""
    perm = _xor_table(n)
    c = psi.conj()[:, perm] * psi[:, None, :]
    return c @ _hadamard_sign_matrix(n)


def pauli_spectrum(state) -> np.ndarray:
    """Real expectation values of all 4**n Pauli strings.

    Ordering: base-4 digits (I, X, Y, Z) per qubit, qubit 0 most significant.
    """
    psi, n = _as_rows(state)
    if n > MAX_MAGIC_QUBITS:
        raise SizeError(f"Pauli enumeration limited to {MAX_MAGIC_QUBITS} qubits")
    e = _xz_expectations(psi, n)[0]
    digits = np.array(np.unravel_index(np.arange(4 ** n), (4,) * n))  # (n, 4**n)
    weights = 2 ** np.arange(n - 1, -1, -1)[:, None]
    x = np.sum(((digits == 1) | (digits == 2)) * weights, axis=0)
    z = np.sum(((digits == 2) | (digits == 3)) * weights, axis=0)
    n_y = np.sum(digits == 2, axis=0)
    return np.real(e[x, z] * (1j) ** n_y)


def stabilizer_renyi_batch(psi: np.ndarray, n: int, chunk_entries: int = 1 << 22) -> np.ndarray:
    if n > MAX_MAGIC_QUBITS:
        raise SizeError(f"magic evaluation limited to {MAX_MAGIC_QUBITS} qubits, got {n}")
    _check_normalized(psi)
    d = 2 ** n
    step = max(1, chunk_entries // (d * d))
    out = np.empty(psi.shape[0])
    for s in range(0, psi.shape[0], step):
        e = _xz_expectations(psi[s:s + step], n)
        w = np.sum(np.abs(e) ** 4, axis=(1, 2)) / d
        out[s:s + step] = -np.log2(w)
    out[(out < 0) & (out >= -1e-12)] = 0.0
    return out


def stabilizer_renyi_m2(state) -> float:
    psi, n = _as_rows(state)
    return float(stabilizer_renyi_batch(psi, n)[0])


_PAULIS = (
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


def stabilizer_renyi_m2_literal(state) -> float:
    """Explicit Kronecker-product Pauli enumeration; only for small n."""
    psi, n = _as_rows(state)
    if n > 5:
        raise SizeError("literal magic evaluation limited to 5 qubits")
    psi = psi[0]
    total = 0.0
    for idx in np.ndindex(*(4,) * n):
        p = np.ones((1, 1), dtype=np.complex128)
        for digit in idx:
            p = np.kron(p, _PAULIS[digit])
        total += np.real(psi.conj() @ p @ psi) ** 4
    return float(-np.log2(total / 2 ** n))


def magic_upper_bound(n_qubits: int) -> float:
    return float(np.log2(2 ** n_qubits + 1) - 1)


# ---------------------------------------------------------------------------
# distributions

class Metric(str, enum.Enum):
    Q = "Q"
    M2 = "M2"


class Provenance(str, enum.Enum):
    TRAINED_THETA_OVER_DATA = "TRAINED_THETA_OVER_DATA"
    RANDOM_THETA_OVER_DATA = "RANDOM_THETA_OVER_DATA"


@dataclass(frozen=True)
class Trained:
    theta: tuple[float, ...]

    def __init__(self, theta):
        object.__setattr__(self, "theta", tuple(float(t) for t in np.ravel(theta)))


@dataclass(frozen=True)
class Uniform:
    n_draws: int
    seed: int


@dataclass
class MetricDistribution:
    metric: Metric
    samples: np.ndarray
    provenance: Provenance
    n_theta_draws: int
    n_data_points: int
    mean: float = field(init=False)
    std: float = field(init=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.mean = float(np.mean(self.samples))
        self.std = float(np.std(self.samples))

    def summary(self) -> dict:
        return {
            "metric": Metric(self.metric).value,
            "provenance": Provenance(self.provenance).value,
            "mean": self.mean,
            "std": self.std,
            "n_samples": int(self.samples.size),
            "n_theta_draws": self.n_theta_draws,
            "n_data_points": self.n_data_points,
        }

    def write_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([Metric(self.metric).value])
            for v in self.samples:
                w.writerow([repr(float(v))])
        return path

    def write_summary(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def metric_batch(psi: np.ndarray, n: int, metric: Metric) -> np.ndarray:
    metric = Metric(metric)
    if metric == Metric.Q:
        return meyer_wallach_batch(psi, n)
    return stabilizer_renyi_batch(psi, n)


def circuit_metric_values(feature_map: Circuit, ansatz: Circuit, data, theta, metric: Metric) -> np.ndarray:
    """Metric of the full feature-map + ansatz state for every data row."""
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    psi = run(feature_map, X=data)
    psi = run(ansatz, np.asarray(theta, dtype=np.float64), psi=psi)
    return metric_batch(psi, ansatz.n_qubits, metric)


def sample_metric_distribution(feature_map: Circuit, ansatz: Circuit, data, source,
                               metric: Metric | str) -> MetricDistribution:
    """Trained: one value per data point. Uniform: one data-averaged value per theta draw."""
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("data must be a nonempty 2-D matrix")
    metric = Metric(metric)
    if isinstance(source, Trained):
        vals = circuit_metric_values(feature_map, ansatz, data, np.array(source.theta), metric)
        return MetricDistribution(metric, vals, Provenance.TRAINED_THETA_OVER_DATA, 1, data.shape[0])
    if isinstance(source, Uniform):
        rng = np.random.default_rng(source.seed)
        thetas = rng.uniform(0.0, 2 * np.pi, size=(source.n_draws, ansatz.n_params))
        means = np.array([circuit_metric_values(feature_map, ansatz, data, t, metric).mean() for t in thetas])
        return MetricDistribution(metric, means, Provenance.RANDOM_THETA_OVER_DATA, source.n_draws, data.shape[0])
    raise TypeError(f"unknown theta source {source!r}")
