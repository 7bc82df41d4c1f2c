"""Dense statevector simulation.

Qubit 0 is the most significant bit of the basis index, so the top wire of a
circuit diagram is the leftmost bit. Rotations use the half-angle convention
R_a(t) = exp(-i t sigma_a / 2).

The batched kernels (``apply_gate_batch`` and friends) act on arrays of shape
``(B, 2**n)``: one row per state. They accept per-row angles so a whole batch
of data-dependent feature-map states advances in one numpy call.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ArityError, SizeError

MAX_QUBITS = 24


class GateKind(str, enum.Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    G = "G"
    H = "H"
    CNOT = "CNOT"
    CSWAP = "CSWAP"


N_ANGLES = {
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.G: 3,
    GateKind.H: 0, GateKind.CNOT: 0, GateKind.CSWAP: 0,
}
N_WIRES = {
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.G: 1,
    GateKind.H: 1, GateKind.CNOT: 2, GateKind.CSWAP: 3,
}
ROTATIONS = (GateKind.RX, GateKind.RY, GateKind.RZ)


@dataclass(frozen=True)
class Param:
    """Angle taken from the trainable parameter vector."""
    index: int


@dataclass(frozen=True)
class Data:
    """Angle taken from the input feature vector."""
    index: int


AngleSource = Union[float, Param, Data]


@dataclass(frozen=True)
class Gate:
    """One gate: kind, wires (control(s) first) and angle sources.

    For CSWAP the wires are ``(control, a, b)``.
    """
    kind: GateKind
    wires: tuple[int, ...]
    angles: tuple[AngleSource, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        object.__setattr__(self, "angles", tuple(self.angles))
        if len(self.wires) != N_WIRES[self.kind]:
            raise ArityError(f"{self.kind.value} acts on {N_WIRES[self.kind]} wire(s), got {self.wires}")
        if len(set(self.wires)) != len(self.wires):
            raise ValueError(f"repeated wire in {self.wires}")
        if any(w < 0 for w in self.wires):
            raise IndexError(f"negative wire in {self.wires}")
        if len(self.angles) != N_ANGLES[self.kind]:
            raise ArityError(f"{self.kind.value} takes {N_ANGLES[self.kind]} angle(s), got {len(self.angles)}")


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2 ** self.n_qubits,):
            raise SizeError(f"expected {2 ** self.n_qubits} amplitudes, got {self.amplitudes.shape}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "StateVector":
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        n = int(round(np.log2(amplitudes.size)))
        if 2 ** n != amplitudes.size:
            raise SizeError(f"length {amplitudes.size} is not a power of two")
        return cls(n, amplitudes)


def _check_n(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise SizeError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")


def zero_state(n_qubits: int) -> StateVector:
    _check_n(n_qubits)
    amps = np.zeros(2 ** n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def zero_states(n_qubits: int, batch: int) -> np.ndarray:
    _check_n(n_qubits)
    psi = np.zeros((batch, 2 ** n_qubits), dtype=np.complex128)
    psi[:, 0] = 1.0
    return psi


# ---------------------------------------------------------------------------
# gate matrices

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def rotation_matrices(kind: GateKind, theta) -> np.ndarray:
    """Stack of 2x2 matrices, shape ``theta.shape + (2, 2)``."""
    theta = np.asarray(theta, dtype=np.float64)
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    out = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    if kind == GateKind.RX:
        out[..., 0, 0] = c
        out[..., 1, 1] = c
        out[..., 0, 1] = -1j * s
        out[..., 1, 0] = -1j * s
    elif kind == GateKind.RY:
        out[..., 0, 0] = c
        out[..., 1, 1] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
    elif kind == GateKind.RZ:
        out[..., 0, 0] = np.exp(-0.5j * theta)
        out[..., 1, 1] = np.exp(0.5j * theta)
    else:
        raise ValueError(f"{kind} is not a single-angle rotation")
    return out


def g_matrices(phi, theta, omega) -> np.ndarray:
    """G(phi, theta, omega) = RZ(omega) RY(theta) RZ(phi)."""
    return (rotation_matrices(GateKind.RZ, omega)
            @ rotation_matrices(GateKind.RY, theta)
            @ rotation_matrices(GateKind.RZ, phi))


# ---------------------------------------------------------------------------
# batched kernels

def apply_1q_batch(psi: np.ndarray, n: int, qubit: int, mat: np.ndarray) -> np.ndarray:
    """Apply a 2x2 matrix (shared, or one per row) to ``qubit`` of every row."""
    b = psi.shape[0]
    v = psi.reshape(b, 2 ** qubit, 2, 2 ** (n - qubit - 1))
    if mat.ndim == 2:
        out = np.einsum("ij,bajc->baic", mat, v)
    else:
        out = np.einsum("bij,bajc->baic", mat, v)
    return out.reshape(b, -1)


def _slicer(n: int, fixed: dict[int, int]) -> tuple:
    idx = [slice(None)] * (n + 1)
    for q, bit in fixed.items():
        idx[q + 1] = bit
    return tuple(idx)


def apply_cnot_batch(psi: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    b = psi.shape[0]
    v = psi.reshape((b,) + (2,) * n)
    out = v.copy()
    s0 = _slicer(n, {control: 1, target: 0})
    s1 = _slicer(n, {control: 1, target: 1})
    out[s0] = v[s1]
    out[s1] = v[s0]
    return out.reshape(b, -1)


def apply_cswap_batch(psi: np.ndarray, n: int, control: int, a: int, b_: int) -> np.ndarray:
    b = psi.shape[0]
    v = psi.reshape((b,) + (2,) * n)
    out = v.copy()
    s01 = _slicer(n, {control: 1, a: 0, b_: 1})
    s10 = _slicer(n, {control: 1, a: 1, b_: 0})
    out[s01] = v[s10]
    out[s10] = v[s01]
    return out.reshape(b, -1)


def apply_gate_batch(psi: np.ndarray, n: int, gate: Gate, angles=None) -> np.ndarray:
    """Apply ``gate`` to each row of ``psi``.

    ``angles`` has shape ``(k,)`` (shared) or ``(B, k)`` (per row) with ``k``
    the gate's angle count.
    """
    for w in gate.wires:
        if w >= n:
            raise IndexError(f"wire {w} out of range for {n} qubits")
    k = N_ANGLES[gate.kind]
    if k:
        angles = np.asarray(angles, dtype=np.float64)
        if angles.shape[-1:] != (k,):
            raise ArityError(f"{gate.kind.value} needs {k} angle(s), got shape {angles.shape}")
    kind = gate.kind
    if kind in ROTATIONS:
        return apply_1q_batch(psi, n, gate.wires[0], rotation_matrices(kind, angles[..., 0]))
    if kind == GateKind.G:
        mat = g_matrices(angles[..., 0], angles[..., 1], angles[..., 2])
        return apply_1q_batch(psi, n, gate.wires[0], mat)
    if kind == GateKind.H:
        return apply_1q_batch(psi, n, gate.wires[0], _H)
    if kind == GateKind.CNOT:
        return apply_cnot_batch(psi, n, *gate.wires)
    if kind == GateKind.CSWAP:
        return apply_cswap_batch(psi, n, *gate.wires)
    raise ValueError(f"unknown gate kind {kind}")


# ---------------------------------------------------------------------------
# single-state API

def apply_gate(state: StateVector, gate: Gate, resolved_angles: Sequence[float] = ()) -> StateVector:
    """Return a new state with ``gate`` applied; angles in radians.

    Gates whose angles are all literals may omit ``resolved_angles``.
    """
    if len(resolved_angles) == 0 and gate.angles and not any(isinstance(a, (Param, Data)) for a in gate.angles):
        resolved_angles = [float(a) for a in gate.angles]
    if len(resolved_angles) != N_ANGLES[gate.kind]:
        raise ArityError(f"{gate.kind.value} needs {N_ANGLES[gate.kind]} angle(s), got {len(resolved_angles)}")
    out = apply_gate_batch(state.amplitudes[None, :], state.n_qubits, gate,
                           np.asarray(resolved_angles, dtype=np.float64))
    return StateVector(state.n_qubits, out[0])


def apply_matrix(state: StateVector, qubit: int, mat: np.ndarray) -> StateVector:
    """Apply an arbitrary single-qubit matrix (no unitarity check)."""
    if not 0 <= qubit < state.n_qubits:
        raise IndexError(f"qubit {qubit} out of range")
    out = apply_1q_batch(state.amplitudes[None, :], state.n_qubits, qubit, np.asarray(mat, dtype=np.complex128))
    return StateVector(state.n_qubits, out[0])


def _check_keep(n: int, keep) -> list[int]:
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    for q in keep:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")
    return keep


def _split_matrix(amplitudes: np.ndarray, n: int, keep: list[int]) -> np.ndarray:
    rest = [q for q in range(n) if q not in keep]
    v = amplitudes.reshape((2,) * n).transpose(keep + rest)
    return v.reshape(2 ** len(keep), 2 ** len(rest))


def reduced_density(state: StateVector, keep) -> np.ndarray:
    """Partial trace onto ``keep`` (sorted qubit order, qubit 0 most significant)."""
    keep = _check_keep(state.n_qubits, keep)
    a = _split_matrix(state.amplitudes, state.n_qubits, keep)
    return a @ a.conj().T


def subsystem_purity(state: StateVector, keep) -> float:
    keep = _check_keep(state.n_qubits, keep)
    a = _split_matrix(state.amplitudes, state.n_qubits, keep)
    # Tr(rho_A^2) = Tr(rho_B^2); use the smaller Gram matrix
    g = a @ a.conj().T if a.shape[0] <= a.shape[1] else a.conj().T @ a
    return float(np.sum(np.abs(g) ** 2))


def single_qubit_purities(psi: np.ndarray, n: int) -> np.ndarray:
    """Purity of every single-qubit marginal, shape ``(B, n)``."""
    b = psi.shape[0]
    out = np.empty((b, n))
    for j in range(n):
        v = psi.reshape(b, 2 ** j, 2, 2 ** (n - j - 1))
        a0 = v[:, :, 0, :]
        a1 = v[:, :, 1, :]
        r00 = np.sum(np.abs(a0) ** 2, axis=(1, 2))
        r11 = np.sum(np.abs(a1) ** 2, axis=(1, 2))
        r01 = np.sum(a0 * a1.conj(), axis=(1, 2))
        out[:, j] = r00 ** 2 + r11 ** 2 + 2 * np.abs(r01) ** 2
    return out


def basis_probability(state: StateVector, qubit: int, outcome: int) -> float:
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range for {n} qubits")
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    v = state.amplitudes.reshape(2 ** qubit, 2, 2 ** (n - qubit - 1))
    return float(np.sum(np.abs(v[:, outcome, :]) ** 2))


def qubit_probabilities_batch(psi: np.ndarray, n: int, qubit: int, outcome: int) -> np.ndarray:
    v = psi.reshape(psi.shape[0], 2 ** qubit, 2, 2 ** (n - qubit - 1))
    return np.sum(np.abs(v[:, :, outcome, :]) ** 2, axis=(1, 2))
