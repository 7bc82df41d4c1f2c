"""Feature maps, ansatz families and QAE circuit assembly.

Latent qubits sit on the lowest indices (top wires) and trash qubits on the
highest. Every builder returns an immutable :class:`Circuit`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import CompositionError, PartitionError
from .statevec import (
    Data, Gate, GateKind, Param, StateVector, apply_gate_batch, zero_states,
)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for w in g.wires:
                if w >= self.n_qubits:
                    raise IndexError(f"wire {w} out of range for {self.n_qubits} qubits")
        for name, kind in (("parameter", Param), ("data", Data)):
            used = {a.index for g in self.gates for a in g.angles if isinstance(a, kind)}
            if used and used != set(range(max(used) + 1)):
                raise ValueError(f"{name} slots are not contiguous: {sorted(used)}")

    @property
    def n_params(self) -> int:
        idx = [a.index for g in self.gates for a in g.angles if isinstance(a, Param)]
        return max(idx) + 1 if idx else 0

    @property
    def n_data(self) -> int:
        idx = [a.index for g in self.gates for a in g.angles if isinstance(a, Data)]
        return max(idx) + 1 if idx else 0

    def count(self, kind: GateKind) -> int:
        return sum(g.kind == kind for g in self.gates)

    def then(self, other: "Circuit", n_qubits: int | None = None) -> "Circuit":
        n = n_qubits or max(self.n_qubits, other.n_qubits)
        return Circuit(n, self.gates + other.gates)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "n_params": self.n_params,
            "n_data": self.n_data,
            "gates": [
                {"kind": g.kind.value, "wires": list(g.wires),
                 "angles": [_source_to_json(a) for a in g.angles]}
                for g in self.gates
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "Circuit":
        gates = [Gate(GateKind(g["kind"]), tuple(g["wires"]),
                      tuple(_source_from_json(a) for a in g["angles"]))
                 for g in doc["gates"]]
        return cls(int(doc["n_qubits"]), tuple(gates))


def _source_to_json(a) -> dict:
    if isinstance(a, Param):
        return {"param": a.index}
    if isinstance(a, Data):
        return {"data": a.index}
    return {"value": float(a)}


def _source_from_json(doc: dict):
    if "param" in doc:
        return Param(int(doc["param"]))
    if "data" in doc:
        return Data(int(doc["data"]))
    return float(doc["value"])


@dataclass(frozen=True)
class QaePartition:
    latent: tuple[int, ...]
    trash: tuple[int, ...]
    reference: tuple[int, ...]
    ancilla: int

    def __post_init__(self):
        for name in ("latent", "trash", "reference"):
            object.__setattr__(self, name, tuple(int(q) for q in getattr(self, name)))
        data = set(self.latent) | set(self.trash)
        if set(self.latent) & set(self.trash):
            raise PartitionError("latent and trash overlap")
        if not self.trash:
            raise PartitionError("trash space is empty")
        if data != set(range(len(data))):
            raise PartitionError("latent and trash must cover qubits 0..n-1")
        if len(self.reference) != len(self.trash):
            raise PartitionError("reference and trash sizes differ")
        extra = set(self.reference) | {self.ancilla}
        if len(extra) != len(self.reference) + 1 or extra & data:
            raise PartitionError("reference/ancilla wires collide")

    @property
    def n_data_qubits(self) -> int:
        return len(self.latent) + len(self.trash)

    @property
    def n_total(self) -> int:
        return self.n_data_qubits + len(self.reference) + 1

    @classmethod
    def standard(cls, n_qubits: int, latent_size: int) -> "QaePartition":
        """Latent on top wires, trash below, then reference wires, ancilla last."""
        if not 1 <= latent_size < n_qubits:
            raise PartitionError(f"latent size must be in [1, {n_qubits - 1}], got {latent_size}")
        t = n_qubits - latent_size
        return cls(
            latent=tuple(range(latent_size)),
            trash=tuple(range(latent_size, n_qubits)),
            reference=tuple(range(n_qubits, n_qubits + t)),
            ancilla=n_qubits + t,
        )


# ---------------------------------------------------------------------------
# feature maps

def feature_map_rx(n_features: int) -> Circuit:
    """One RX per qubit, feature i on qubit i."""
    if n_features < 1:
        raise ValueError("need at least one feature")
    return Circuit(n_features, tuple(Gate(GateKind.RX, (i,), (Data(i),)) for i in range(n_features)))


def feature_map_g(n_features: int) -> Circuit:
    """Two G layers around an open CNOT chain; two features per qubit."""
    if n_features < 2 or n_features % 2:
        raise ValueError(f"G feature map needs an even feature count >= 2, got {n_features}")
    n = n_features // 2
    gates = [Gate(GateKind.G, (i,), (pi / 2, Data(2 * i), Data(2 * i + 1))) for i in range(n)]
    gates += [Gate(GateKind.CNOT, (i, i + 1)) for i in range(n - 1)]
    gates += [Gate(GateKind.G, (i,), (Data(2 * i), Data(2 * i + 1), 0.0)) for i in range(n)]
    return Circuit(n, tuple(gates))


# ---------------------------------------------------------------------------
# ansatze

def _ry_layer(n: int, offset: int = 0) -> list[Gate]:
    return [Gate(GateKind.RY, (j,), (Param(offset + j),)) for j in range(n)]


def ansatz_all_to_all(n_qubits: int) -> Circuit:
    if n_qubits < 2:
        raise ValueError("ansatz needs at least two qubits")
    gates = _ry_layer(n_qubits)
    gates += [Gate(GateKind.CNOT, (i, j)) for i in range(n_qubits) for j in range(i + 1, n_qubits)]
    return Circuit(n_qubits, tuple(gates))


def ansatz_hea(n_qubits: int) -> Circuit:
    if n_qubits < 2:
        raise ValueError("ansatz needs at least two qubits")
    gates = _ry_layer(n_qubits)
    gates += [Gate(GateKind.CNOT, (i, i + 1)) for i in range(n_qubits - 1)]
    return Circuit(n_qubits, tuple(gates))


def transfer_cnots(n_qubits: int, latent_size: int) -> list[Gate]:
    """Trash -> latent CNOTs opening each layer of the latent-aware ansatz."""
    n_trash = n_qubits - latent_size
    return [Gate(GateKind.CNOT, (n_qubits - 1 - t, t % latent_size)) for t in range(n_trash)]


def erasure_cnots(n_qubits: int, latent_size: int) -> list[Gate]:
    """Closing CNOTs of the final layer; targets walk up from the bottom wire.

    When the trash register is wider than the latent one the counter can land
    on the target wire itself; that step has no gate to apply and is skipped.
    """
    gates = []
    control = 0
    for t in range(n_qubits - latent_size):
        target = n_qubits - 1 - t
        if target < control:
            control = 0
        if control != target:
            gates.append(Gate(GateKind.CNOT, (control, target)))
        control += 1
    return gates


def ansatz_new(n_qubits: int, latent_size: int, layers: int = 1) -> Circuit:
    """Latent-aware ansatz: per layer, transfer CNOTs then RY on every qubit;
    the last layer also gets erasure CNOTs. RY on qubit j in layer i uses
    parameter slot ``i * n_qubits + j``.
    """
    if not 1 <= latent_size < n_qubits:
        raise PartitionError(f"latent size must be in [1, {n_qubits - 1}], got {latent_size}")
    if layers < 1:
        raise ValueError("layers must be >= 1")
    gates: list[Gate] = []
    for i in range(layers):
        gates += transfer_cnots(n_qubits, latent_size)
        gates += _ry_layer(n_qubits, offset=i * n_qubits)
    gates += erasure_cnots(n_qubits, latent_size)
    return Circuit(n_qubits, tuple(gates))


ANSATZE = ("all_to_all", "hea", "new")
FEATURE_MAPS = ("rx", "g")


def build_ansatz(name: str, n_qubits: int, latent_size: int = 1, layers: int = 1) -> Circuit:
    if name == "all_to_all":
        return ansatz_all_to_all(n_qubits)
    if name == "hea":
        return ansatz_hea(n_qubits)
    if name == "new":
        return ansatz_new(n_qubits, latent_size, layers)
    raise ValueError(f"unknown ansatz {name!r}; choose from {ANSATZE}")


def build_feature_map(name: str, n_features: int) -> Circuit:
    if name == "rx":
        return feature_map_rx(n_features)
    if name == "g":
        return feature_map_g(n_features)
    raise ValueError(f"unknown feature map {name!r}; choose from {FEATURE_MAPS}")


def assemble_qae_circuit(feature_map: Circuit, ansatz: Circuit, partition: QaePartition) -> Circuit:
    """Feature map, ansatz, then a SWAP test between trash and reference wires."""
    n = partition.n_data_qubits
    if feature_map.n_qubits != n or ansatz.n_qubits != n:
        raise CompositionError(
            f"feature map ({feature_map.n_qubits}) and ansatz ({ansatz.n_qubits}) "
            f"must both span the {n} data qubits")
    a = partition.ancilla
    gates = list(feature_map.gates) + list(ansatz.gates)
    gates.append(Gate(GateKind.H, (a,)))
    gates += [Gate(GateKind.CSWAP, (a, t, r)) for t, r in zip(partition.trash, partition.reference)]
    gates.append(Gate(GateKind.H, (a,)))
    return Circuit(partition.n_total, tuple(gates))


# ---------------------------------------------------------------------------
# execution

def _resolve(gate: Gate, theta: np.ndarray | None, X: np.ndarray | None):
    cols = []
    for a in gate.angles:
        if isinstance(a, Param):
            cols.append(theta[..., a.index])
        elif isinstance(a, Data):
            cols.append(X[:, a.index])
        else:
            cols.append(np.float64(a))
    cols = np.broadcast_arrays(*cols)
    return np.stack(cols, axis=-1)


def run(circuit: Circuit, theta=None, X=None, psi: np.ndarray | None = None) -> np.ndarray:
    """Simulate ``circuit`` on a batch, returning amplitudes of shape ``(B, 2**n)``.

    ``theta`` is ``(n_params,)`` or ``(B, n_params)``; ``X`` is ``(B, n_data)``.
    Without ``psi`` every row starts from ``|0...0>``.
    """
    theta = None if theta is None else np.asarray(theta, dtype=np.float64)
    X = None if X is None else np.atleast_2d(np.asarray(X, dtype=np.float64))
    if circuit.n_params and (theta is None or theta.shape[-1] != circuit.n_params):
        raise ValueError(f"circuit needs {circuit.n_params} parameters")
    if circuit.n_data and (X is None or X.shape[1] != circuit.n_data):
        raise ValueError(f"circuit needs {circuit.n_data} features per row")
    if psi is None:
        if X is not None:
            batch = X.shape[0]
        elif theta is not None and theta.ndim == 2:
            batch = theta.shape[0]
        else:
            batch = 1
        psi = zero_states(circuit.n_qubits, batch)
    for g in circuit.gates:
        angles = _resolve(g, theta, X) if g.angles else None
        psi = apply_gate_batch(psi, circuit.n_qubits, g, angles)
    return psi


def circuit_state(circuit: Circuit, theta=None, x=None) -> StateVector:
    X = None if x is None else np.asarray(x, dtype=np.float64)[None, :]
    return StateVector(circuit.n_qubits, run(circuit, theta, X)[0])
