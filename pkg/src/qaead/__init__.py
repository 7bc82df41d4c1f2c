"""Quantum-autoencoder anomaly detection on tabular event features."""

from .circuits import (
    Circuit, QaePartition, ansatz_all_to_all, ansatz_hea, ansatz_new, assemble_qae_circuit,
    feature_map_g, feature_map_rx,
)
from .qae import FidelityMode, QaeModel, anomaly_score, batch_loss, trash_fidelity
from .statevec import Gate, GateKind, StateVector, zero_state

__all__ = [
    "Circuit", "FidelityMode", "Gate", "GateKind", "QaeModel", "QaePartition", "StateVector",
    "ansatz_all_to_all", "ansatz_hea", "ansatz_new", "anomaly_score", "assemble_qae_circuit",
    "batch_loss", "feature_map_g", "feature_map_rx", "trash_fidelity", "zero_state",
]
__version__ = "0.1.0"
