"""Fast experiment configs shared by the harness, CLI and acceptance tests."""
from __future__ import annotations

import copy
import json


def small_qae(**overrides) -> dict:
    doc = {
        "seed": 0,
        "dataset": {"source": "synth", "synth": {"n_background": 400, "n_signal": 200, "separation": 3.0}},
        "model": {"family": "qae", "feature_map": "g", "ansatz": "new", "latent_size": 2, "layers": 1},
        "train": {"epochs": 3, "batch_size": 25},
        "folds": {"n_folds": 2, "n_train_bg": 50, "n_test": 100},
        "metrics": {"entanglement": True, "magic": True, "snapshot_every": 1, "n_validation": 20,
                    "n_theta_draws": 3},
    }
    return _merge(doc, overrides)


def small_cae(**overrides) -> dict:
    doc = small_qae()
    doc["model"] = {"family": "cae", "encoder": [5, 3], "sparsity": 0.3}
    doc["train"] = {"epochs": 5, "batch_size": 25}
    doc["metrics"] = {}
    return _merge(doc, overrides)


def _merge(doc: dict, overrides: dict) -> dict:
    doc = copy.deepcopy(doc)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(doc.get(key), dict):
            doc[key].update(value)
        else:
            doc[key] = value
    return doc


def write(path, doc: dict):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path
