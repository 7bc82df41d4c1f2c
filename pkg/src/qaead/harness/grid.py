"""Randomized grid search over QAE / CAE hyperparameters."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from ..data import Dataset
from ..errors import ConfigError
from .experiment import ExperimentConfig, load_dataset, run_experiment

SHALLOW_LIMIT = 100
DEEP_LIMIT = 1000


@dataclass
class QaeSpace:
    batch_sizes: list[int] = field(default_factory=lambda: [50, 500, 1000])
    layers: tuple[int, int] = (1, 10)
    epochs: list[int] = field(default_factory=lambda: [40, 60, 80])
    latent: tuple[int, int] = (1, 5)


@dataclass
class CaeSpace:
    batch_sizes: list[int] = field(default_factory=lambda: [50, 500, 1000])
    hidden_layers: tuple[int, int] = (1, 5)
    neurons: tuple[int, int] = (1, 32)
    latent: tuple[int, int] = (1, 4)
    prune: tuple[float, float] = (0.0, 1.0)


def space_from_dict(family: str, doc: dict | None):
    cls = QaeSpace if family == "qae" else CaeSpace
    try:
        space = cls(**(doc or {}))
    except TypeError as exc:
        raise ConfigError(f"grid.space: {exc}") from exc
    for f in fields(space):
        value = getattr(space, f.name)
        if isinstance(f.default, tuple) and isinstance(value, (list, tuple)):
            if len(value) != 2:
                raise ValueError(f"grid space range {f.name!r} must be [low, high]")
            setattr(space, f.name, tuple(value))
    for name, value in asdict(space).items():
        if isinstance(value, (list, tuple)) and len(value) == 0:
            raise ValueError(f"grid space dimension {name!r} is empty")
        if isinstance(value, tuple) and value[0] > value[1]:
            raise ValueError(f"grid space range {name!r} is empty: {value}")
    return space


def bucket_for(n_params: int) -> str:
    if n_params <= SHALLOW_LIMIT:
        return "shallow"
    if n_params <= DEEP_LIMIT:
        return "deep"
    return "excluded"


def _randint(rng, lo_hi) -> int:
    lo, hi = lo_hi
    return int(rng.integers(lo, hi + 1))


def sample_candidate(base: ExperimentConfig, space, rng: np.random.Generator, n_features: int) -> ExperimentConfig:
    cfg = copy.deepcopy(base)
    cap = cfg.folds.n_train_bg
    cfg.train.batch_size = min(int(rng.choice(space.batch_sizes)), cap)
    if isinstance(space, QaeSpace):
        n_qubits = n_features if cfg.model.feature_map == "rx" else n_features // 2
        cfg.model.layers = _randint(rng, space.layers)
        cfg.train.epochs = int(rng.choice(space.epochs))
        cfg.model.latent_size = min(_randint(rng, space.latent), n_qubits - 1)
    else:
        n_hidden = _randint(rng, space.hidden_layers)
        widths = sorted((_randint(rng, space.neurons) for _ in range(n_hidden - 1)), reverse=True)
        latent = min(_randint(rng, space.latent), n_features - 1)
        cfg.model.encoder = widths + [latent]
        lo, hi = space.prune
        cfg.model.sparsity = float(min(rng.uniform(lo, hi), np.nextafter(1.0, 0.0)))
    cfg.validate()
    return cfg


def grid_search(base: ExperimentConfig, space, budget: int, seed: int = 0,
                dataset: Dataset | None = None) -> list[dict]:
    """Sample ``budget`` configurations, run each, and rank by mean validation loss.

    CAE candidates are ranked within shallow (<= 100 effective parameters) and
    deep (<= 1000) buckets; larger ones are kept but marked ``excluded``.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    ds = dataset if dataset is not None else load_dataset(base)
    rng = np.random.default_rng(seed)
    results = []
    for i in range(budget):
        cand = sample_candidate(base, space, rng, ds.n_features)
        report = run_experiment(cand, ds)
        n_params = report.folds[0].n_params
        results.append({
            "candidate": i,
            "family": cand.model.family,
            "bucket": "qae" if cand.model.family == "qae" else bucket_for(n_params),
            "n_params": n_params,
            "validation_loss": report.validation_loss,
            "auc_mean": report.auc_mean,
            "auc_std": report.auc_std,
            "model": asdict(cand.model),
            "train": asdict(cand.train),
        })
    order = {"qae": 0, "shallow": 0, "deep": 1, "excluded": 2}
    results.sort(key=lambda r: (order[r["bucket"]], r["validation_loss"], r["candidate"]))
    rank: dict[str, int] = {}
    for r in results:
        rank[r["bucket"]] = rank.get(r["bucket"], 0) + 1
        r["rank"] = rank[r["bucket"]]
    return results
