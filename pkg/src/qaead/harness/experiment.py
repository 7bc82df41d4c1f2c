"""Experiment configuration and the per-fold train/score loop."""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..cae import apply_magnitude_pruning, batch_rmse, cae_scores, init_mlp, mirror_layers, train_cae
from ..circuits import ANSATZE, FEATURE_MAPS
from ..data import (
    BACKGROUND, SIGNAL, Dataset, SynthConfig, Target, fit_scaler, load_csv, load_schema, make_folds,
    synth_dataset, transform,
)
from ..errors import ConfigError, QaeError
from ..metrics import Metric, MetricDistribution, Trained, Uniform, sample_metric_distribution
from ..optim import CAE_LR, QAE_LR, TrainConfig, TrainResult, train
from ..qae import FidelityMode, QaeModel, anomaly_scores
from .roc import RocResult, roc_auc


@dataclass
class DatasetConfig:
    source: str = "synth"
    synth: dict = field(default_factory=dict)
    path: str | None = None
    schema: dict | str | None = None
    columns: list[str] | None = None


@dataclass
class ModelConfig:
    family: str = "qae"
    feature_map: str = "g"
    ansatz: str = "new"
    latent_size: int = 2
    layers: int = 1
    fidelity_mode: str = "exact"
    encoder: list[int] = field(default_factory=lambda: [4, 2])
    sparsity: float = 0.0


@dataclass
class TrainSection:
    epochs: int = 100
    batch_size: int = 50
    lr: float | None = None


@dataclass
class FoldSection:
    n_folds: int = 3
    n_train_bg: int = 1000
    n_test: int = 10000


@dataclass
class MetricsSection:
    entanglement: bool = False
    magic: bool = False
    snapshot_every: int = 2
    n_validation: int = 1000
    n_theta_draws: int = 50
    histograms: bool = True


@dataclass
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainSection = field(default_factory=TrainSection)
    folds: FoldSection = field(default_factory=FoldSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        sections = {"dataset": DatasetConfig, "model": ModelConfig, "train": TrainSection,
                    "folds": FoldSection, "metrics": MetricsSection}
        kwargs = {}
        try:
            for key, value in doc.items():
                if key in sections:
                    if not isinstance(value, dict):
                        raise ConfigError(f"section {key!r} must be an object")
                    kwargs[key] = sections[key](**value)
                elif key in ("seed", "threads"):
                    kwargs[key] = int(value)
                elif key in ("grid", "comment"):
                    continue
                else:
                    raise ConfigError(f"unknown config key {key!r}")
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        m = self.model
        if self.dataset.source not in ("synth", "csv"):
            raise ConfigError(f"dataset.source must be 'synth' or 'csv', got {self.dataset.source!r}")
        if self.dataset.source == "csv" and not self.dataset.path:
            raise ConfigError("dataset.path is required for csv sources")
        if m.family not in ("qae", "cae"):
            raise ConfigError(f"model.family must be 'qae' or 'cae', got {m.family!r}")
        if m.family == "qae":
            if m.ansatz not in ANSATZE:
                raise ConfigError(f"model.ansatz must be one of {ANSATZE}")
            if m.feature_map not in FEATURE_MAPS:
                raise ConfigError(f"model.feature_map must be one of {FEATURE_MAPS}")
            if m.layers < 1 or m.latent_size < 1:
                raise ConfigError("model.layers and model.latent_size must be >= 1")
            try:
                FidelityMode(m.fidelity_mode)
            except ValueError:
                raise ConfigError(f"unknown fidelity_mode {m.fidelity_mode!r}") from None
        else:
            if not m.encoder or any(int(h) < 1 for h in m.encoder):
                raise ConfigError("model.encoder must list positive layer widths ending in the latent width")
            if not 0 <= m.sparsity < 1:
                raise ConfigError("model.sparsity must be in [0, 1)")
        if self.train.epochs < 0 or self.train.batch_size < 1:
            raise ConfigError("train.epochs must be >= 0 and train.batch_size >= 1")
        if self.train.batch_size > self.folds.n_train_bg:
            raise ConfigError("train.batch_size exceeds folds.n_train_bg")
        f = self.folds
        if f.n_folds < 1 or f.n_train_bg < 1 or f.n_test < 2 or f.n_test % 2:
            raise ConfigError("folds need n_folds >= 1, n_train_bg >= 1 and an even n_test >= 2")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.metrics.snapshot_every < 0 or self.metrics.n_validation < 1 or self.metrics.n_theta_draws < 1:
            raise ConfigError("invalid metrics section")

    @property
    def target(self) -> Target:
        return Target.QAE if self.model.family == "qae" else Target.CAE

    @property
    def lr(self) -> float:
        if self.train.lr is not None:
            return float(self.train.lr)
        return QAE_LR if self.model.family == "qae" else CAE_LR


def bundled_config(name: str = "default") -> dict:
    text = resources.files("qaead.configs").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    d = cfg.dataset
    if d.source == "synth":
        try:
            synth = SynthConfig.from_dict(d.synth)
        except ValueError as exc:
            raise ConfigError(f"dataset.synth: {exc}") from exc
        ds = synth_dataset(synth, seed=cfg.seed)
    else:
        schema = d.schema
        if isinstance(schema, str):
            schema = load_schema(schema)
        elif isinstance(schema, dict) and "columns" in schema:
            schema = schema["columns"]
        ds = load_csv(d.path, schema)
    if d.columns:
        missing = [c for c in d.columns if c not in ds.columns]
        if missing:
            raise ConfigError(f"dataset.columns not found: {missing}")
        idx = [ds.columns.index(c) for c in d.columns]
        ds = Dataset(ds.features[:, idx], ds.labels, [ds.feature_kinds[i] for i in idx], ds.name, list(d.columns))
    return ds


# ---------------------------------------------------------------------------
# per-fold work

@dataclass
class FoldReport:
    index: int
    losses: list[float]
    roc: RocResult
    validation_loss: float
    snapshots: list[dict] = field(default_factory=list)
    distributions: list[MetricDistribution] = field(default_factory=list)
    n_params: int = 0
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "fold": self.index,
            "auc": self.roc.auc,
            "validation_loss": self.validation_loss,
            "n_params": self.n_params,
            "n_signal": self.roc.n_signal,
            "n_background": self.roc.n_background,
            "losses": self.losses,
            "snapshots": self.snapshots,
            "distributions": [dist.summary() for dist in self.distributions],
        }


@dataclass
class RunReport:
    config: dict
    folds: list[FoldReport]
    timings: dict = field(default_factory=dict)

    @property
    def aucs(self) -> list[float]:
        return [f.roc.auc for f in self.folds]

    @property
    def auc_mean(self) -> float:
        return float(np.mean(self.aucs))

    @property
    def auc_std(self) -> float:
        return float(np.std(self.aucs))

    @property
    def validation_loss(self) -> float:
        return float(np.mean([f.validation_loss for f in self.folds]))

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "n_folds": len(self.folds),
            "auc_mean": self.auc_mean,
            "auc_std": self.auc_std,
            "auc_std_kind": "population std across folds",
            "validation_loss_mean": self.validation_loss,
            "folds": [f.to_dict() for f in self.folds],
        }


@dataclass
class TrainedFold:
    model: object
    scaler: object
    losses: list[float]
    snapshots: list
    train_result: TrainResult | None = None


def build_qae(cfg: ExperimentConfig, n_features: int) -> QaeModel:
    m = cfg.model
    try:
        return QaeModel.create(m.feature_map, n_features, m.ansatz, m.latent_size, m.layers,
                               fidelity_mode=FidelityMode(m.fidelity_mode))
    except (ValueError, QaeError) as exc:
        raise ConfigError(f"model: {exc}") from exc


def train_fold(cfg: ExperimentConfig, ds: Dataset, train_idx, validation_idx, fold_index: int) -> TrainedFold:
    seed = cfg.seed + fold_index
    raw = ds.rows(train_idx)
    scaler = fit_scaler(raw, ds.feature_kinds, cfg.target)
    X = transform(scaler, raw)
    V = transform(scaler, ds.rows(validation_idx)) if len(validation_idx) else None
    if cfg.model.family == "qae":
        model = build_qae(cfg, ds.n_features)
        tcfg = TrainConfig(epochs=cfg.train.epochs, batch_size=cfg.train.batch_size, lr=cfg.lr, seed=seed,
                           snapshot_every=cfg.metrics.snapshot_every, snapshot_q=cfg.metrics.entanglement,
                           snapshot_m2=cfg.metrics.magic, n_validation=cfg.metrics.n_validation)
        res = train(model, X, tcfg, validation=None if V is None else V[: cfg.metrics.n_validation])
        snaps = [asdict(s) for s in res.snapshots]
        return TrainedFold(res.model, scaler, res.losses, snaps, res)
    try:
        layers = mirror_layers(ds.n_features, cfg.model.encoder)
        model = init_mlp(layers, seed=seed)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    model = apply_magnitude_pruning(model, cfg.model.sparsity)
    tcfg = TrainConfig(epochs=cfg.train.epochs, batch_size=cfg.train.batch_size, lr=cfg.lr, seed=seed)
    model, losses = train_cae(model, X, tcfg)
    return TrainedFold(model, scaler, losses, [])


def score(model, X) -> np.ndarray:
    if isinstance(model, QaeModel):
        return anomaly_scores(model, X)
    return cae_scores(model, X)


def qae_distributions(model: QaeModel, V: np.ndarray, cfg: ExperimentConfig, seed: int) -> list[MetricDistribution]:
    out = []
    wanted = [(Metric.Q, cfg.metrics.entanglement), (Metric.M2, cfg.metrics.magic)]
    for metric, on in wanted:
        if not on:
            continue
        out.append(sample_metric_distribution(model.feature_map, model.ansatz, V, Trained(model.theta), metric))
        out.append(sample_metric_distribution(model.feature_map, model.ansatz, V,
                                              Uniform(cfg.metrics.n_theta_draws, seed), metric))
    return out


def _run_fold(cfg: ExperimentConfig, ds: Dataset, fold, index: int) -> FoldReport:
    t0 = time.perf_counter()
    try:
        test_bg = fold.test[ds.labels[fold.test] == BACKGROUND]
        test_sig = fold.test[ds.labels[fold.test] == SIGNAL]
        tf = train_fold(cfg, ds, fold.train, test_bg, index)
        s_bg = score(tf.model, transform(tf.scaler, ds.rows(test_bg)))
        s_sig = score(tf.model, transform(tf.scaler, ds.rows(test_sig)))
        roc = roc_auc(s_bg, s_sig)
        dists = []
        if isinstance(tf.model, QaeModel) and cfg.metrics.histograms:
            V = transform(tf.scaler, ds.rows(test_bg[: cfg.metrics.n_validation]))
            dists = qae_distributions(tf.model, V, cfg, cfg.seed + index)
        n_params = tf.model.ansatz.n_params if isinstance(tf.model, QaeModel) else tf.model.n_effective_params
    except Exception as exc:
        exc.args = (f"fold {index}: {exc.args[0] if exc.args else exc}",) + tuple(exc.args[1:])
        raise
    return FoldReport(index, [float(v) for v in tf.losses], roc, float(np.mean(s_bg)), tf.snapshots, dists,
                      int(n_params), time.perf_counter() - t0)


def run_experiment(cfg: ExperimentConfig, dataset: Dataset | None = None) -> RunReport:
    """Train and score every fold; folds run on up to ``cfg.threads`` workers."""
    t0 = time.perf_counter()
    ds = dataset if dataset is not None else load_dataset(cfg)
    f = cfg.folds
    folds = make_folds(ds, f.n_train_bg, f.n_test, f.n_folds, seed=cfg.seed)
    if cfg.threads > 1 and len(folds) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            futures = [pool.submit(_run_fold, cfg, ds, fold, i) for i, fold in enumerate(folds)]
            reports = [fut.result() for fut in futures]
    else:
        reports = [_run_fold(cfg, ds, fold, i) for i, fold in enumerate(folds)]
    timings = {"total_seconds": time.perf_counter() - t0,
               "fold_seconds": [r.seconds for r in reports]}
    return RunReport(cfg.to_dict(), reports, timings)
