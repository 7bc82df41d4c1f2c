"""Event-feature datasets: CSV I/O, scaling, folds and a synthetic stand-in.

Scaling rules: non-angular columns use a fixed [0, 1000] range (values above
are clipped); angular columns use the training set's empirical min/max. The
angular rule is an interpretation, since no native range is prescribed for
those variables.
"""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import CapacityError, DataError, ParseError

BACKGROUND, SIGNAL = 0, 1
LABEL_NAMES = {"background": BACKGROUND, "signal": SIGNAL}
NON_ANGULAR_RANGE = (0.0, 1000.0)


class FeatureKind(str, enum.Enum):
    ANGULAR = "angular"
    NON_ANGULAR = "non_angular"


class Target(str, enum.Enum):
    QAE = "qae"
    CAE = "cae"

    @property
    def span(self) -> float:
        return math.pi if self is Target.QAE else 1.0


# Eight-feature heavy-Higgs column set, in the order used for the largest subset.
HIGGS8_SCHEMA: dict[str, FeatureKind] = {
    "E_T": FeatureKind.NON_ANGULAR,
    "pT_b1": FeatureKind.NON_ANGULAR,
    "pT_l1": FeatureKind.NON_ANGULAR,
    "pT_l2": FeatureKind.NON_ANGULAR,
    "theta_l": FeatureKind.ANGULAR,
    "pT_b2": FeatureKind.NON_ANGULAR,
    "theta_b": FeatureKind.ANGULAR,
    "dR_l1": FeatureKind.ANGULAR,
}


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_kinds: list[FeatureKind]
    name: str = "dataset"
    columns: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.feature_kinds = [FeatureKind(k) for k in self.feature_kinds]
        if self.features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if len(self.feature_kinds) != self.features.shape[1]:
            raise DataError("feature_kinds length differs from column count")
        if self.labels.shape != (self.features.shape[0],):
            raise DataError("one label per row required")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain missing or non-finite values")
        if not self.columns:
            self.columns = [f"x{i}" for i in range(self.features.shape[1])]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def rows(self, idx) -> np.ndarray:
        return self.features[np.asarray(idx, dtype=np.int64)]


# ---------------------------------------------------------------------------
# scaling

@dataclass
class ScalerSpec:
    target: Target
    mins: np.ndarray
    maxs: np.ndarray
    feature_kinds: list[FeatureKind]

    def to_dict(self) -> dict:
        return {"target": Target(self.target).value, "mins": [float(v) for v in self.mins],
                "maxs": [float(v) for v in self.maxs],
                "feature_kinds": [FeatureKind(k).value for k in self.feature_kinds],
                "non_angular_fixed_range": list(NON_ANGULAR_RANGE)}

    @classmethod
    def from_dict(cls, doc: dict) -> "ScalerSpec":
        return cls(Target(doc["target"]), np.array(doc["mins"], dtype=float), np.array(doc["maxs"], dtype=float),
                   [FeatureKind(k) for k in doc["feature_kinds"]])


def fit_scaler(train_features, feature_kinds: Sequence[FeatureKind], target: Target | str) -> ScalerSpec:
    X = np.asarray(train_features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("cannot fit a scaler on an empty matrix")
    kinds = [FeatureKind(k) for k in feature_kinds]
    if len(kinds) != X.shape[1]:
        raise DataError("feature_kinds length differs from column count")
    mins = np.empty(X.shape[1])
    maxs = np.empty(X.shape[1])
    for j, kind in enumerate(kinds):
        if kind is FeatureKind.NON_ANGULAR:
            mins[j], maxs[j] = NON_ANGULAR_RANGE
        else:
            mins[j], maxs[j] = X[:, j].min(), X[:, j].max()
            if maxs[j] <= mins[j]:
                raise DataError(f"angular column {j} is constant; cannot scale a zero range")
    return ScalerSpec(Target(target), mins, maxs, kinds)


def transform(scaler: ScalerSpec, features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != scaler.mins.size:
        raise ValueError(f"expected {scaler.mins.size} columns, got shape {X.shape}")
    span = Target(scaler.target).span
    scaled = (X - scaler.mins) / (scaler.maxs - scaler.mins) * span
    return np.clip(scaled, 0.0, span)


# ---------------------------------------------------------------------------
# folds

@dataclass(frozen=True)
class Fold:
    train: np.ndarray
    test: np.ndarray


def make_folds(dataset: Dataset, n_train_bg: int = 1000, n_test: int = 10000,
               n_folds: int = 5, seed: int = 0) -> list[Fold]:
    """Mutually disjoint folds: background-only training rows plus a balanced test set."""
    if n_train_bg < 1 or n_test < 2 or n_test % 2 or n_folds < 1:
        raise ValueError("need n_train_bg >= 1, an even n_test >= 2 and n_folds >= 1")
    half = n_test // 2
    bg = np.flatnonzero(dataset.labels == BACKGROUND)
    sig = np.flatnonzero(dataset.labels == SIGNAL)
    need_bg = n_folds * (n_train_bg + half)
    need_sig = n_folds * half
    if bg.size < need_bg or sig.size < need_sig:
        raise CapacityError(
            f"{n_folds} folds need {need_bg} background and {need_sig} signal rows; "
            f"dataset has {bg.size} and {sig.size}")
    rng = np.random.default_rng(seed)
    bg = rng.permutation(bg)
    sig = rng.permutation(sig)
    folds = []
    for f in range(n_folds):
        b = bg[f * (n_train_bg + half):(f + 1) * (n_train_bg + half)]
        s = sig[f * half:(f + 1) * half]
        folds.append(Fold(train=np.sort(b[:n_train_bg]), test=np.sort(np.concatenate([b[n_train_bg:], s]))))
    return folds


# ---------------------------------------------------------------------------
# synthetic data

@dataclass
class SynthConfig:
    """Background: Gaussian latent-factor model around per-column centres.
    Signal: same process shifted by ``separation`` background standard
    deviations on the first ``ceil(shifted_fraction * d)`` columns.
    """
    n_features: int = 8
    feature_kinds: list[str] = field(default_factory=lambda: [k.value for k in HIGGS8_SCHEMA.values()])
    columns: list[str] = field(default_factory=lambda: list(HIGGS8_SCHEMA))
    n_background: int = 4000
    n_signal: int = 2000
    separation: float = 3.0
    shifted_fraction: float = 0.5
    n_factors: int = 2
    noise: float = 0.3
    non_angular_center: tuple[float, float] = (150.0, 350.0)
    non_angular_width: float = 60.0
    angular_center: tuple[float, float] = (1.0, 2.0)
    angular_width: float = 0.3
    name: str = "synthetic"

    def __post_init__(self):
        if self.n_features < 1:
            raise ValueError("n_features must be >= 1")
        if len(self.feature_kinds) != self.n_features:
            raise ValueError("feature_kinds must list one kind per feature")
        if len(self.columns) != self.n_features:
            raise ValueError("columns must name every feature")
        if self.n_background < 0 or self.n_signal < 0:
            raise ValueError("class counts must be non-negative")
        if self.separation < 0 or not 0 <= self.shifted_fraction <= 1:
            raise ValueError("separation must be >= 0 and shifted_fraction in [0, 1]")
        if self.n_factors < 1 or not 0 <= self.noise <= 1:
            raise ValueError("need n_factors >= 1 and noise in [0, 1]")
        self.feature_kinds = [FeatureKind(k).value for k in self.feature_kinds]

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthConfig":
        doc = dict(doc)
        for key in ("non_angular_center", "angular_center"):
            if key in doc:
                doc[key] = tuple(doc[key])
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ValueError(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)


def synth_dataset(config: SynthConfig, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    d = config.n_features
    kinds = [FeatureKind(k) for k in config.feature_kinds]
    centers = np.empty(d)
    widths = np.empty(d)
    for j, kind in enumerate(kinds):
        lo, hi = config.non_angular_center if kind is FeatureKind.NON_ANGULAR else config.angular_center
        centers[j] = rng.uniform(lo, hi)
        widths[j] = config.non_angular_width if kind is FeatureKind.NON_ANGULAR else config.angular_width
    loadings = rng.normal(size=(d, config.n_factors))
    loadings /= np.linalg.norm(loadings, axis=1, keepdims=True)

    def unit_draws(count: int) -> np.ndarray:
        z = rng.normal(size=(count, config.n_factors))
        eps = rng.normal(size=(count, d))
        return math.sqrt(1 - config.noise ** 2) * z @ loadings.T + config.noise * eps

    n_shift = math.ceil(config.shifted_fraction * d)
    shift = np.zeros(d)
    shift[:n_shift] = config.separation
    bg = centers + widths * unit_draws(config.n_background)
    sig = centers + widths * (unit_draws(config.n_signal) + shift)
    X = np.vstack([bg, sig])
    for j, kind in enumerate(kinds):
        X[:, j] = np.clip(X[:, j], 0.0, None if kind is FeatureKind.NON_ANGULAR else math.pi)
    labels = np.concatenate([np.full(config.n_background, BACKGROUND), np.full(config.n_signal, SIGNAL)])
    return Dataset(X, labels, kinds, config.name, list(config.columns))


# ---------------------------------------------------------------------------
# CSV

def load_schema(path) -> dict[str, FeatureKind]:
    """Schema JSON: ``{"columns": {"name": "angular" | "non_angular", ...}}``."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    cols = doc.get("columns", doc)
    return {name: FeatureKind(kind) for name, kind in cols.items()}


def load_csv(path, schema: dict[str, FeatureKind | str] | None = None, label_column: str = "label",
             name: str | None = None) -> Dataset:
    """Read a header-first CSV with a ``label`` column of background/signal.

    With ``schema`` only the listed columns are used, in schema order;
    without it every non-label column becomes a feature and known heavy-Higgs
    names get their kind from ``HIGGS8_SCHEMA`` (others are non-angular).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", row=1) from None
        if label_column not in header:
            raise ParseError(f"missing label column {label_column!r}", row=1, column=label_column)
        if schema is None:
            cols = [h for h in header if h != label_column]
            kinds = [HIGGS8_SCHEMA.get(c, FeatureKind.NON_ANGULAR) for c in cols]
        else:
            cols = list(schema)
            kinds = [FeatureKind(schema[c]) for c in cols]
            for c in cols:
                if c not in header:
                    raise ParseError("missing column", row=1, column=c)
        if not cols:
            raise ParseError("no feature columns", row=1)
        col_idx = [header.index(c) for c in cols]
        lab_idx = header.index(label_column)
        rows, labels = [], []
        for r, record in enumerate(reader, start=2):
            if not record or all(not cell.strip() for cell in record):
                continue
            if len(record) != len(header):
                raise ParseError(f"expected {len(header)} cells, got {len(record)}", row=r)
            lab = record[lab_idx].strip().lower()
            if lab not in LABEL_NAMES:
                raise ParseError(f"unknown label {record[lab_idx]!r}", row=r, column=label_column)
            vals = []
            for c, j in zip(cols, col_idx):
                try:
                    v = float(record[j])
                except ValueError:
                    raise ParseError(f"non-numeric cell {record[j]!r}", row=r, column=c) from None
                if not math.isfinite(v):
                    raise ParseError(f"non-finite cell {record[j]!r}", row=r, column=c)
                vals.append(v)
            rows.append(vals)
            labels.append(LABEL_NAMES[lab])
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(cols))
    return Dataset(X, np.array(labels, dtype=np.int64), kinds, name or path.stem, cols)


def save_csv(dataset: Dataset, path) -> Path:
    path = Path(path)
    inverse = {v: k for k, v in LABEL_NAMES.items()}
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(dataset.columns) + ["label"])
        for row, lab in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in row] + [inverse[int(lab)]])
    return path


def write_schema(dataset: Dataset, path) -> Path:
    path = Path(path)
    doc = {"label": "label", "columns": {c: k.value for c, k in zip(dataset.columns, dataset.feature_kinds)}}
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path
