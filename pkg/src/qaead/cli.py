"""Command-line entry point.

Subcommands: synth, train, evaluate, gridsearch, metrics. Exit codes: 0 ok,
2 config error, 3 data error, 4 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .cae import MlpAutoencoder
from .data import BACKGROUND, SIGNAL, ScalerSpec, SynthConfig, save_csv, synth_dataset, transform, write_schema
from .errors import ConfigError, DataError
from .harness.experiment import (
    ExperimentConfig, FoldReport, RunReport, bundled_config, load_dataset, qae_distributions, score, train_fold,
)
from .harness.grid import grid_search, space_from_dict
from .harness.report import emit_report, write_json
from .harness.roc import roc_auc
from .data import make_folds
from .optim import write_training_log
from .qae import QaeModel

log = logging.getLogger("qaead")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4


def _read_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return doc


def _config(args) -> ExperimentConfig:
    doc = _read_json(args.config) if args.config else bundled_config("default")
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.threads is not None:
        doc["threads"] = args.threads
    return ExperimentConfig.from_dict(doc)


def _out(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_model(path: Path, model, scaler: ScalerSpec, cfg: ExperimentConfig) -> Path:
    doc = {"family": "qae" if isinstance(model, QaeModel) else "cae", "model": model.to_dict(),
           "scaler": scaler.to_dict(), "config": cfg.to_dict()}
    return write_json(path, doc)


def _load_model(path):
    doc = _read_json(path)
    try:
        family = doc["family"]
        model = QaeModel.from_dict(doc["model"]) if family == "qae" else MlpAutoencoder.from_dict(doc["model"])
        return model, ScalerSpec.from_dict(doc["scaler"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path} is not a saved model: {exc}") from exc


# ---------------------------------------------------------------------------
# commands

def cmd_synth(args) -> list[Path]:
    doc = _read_json(args.config) if args.config else bundled_config("default")
    synth_doc = doc.get("dataset", {}).get("synth", doc) if "dataset" in doc else doc
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    try:
        cfg = SynthConfig.from_dict(synth_doc)
    except ValueError as exc:
        raise ConfigError(f"synth config: {exc}") from exc
    ds = synth_dataset(cfg, seed=seed)
    out = _out(args)
    return [save_csv(ds, out / "dataset.csv"), write_schema(ds, out / "schema.json"),
            write_json(out / "synth_config.json", {"seed": seed, **cfg.to_dict()})]


def cmd_train(args) -> list[Path]:
    cfg = _config(args)
    ds = load_dataset(cfg)
    f = cfg.folds
    fold = make_folds(ds, f.n_train_bg, f.n_test, f.n_folds, seed=cfg.seed)[0]
    val = fold.test[ds.labels[fold.test] == BACKGROUND]
    tf = train_fold(cfg, ds, fold.train, val, 0)
    out = _out(args)
    snaps = tf.train_result.snapshots if tf.train_result is not None else []
    return [_save_model(out / "model.json", tf.model, tf.scaler, cfg),
            write_training_log(out / "loss.csv", tf.losses, snaps)]


def cmd_evaluate(args) -> list[Path]:
    cfg = _config(args)
    if not args.model:
        from .harness.experiment import run_experiment
        report = run_experiment(cfg)
        return emit_report(report, _out(args))
    model, scaler = _load_model(args.model)
    ds = load_dataset(cfg)
    f = cfg.folds
    reports = []
    for i, fold in enumerate(make_folds(ds, f.n_train_bg, f.n_test, f.n_folds, seed=cfg.seed)):
        test_bg = fold.test[ds.labels[fold.test] == BACKGROUND]
        test_sig = fold.test[ds.labels[fold.test] == SIGNAL]
        s_bg = score(model, transform(scaler, ds.rows(test_bg)))
        s_sig = score(model, transform(scaler, ds.rows(test_sig)))
        n_params = model.ansatz.n_params if isinstance(model, QaeModel) else model.n_effective_params
        reports.append(FoldReport(i, [], roc_auc(s_bg, s_sig), float(np.mean(s_bg)), n_params=n_params))
    return emit_report(RunReport(cfg.to_dict(), reports, {}), _out(args))


def cmd_gridsearch(args) -> list[Path]:
    cfg = _config(args)
    doc = _read_json(args.config) if args.config else {}
    grid = doc.get("grid", {})
    try:
        space = space_from_dict(cfg.model.family, grid.get("space"))
        budget = int(args.budget if args.budget is not None else grid.get("budget", 4))
        results = grid_search(cfg, space, budget, seed=cfg.seed)
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise ConfigError(str(exc)) from exc
    out = _out(args)
    path_csv = out / "gridsearch.csv"
    with path_csv.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bucket", "rank", "candidate", "n_params", "validation_loss", "auc_mean", "auc_std", "model"])
        for r in results:
            w.writerow([r["bucket"], r["rank"], r["candidate"], r["n_params"], repr(r["validation_loss"]),
                        repr(r["auc_mean"]), repr(r["auc_std"]), json.dumps(r["model"], sort_keys=True)])
    return [write_json(out / "gridsearch.json", {"budget": budget, "seed": cfg.seed, "results": results}), path_csv]


def cmd_metrics(args) -> list[Path]:
    cfg = _config(args)
    if cfg.model.family != "qae":
        raise ConfigError("metrics apply to QAE models only")
    cfg.metrics.entanglement = cfg.metrics.magic = True
    ds = load_dataset(cfg)
    f = cfg.folds
    fold = make_folds(ds, f.n_train_bg, f.n_test, f.n_folds, seed=cfg.seed)[0]
    val = fold.test[ds.labels[fold.test] == BACKGROUND][: cfg.metrics.n_validation]
    if args.model:
        model, scaler = _load_model(args.model)
        if not isinstance(model, QaeModel):
            raise ConfigError("metrics apply to QAE models only")
    else:
        tf = train_fold(cfg, ds, fold.train, val, 0)
        model, scaler = tf.model, tf.scaler
    dists = qae_distributions(model, transform(scaler, ds.rows(val)), cfg, cfg.seed)
    out = _out(args)
    files = []
    for metric, name in (("Q", "q_hist.csv"), ("M2", "m2_hist.csv")):
        path = out / name
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["provenance", "value"])
            for d in dists:
                if d.metric.value == metric:
                    for v in d.samples:
                        w.writerow([d.provenance.value, repr(float(v))])
        files.append(path)
    files.append(write_json(out / "metrics.json", {"distributions": [d.summary() for d in dists]}))
    return files


COMMANDS = {
    "synth": (cmd_synth, "generate a synthetic dataset CSV"),
    "train": (cmd_train, "train one model on the first fold"),
    "evaluate": (cmd_evaluate, "train and score every fold (or score a saved --model)"),
    "gridsearch": (cmd_gridsearch, "randomized hyperparameter search"),
    "metrics": (cmd_metrics, "entanglement / magic distributions for a QAE"),
}


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="experiment config (JSON); bundled default if omitted")
    p.add_argument("--seed", type=int, default=d, help="override the config seed")
    p.add_argument("--out", default=d, help="output directory (default: current directory)")
    p.add_argument("--threads", type=int, default=d, help="worker threads for folds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaead", description=__doc__.splitlines()[0])
    _add_globals(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        _add_globals(p, suppress=True)
        if name in ("evaluate", "metrics"):
            p.add_argument("--model", help="saved model.json from `train`")
        if name == "gridsearch":
            p.add_argument("--budget", type=int, help="number of sampled configurations")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    for attr in ("model", "budget"):
        if not hasattr(args, attr):
            setattr(args, attr, None)
    try:
        files = COMMANDS[args.command][0](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - map everything else to the runtime exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
