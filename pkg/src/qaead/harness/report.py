"""Write a RunReport as plain CSV/JSON.

Files: ``report.json`` (everything except wall-clock timings), ``roc.csv``,
``loss.csv``, ``timings.json``, plus ``q_hist.csv`` / ``m2_hist.csv`` when
metric distributions were collected. Timings live in their own file so the
rest stays byte-identical across reruns with the same seed.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from ..metrics import Metric
from .experiment import RunReport


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def emit_report(report: RunReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = [write_json(out / "report.json", report.to_dict())]

        path = out / "roc.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = _writer(fh)
            w.writerow(["fold", "fpr", "tpr"])
            for f in report.folds:
                for fpr, tpr in f.roc.points:
                    w.writerow([f.index, repr(fpr), repr(tpr)])
        files.append(path)

        path = out / "loss.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = _writer(fh)
            w.writerow(["fold", "epoch", "mean_loss", "mean_Q", "mean_M2"])
            for f in report.folds:
                snaps = {s["epoch"]: s for s in f.snapshots}
                for epoch, loss in enumerate(f.losses):
                    s = snaps.get(epoch, {})
                    w.writerow([f.index, epoch, repr(loss), _fmt(s.get("mean_q")), _fmt(s.get("mean_m2"))])
        files.append(path)

        for metric, name in ((Metric.Q, "q_hist.csv"), (Metric.M2, "m2_hist.csv")):
            rows = [(f.index, d) for f in report.folds for d in f.distributions if d.metric == metric]
            if not rows:
                continue
            path = out / name
            with path.open("w", newline="", encoding="utf-8") as fh:
                w = _writer(fh)
                w.writerow(["fold", "provenance", "value"])
                for index, dist in rows:
                    for v in dist.samples:
                        w.writerow([index, dist.provenance.value, repr(float(v))])
            files.append(path)

        files.append(write_json(out / "timings.json", report.timings))
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return files
