from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class RocResult:
    """ROC over anomaly scores with signal as the positive class."""
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    n_signal: int
    n_background: int

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_dict(self) -> dict:
        return {"auc": self.auc, "n_signal": self.n_signal, "n_background": self.n_background,
                "fpr": self.fpr.tolist(), "tpr": self.tpr.tolist()}


def roc_auc(scores_bg, scores_sig) -> RocResult:
    """Sweep thresholds over the union of scores, highest first.

    Events scoring >= threshold are flagged; tied scores enter together, so the
    trapezoid gives ties half credit.
    """
    bg = np.asarray(scores_bg, dtype=np.float64).ravel()
    sig = np.asarray(scores_sig, dtype=np.float64).ravel()
    if bg.size == 0 or sig.size == 0:
        raise ValueError("both score lists must be nonempty")
    thr = np.unique(np.concatenate([bg, sig]))[::-1]
    bg_sorted = np.sort(bg)
    sig_sorted = np.sort(sig)
    # counts of scores >= t
    n_bg = bg.size - np.searchsorted(bg_sorted, thr, side="left")
    n_sig = sig.size - np.searchsorted(sig_sorted, thr, side="left")
    fpr = np.concatenate([[0.0], n_bg / bg.size])
    tpr = np.concatenate([[0.0], n_sig / sig.size])
    auc = float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2))
    return RocResult(fpr, tpr, np.concatenate([[np.inf], thr]), auc, int(sig.size), int(bg.size))


def rank_auc(scores_bg, scores_sig) -> float:
    """P(signal > background) + P(tie) / 2, by direct pair counting."""
    bg = np.asarray(scores_bg, dtype=np.float64).ravel()
    sig = np.asarray(scores_sig, dtype=np.float64).ravel()
    diff = sig[:, None] - bg[None, :]
    return float((np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / diff.size)
