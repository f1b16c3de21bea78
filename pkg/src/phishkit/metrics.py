"""Binary-classification evaluation: scalar metrics and curve tables.

ROC-AUC uses the rank (Mann-Whitney) formulation with average ranks for
ties, i.e. P(score_pos > score_neg) + 0.5 * P(equal).  Curve emitters
return plain tabular data; rendering is left to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLabels, LengthMismatch


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _check_pair(probs, labels):
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.shape != labels.shape:
        raise LengthMismatch(f"{probs.shape} vs {labels.shape}")
    return probs, labels


def confusion_at(probs, labels, threshold: float) -> ConfusionMatrix:
    """Tally the confusion matrix predicting positive iff prob >= threshold."""
    probs, labels = _check_pair(probs, labels)
    pred = probs >= threshold
    pos = labels == 1
    return ConfusionMatrix(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    return (cm.tp + cm.tn) / cm.total


def precision(cm: ConfusionMatrix) -> tuple[float, bool]:
    """(value, defined); an empty positive-prediction set reports 1.0, flagged."""
    if cm.tp + cm.fp == 0:
        return 1.0, False
    return cm.tp / (cm.tp + cm.fp), True


def recall(cm: ConfusionMatrix) -> float:
    if cm.tp + cm.fn == 0:
        return 0.0
    return cm.tp / (cm.tp + cm.fn)


def f1_score(cm: ConfusionMatrix) -> float:
    p, _ = precision(cm)
    r = recall(cm)
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average rank."""
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=np.float64)
    sx = x[order]
    i = 0
    while i < len(sx):
        j = i
        while j + 1 < len(sx) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(probs, labels) -> float:
    """Rank-based ROC-AUC; raises DegenerateLabels on a single-class input."""
    probs, labels = _check_pair(probs, labels)
    pos = labels == 1
    n_pos = int(np.sum(pos))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("both classes required for ROC-AUC")
    ranks = _average_ranks(probs)
    return (float(np.sum(ranks[pos])) - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)


@dataclass
class EvalReport:
    """Scalar metrics plus the tabular curve data behind the usual figures."""

    accuracy: float
    precision: float
    precision_defined: bool
    recall: float
    f1: float
    roc_auc: float
    confusion: ConfusionMatrix
    roc_points: list[tuple[float, float, float]] = field(default_factory=list)
    pr_points: list[tuple[float, float, float]] = field(default_factory=list)
    reliability_bins: list[dict] = field(default_factory=list)
    probability_histograms: dict[str, list[dict]] = field(default_factory=dict)

    def scalars(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "precision_defined": self.precision_defined,
            "recall": self.recall,
            "f1": self.f1,
            "roc_auc": self.roc_auc,
        }


def roc_points(probs, labels) -> list[tuple[float, float, float]]:
    """(fpr, tpr, threshold) at every distinct score, endpoints included."""
    probs, labels = _check_pair(probs, labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    order = np.argsort(-probs, kind="mergesort")
    sp, sl = probs[order], labels[order]
    pts = [(0.0, 0.0, float("inf"))]
    tp = fp = 0
    for i in range(len(sp)):
        if sl[i] == 1:
            tp += 1
        else:
            fp += 1
        last_of_tie = i + 1 == len(sp) or sp[i + 1] != sp[i]
        if last_of_tie:
            pts.append((fp / n_neg, tp / n_pos, float(sp[i])))
    return pts


def pr_points(probs, labels) -> list[tuple[float, float, float]]:
    """(recall, precision, threshold) at every distinct score."""
    probs, labels = _check_pair(probs, labels)
    n_pos = int(np.sum(labels == 1))
    order = np.argsort(-probs, kind="mergesort")
    sp, sl = probs[order], labels[order]
    pts = []
    tp = fp = 0
    for i in range(len(sp)):
        if sl[i] == 1:
            tp += 1
        else:
            fp += 1
        last_of_tie = i + 1 == len(sp) or sp[i + 1] != sp[i]
        if last_of_tie:
            pts.append((tp / n_pos, tp / (tp + fp), float(sp[i])))
    return pts


def reliability_bins(probs, labels, n_bins: int = 10) -> list[dict]:
    """Equal-width calibration bins; empty bins carry count 0 and NaN rate."""
    probs, labels = _check_pair(probs, labels)
    idx = np.minimum((probs * n_bins).astype(int), n_bins - 1)
    out = []
    for k in range(n_bins):
        mask = idx == k
        count = int(np.sum(mask))
        out.append(
            {
                "bin": k,
                "lo": k / n_bins,
                "hi": (k + 1) / n_bins,
                "count": count,
                "mean_predicted": float(np.mean(probs[mask])) if count else float("nan"),
                "positive_rate": float(np.mean(labels[mask] == 1)) if count else float("nan"),
            }
        )
    return out


def probability_histograms(probs, labels, n_bins: int = 20) -> dict[str, list[dict]]:
    """Per-class histograms of predicted probability over [0, 1]."""
    probs, labels = _check_pair(probs, labels)
    out = {}
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    for name, mask in (("phishing", labels == 1), ("valid", labels == 0)):
        counts, _ = np.histogram(probs[mask], bins=edges)
        out[name] = [
            {"lo": float(edges[k]), "hi": float(edges[k + 1]), "count": int(counts[k])}
            for k in range(n_bins)
        ]
    return out


def curves(probs, labels):
    """All four curve tables in one call (roc, pr, reliability, histograms)."""
    probs, labels = _check_pair(probs, labels)
    if len(np.unique(labels)) < 2:
        raise DegenerateLabels("both classes required for curves")
    return (
        roc_points(probs, labels),
        pr_points(probs, labels),
        reliability_bins(probs, labels),
        probability_histograms(probs, labels),
    )


def evaluate(probs, labels, threshold: float = 0.5, with_curves: bool = True) -> EvalReport:
    """Full evaluation report at a decision threshold."""
    cm = confusion_at(probs, labels, threshold)
    prec, defined = precision(cm)
    report = EvalReport(
        accuracy=accuracy(cm),
        precision=prec,
        precision_defined=defined,
        recall=recall(cm),
        f1=f1_score(cm),
        roc_auc=roc_auc(probs, labels),
        confusion=cm,
    )
    if with_curves:
        report.roc_points, report.pr_points, report.reliability_bins, report.probability_histograms = curves(
            probs, labels
        )
    return report
