"""Weighted-average ensemble of the two calibrated models.

The combined probability is w_cnn * p_cnn + (1 - w_cnn) * p_gbdt; the
weight is chosen by an exhaustive grid search maximizing validation
ROC-AUC.  Because the grid includes both endpoints, the best combined
validation AUC can never fall below either individual model's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels, LengthMismatch
from .metrics import roc_auc


@dataclass(frozen=True)
class EnsembleWeights:
    w_cnn: float

    def __post_init__(self):
        if not 0.0 <= self.w_cnn <= 1.0:
            raise ValueError("w_cnn must lie in [0, 1]")

    @property
    def w_gbdt(self) -> float:
        return 1.0 - self.w_cnn


def combine(w: EnsembleWeights, p_cnn, p_gbdt) -> np.ndarray:
    """Elementwise weighted average of the two probability vectors."""
    a = np.asarray(p_cnn, dtype=np.float64)
    b = np.asarray(p_gbdt, dtype=np.float64)
    if a.shape != b.shape:
        raise LengthMismatch(f"{a.shape} vs {b.shape}")
    return w.w_cnn * a + w.w_gbdt * b


def grid_search_weight(p_cnn, p_gbdt, labels, step: float = 0.01):
    """Scan w_cnn over {0, step, ..., 1} for the best validation ROC-AUC.

    Ties prefer the weight closest to 0.5, then the smaller w_cnn.
    Returns (EnsembleWeights, best_auc).
    """
    labels = np.asarray(labels)
    if len(np.unique(labels)) < 2:
        raise DegenerateLabels("both classes required for the weight search")
    n_steps = round(1.0 / step)
    if abs(n_steps * step - 1.0) > 1e-12:
        raise ValueError("step must divide 1 evenly")

    best_w, best_auc = None, -np.inf
    for k in range(n_steps + 1):
        w = k / n_steps
        auc = roc_auc(combine(EnsembleWeights(w), p_cnn, p_gbdt), labels)
        better = auc > best_auc
        tie = auc == best_auc and (
            abs(w - 0.5) < abs(best_w - 0.5)
            or (abs(w - 0.5) == abs(best_w - 0.5) and w < best_w)
        )
        if better or tie:
            best_w, best_auc = w, auc
    return EnsembleWeights(best_w), float(best_auc)
