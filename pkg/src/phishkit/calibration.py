"""Sigmoid (Platt) calibration of raw model scores.

Fits sigma(a*s + b) by Newton iterations on the Bernoulli likelihood with
Platt's smoothed targets, stored in the *increasing* convention: a > 0
whenever larger scores mean more phishing.  Calibration is always fitted
on the validation split; it is strictly monotone for a > 0, so it never
changes the ranking (or the ROC-AUC) of the scores it transforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabels


@dataclass(frozen=True)
class PlattParams:
    a: float
    b: float


def _sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_platt(scores, labels, max_iter: int = 100, tol: float = 1e-8) -> PlattParams:
    """Maximum-likelihood sigmoid fit with Platt target smoothing.

    Targets are (N+ + 1)/(N+ + 2) for positives and 1/(N- + 2) for
    negatives, which keeps the optimum finite even on separable scores.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels must align")
    n_pos = int(np.sum(y == 1))
    n_neg = len(y) - n_pos
    if n_pos < 2 or n_neg < 2:
        raise DegenerateLabels("need at least two examples of each class")

    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))
    a = 0.0
    b = float(np.log((n_pos + 1.0) / (n_neg + 1.0)))
    for _ in range(max_iter):
        p = _sigmoid(a * s + b)
        w = p * (1.0 - p)
        grad_a = float(np.sum((p - t) * s))
        grad_b = float(np.sum(p - t))
        haa = float(np.sum(w * s * s)) + 1e-12
        hbb = float(np.sum(w)) + 1e-12
        hab = float(np.sum(w * s))
        det = haa * hbb - hab * hab
        if det <= 0:
            break
        da = -(hbb * grad_a - hab * grad_b) / det
        db = -(haa * grad_b - hab * grad_a) / det
        a += da
        b += db
        if max(abs(da), abs(db)) < tol:
            break
    return PlattParams(a=a, b=b)


def apply_platt(p: PlattParams, scores) -> np.ndarray:
    """sigma(a*s + b) elementwise; strictly monotone in s when a > 0."""
    return _sigmoid(p.a * np.asarray(scores, dtype=np.float64) + p.b)
