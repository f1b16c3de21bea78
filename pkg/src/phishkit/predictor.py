"""Shared inference path: one URL in, full scored verdict out.

The CLI `predict` command and the HTTP service both go through
:class:`Predictor`, so their probabilities are bit-identical by
construction.  No network calls happen here; the DNS feature stays NaN.
"""

from __future__ import annotations

import math

import numpy as np

from . import cnn as cnn_mod
from . import gbdt as gbdt_mod
from .bundle import ModelBundle
from .calibration import apply_platt
from .encoding import encode
from .ensemble import combine
from .features import extract_features
from .urlnorm import normalize_url


class Predictor:
    def __init__(self, bundle: ModelBundle, threshold: float | None = None):
        self.bundle = bundle
        self.threshold = bundle.threshold if threshold is None else threshold
        imp = bundle.gbdt_model.feature_importance_
        order = np.argsort(-imp, kind="mergesort")[:5]
        self._top_idx = [int(i) for i in order]

    def predict_detail(self, raw_url: str) -> dict:
        """Score one URL; raises MalformedUrl on unparseable input."""
        parsed = normalize_url(raw_url)
        fv = extract_features(parsed)
        seq = encode(parsed.normalized, self.bundle.vocab, self.bundle.cnn_config.seq_len)

        logit = cnn_mod.predict_logits(self.bundle.cnn_params, seq[None, :])[0]
        p_cnn = float(apply_platt(self.bundle.platt_cnn, np.array([logit]))[0])
        raw_score = gbdt_mod.predict_raw(self.bundle.gbdt_model, fv.values[None, :])[0]
        p_gbdt = float(apply_platt(self.bundle.platt_gbdt, np.array([raw_score]))[0])
        prob = float(combine(self.bundle.weights, np.array([p_cnn]), np.array([p_gbdt]))[0])

        imp = self.bundle.gbdt_model.feature_importance_
        top_features = [
            {
                "name": self.bundle.feature_names[i],
                "value": None if math.isnan(fv.values[i]) else float(fv.values[i]),
                "importance": float(imp[i]),
            }
            for i in self._top_idx
        ]
        return {
            "label": "phishing" if prob >= self.threshold else "valid",
            "probability": prob,
            "p_cnn": p_cnn,
            "p_gbdt": p_gbdt,
            "weights": {
                "w_cnn": self.bundle.weights.w_cnn,
                "w_gbdt": self.bundle.weights.w_gbdt,
            },
            "threshold": self.threshold,
            "top_features": top_features,
            "model_version": self.bundle.model_version,
        }
