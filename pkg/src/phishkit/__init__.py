"""phishkit: hybrid phishing-URL detection.

Lexical/structural feature extraction, a character-level CNN trained from
scratch, leaf-wise gradient-boosted trees, per-model sigmoid calibration,
a weighted ensemble, and a low-latency prediction service, all behind a
portable single-file model bundle.
"""

__version__ = "0.1.0"

from .urlnorm import ParsedUrl, normalize_url, registrable_domain
from .features import (
    FEATURE_NAMES,
    SCHEMA_VERSION,
    FeatureVector,
    extract_features,
    feature_matrix,
    shannon_entropy,
)
from .encoding import SEQ_LEN, VOCAB, CharVocab, encode, encode_batch
from .ensemble import EnsembleWeights, combine, grid_search_weight
from .calibration import PlattParams, apply_platt, fit_platt
from .metrics import ConfusionMatrix, confusion_at, curves, evaluate, roc_auc
from .bundle import ModelBundle, load, save
from .predictor import Predictor

__all__ = [
    "ParsedUrl",
    "normalize_url",
    "registrable_domain",
    "FEATURE_NAMES",
    "SCHEMA_VERSION",
    "FeatureVector",
    "extract_features",
    "feature_matrix",
    "shannon_entropy",
    "SEQ_LEN",
    "VOCAB",
    "CharVocab",
    "encode",
    "encode_batch",
    "EnsembleWeights",
    "combine",
    "grid_search_weight",
    "PlattParams",
    "apply_platt",
    "fit_platt",
    "ConfusionMatrix",
    "confusion_at",
    "curves",
    "evaluate",
    "roc_auc",
    "ModelBundle",
    "load",
    "save",
    "Predictor",
    "__version__",
]
