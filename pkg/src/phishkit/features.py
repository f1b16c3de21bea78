"""The 36-feature lexical/structural/domain vector computed per URL.

Schema v1 is frozen: the names, order, and definitions below must match
between training and inference, and they are embedded in every model
bundle.  All character counts run over the full normalized URL string;
letters and digits mean ASCII ``a-z`` / ``0-9`` (the URL is lowercased
during normalization, and non-ASCII bytes count as special characters).
The single DNS-dependent feature is carried as NaN unless a resolver
callback is supplied; no network call is ever made here.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .urlnorm import ParsedUrl, is_ip_literal

SCHEMA_VERSION = 1

KEYWORDS = (
    "login",
    "verify",
    "secure",
    "bank",
    "account",
    "update",
    "signin",
    "paypal",
    "confirm",
    "password",
)

#: TLDs disproportionately used by abusive registrations.  Configurable via
#: the ``suspicious_tlds`` argument of :func:`extract_features`.
SUSPICIOUS_TLDS = frozenset(
    {"xyz", "top", "tk", "ml", "ga", "cf", "gq", "icu", "buzz", "click"}
)

#: URL-length bucket upper bounds (inclusive); lengths past the last bound
#: fall into bucket 3.
LENGTH_BUCKET_BOUNDS = (54, 75, 200)

FEATURE_NAMES: tuple[str, ...] = (
    "url_length",
    "host_length",
    "path_length",
    "num_dots",
    "num_path_segments",
    "num_query_params",
    "num_digits",
    "num_letters",
    "num_special_chars",
    "digit_letter_ratio",
    "has_https",
    "has_explicit_port",
    "has_fragment",
    "num_hyphens",
    "num_at_symbols",
    "percent_encoded_fraction",
    "vowel_fraction",
    "suspicious_tld",
    "has_ip_host",
    "entropy_host",
    "entropy_path",
    "num_subdomains",
    "kw_login",
    "kw_verify",
    "kw_secure",
    "kw_bank",
    "kw_account",
    "kw_update",
    "kw_signin",
    "kw_paypal",
    "kw_confirm",
    "kw_password",
    "num_keywords_total",
    "length_bucket",
    "query_length",
    "dns_resolves",
)

N_FEATURES = len(FEATURE_NAMES)
assert N_FEATURES == 36

_PCT_RE = re.compile(r"%[0-9a-f]{2}")
_LETTERS = frozenset("abcdefghijklmnopqrstuvwxyz")
_DIGITS = frozenset("0123456789")
_VOWELS = frozenset("aeiou")


@dataclass(frozen=True)
class FeatureSchema:
    """Versioned, ordered feature-name list with missingness flags."""

    version: int = SCHEMA_VERSION
    names: tuple[str, ...] = FEATURE_NAMES
    missing_allowed: tuple[bool, ...] = field(
        default=tuple(name == "dns_resolves" for name in FEATURE_NAMES)
    )

    def __post_init__(self):
        if len(self.names) != N_FEATURES or len(set(self.names)) != N_FEATURES:
            raise ValueError("schema must hold exactly 36 unique names")

    def index(self, name: str) -> int:
        return self.names.index(name)


SCHEMA = FeatureSchema()


@dataclass(frozen=True)
class FeatureVector:
    """One URL's 36 feature values; NaN marks a missing value."""

    values: np.ndarray
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.values.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} values, got {self.values.shape}")

    def __getitem__(self, name: str) -> float:
        return float(self.values[SCHEMA.index(name)])


def shannon_entropy(s: str) -> float:
    """Shannon entropy (bits) over the byte frequencies of ``s``."""
    data = s.encode("utf-8")
    n = len(data)
    if n == 0:
        return 0.0
    h = 0.0
    for count in Counter(data).values():
        p = count / n
        h -= p * math.log2(p)
    return h


def is_suspicious_tld(host: str, tlds: frozenset[str] = SUSPICIOUS_TLDS) -> bool:
    """True iff the host's final dot-separated label is a flagged TLD."""
    return host.rsplit(".", 1)[-1] in tlds


def is_ip_host(host: str) -> bool:
    """True iff host is exactly four decimal octets, each 0..255."""
    return is_ip_literal(host)


def length_bucket(url_length: int) -> int:
    """Bucket index 0..3 for a URL length (bounds 54 / 75 / 200)."""
    for i, bound in enumerate(LENGTH_BUCKET_BOUNDS):
        if url_length <= bound:
            return i
    return 3


def extract_features(
    p: ParsedUrl,
    resolver: Callable[[str], bool] | None = None,
    suspicious_tlds: frozenset[str] = SUSPICIOUS_TLDS,
) -> FeatureVector:
    """Compute the 36-slot feature vector for one parsed URL.

    Deterministic and total on valid ParsedUrl.  ``resolver``, when given,
    is called with the host and its boolean result fills ``dns_resolves``;
    otherwise that slot is NaN.
    """
    url = p.normalized
    n = len(url)

    num_digits = sum(1 for c in url if c in _DIGITS)
    num_letters = sum(1 for c in url if c in _LETTERS)
    num_keywords = [1.0 if kw in url else 0.0 for kw in KEYWORDS]

    v = np.empty(N_FEATURES, dtype=np.float64)
    v[0] = n
    v[1] = len(p.host)
    v[2] = len(p.path)
    v[3] = url.count(".")
    v[4] = sum(1 for seg in p.path.split("/") if seg)
    v[5] = sum(1 for pair in p.query.split("&") if pair) if p.query else 0
    v[6] = num_digits
    v[7] = num_letters
    v[8] = n - num_digits - num_letters
    v[9] = num_digits / num_letters if num_letters else 0.0
    v[10] = 1.0 if p.scheme == "https" else 0.0
    v[11] = 1.0 if p.explicit_port is not None else 0.0
    v[12] = 1.0 if p.fragment else 0.0
    v[13] = url.count("-")
    v[14] = url.count("@")
    v[15] = min(1.0, 3 * len(_PCT_RE.findall(url)) / n)
    v[16] = (
        sum(1 for c in url if c in _VOWELS) / num_letters if num_letters else 0.0
    )
    v[17] = 1.0 if is_suspicious_tld(p.host, suspicious_tlds) else 0.0
    v[18] = 1.0 if is_ip_host(p.host) else 0.0
    v[19] = shannon_entropy(p.host)
    v[20] = shannon_entropy(p.path)
    v[21] = 0.0 if is_ip_host(p.host) else max(0, len(p.host.split(".")) - 2)
    v[22:32] = num_keywords
    v[32] = sum(num_keywords)
    v[33] = length_bucket(n)
    v[34] = len(p.query)
    v[35] = float(resolver(p.host)) if resolver is not None else np.nan
    return FeatureVector(values=v)


def feature_matrix(
    parsed: Sequence[ParsedUrl],
    resolver: Callable[[str], bool] | None = None,
) -> np.ndarray:
    """Stack feature vectors for many URLs into an (n, 36) float64 matrix."""
    out = np.empty((len(parsed), N_FEATURES), dtype=np.float64)
    for i, p in enumerate(parsed):
        out[i] = extract_features(p, resolver=resolver).values
    return out


def matrix_to_csv(matrix: np.ndarray, path) -> None:
    """Write a feature matrix as CSV: header row, NaN as an empty field."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(FEATURE_NAMES) + "\n")
        for row in matrix:
            f.write(
                ",".join("" if math.isnan(x) else repr(float(x)) for x in row) + "\n"
            )


def matrix_from_csv(path) -> np.ndarray:
    """Read a feature matrix written by :func:`matrix_to_csv`."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip().split(",")
        if tuple(header) != FEATURE_NAMES:
            raise ValueError("feature CSV header does not match schema v1")
        rows = [
            [float(x) if x else math.nan for x in line.rstrip("\n").split(",")]
            for line in f
            if line.strip()
        ]
    return np.asarray(rows, dtype=np.float64).reshape(-1, N_FEATURES)
