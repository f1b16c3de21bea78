"""Fixed-length character encoding of URLs for the convolutional model.

The vocabulary holds 70 symbols mapped to indices 1..70 (a-z, 0-9, then
34 specials in a frozen order); index 0 is padding and 71 the unknown
symbol, so the embedding table has 72 rows.  Sequences are 200 long:
longer URLs keep their rightmost 200 characters (paths and queries carry
the phishing signal), shorter ones are left-padded with zeros so content
stays right-aligned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SEQ_LEN = 200

_SPECIALS = "-._~:/?#[]@!$&'()*+,;=%<>\"{}|\\^ `\t"
_SYMBOLS = "abcdefghijklmnopqrstuvwxyz" + "0123456789" + _SPECIALS


@dataclass(frozen=True)
class CharVocab:
    """Ordered 70-symbol vocabulary with pad/unknown sentinel indices."""

    symbols: str = _SYMBOLS
    pad_index: int = 0
    unknown_index: int = 71

    def __post_init__(self):
        if len(self.symbols) != 70 or len(set(self.symbols)) != 70:
            raise ValueError("vocabulary must hold exactly 70 unique symbols")

    @property
    def size(self) -> int:
        """Embedding-table size: 70 symbols + pad + unknown."""
        return len(self.symbols) + 2

    def index_of(self, ch: str) -> int:
        i = self.symbols.find(ch)
        return i + 1 if i >= 0 else self.unknown_index


VOCAB = CharVocab()

# dense uint8 lookup over the BMP-ish ASCII range; anything outside maps
# to unknown via the fallback in encode()
_LOOKUP = np.full(128, VOCAB.unknown_index, dtype=np.uint8)
for _i, _c in enumerate(VOCAB.symbols):
    _LOOKUP[ord(_c)] = _i + 1


def encode(normalized_url: str, vocab: CharVocab = VOCAB, seq_len: int = SEQ_LEN) -> np.ndarray:
    """Encode a normalized URL as a length-``seq_len`` uint8 index vector.

    Keeps the last ``seq_len`` characters of longer URLs and left-pads
    shorter ones with the pad index.
    """
    tail = normalized_url[-seq_len:]
    out = np.zeros(seq_len, dtype=np.uint8)
    if vocab is VOCAB:
        codes = np.frombuffer(tail.encode("utf-32-le"), dtype=np.uint32)
        idx = np.where(codes < 128, _LOOKUP[np.minimum(codes, 127)], vocab.unknown_index)
    else:
        idx = np.array([vocab.index_of(c) for c in tail], dtype=np.uint8)
    out[seq_len - len(tail):] = idx
    return out


def encode_batch(urls: list[str], vocab: CharVocab = VOCAB, seq_len: int = SEQ_LEN) -> np.ndarray:
    """Encode many URLs into an (n, seq_len) uint8 matrix."""
    out = np.zeros((len(urls), seq_len), dtype=np.uint8)
    for i, u in enumerate(urls):
        out[i] = encode(u, vocab, seq_len)
    return out
