"""Single-file model bundle with bit-exact round-trips.

Layout: 8-byte magic "PHSHBNDL", u32 format version, then length-prefixed
named sections, each trailed by a CRC32 of its payload.  Scalar settings
travel in a canonical-JSON "meta" section (Python float repr round-trips
exactly); tensors and tree arrays are raw 64-bit little-endian payloads.
Unknown sections are skipped on load so future writers stay readable.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import features
from .calibration import PlattParams
from .cnn import CnnConfig, CnnParams
from .encoding import CharVocab
from .ensemble import EnsembleWeights
from .errors import BadMagic, ChecksumMismatch, SchemaMismatch, VersionUnsupported
from .gbdt import GbdtConfig, GbdtModel, Tree

MAGIC = b"PHSHBNDL"
FORMAT_VERSION = 1


@dataclass
class ModelBundle:
    schema_version: int
    feature_names: tuple[str, ...]
    vocab: CharVocab
    cnn_config: CnnConfig
    cnn_params: CnnParams
    gbdt_config: GbdtConfig
    gbdt_model: GbdtModel
    platt_cnn: PlattParams
    platt_gbdt: PlattParams
    weights: EnsembleWeights
    threshold: float = 0.5
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def model_version(self) -> str:
        return self.metadata.get("model_version", "unversioned")


def _write_section(out: io.BytesIO, name: str, payload: bytes) -> None:
    nb = name.encode("ascii")
    out.write(struct.pack("<I", len(nb)))
    out.write(nb)
    out.write(struct.pack("<Q", len(payload)))
    out.write(payload)
    out.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))


def _meta_payload(b: ModelBundle) -> bytes:
    meta = {
        "schema_version": b.schema_version,
        "feature_names": list(b.feature_names),
        "vocab": {
            "symbols": b.vocab.symbols,
            "pad_index": b.vocab.pad_index,
            "unknown_index": b.vocab.unknown_index,
        },
        "cnn_config": {
            "embed_dim": b.cnn_config.embed_dim,
            "conv_filters": list(b.cnn_config.conv_filters),
            "kernel_sizes": list(b.cnn_config.kernel_sizes),
            "dense_hidden": b.cnn_config.dense_hidden,
            "dropout_rate": b.cnn_config.dropout_rate,
            "seq_len": b.cnn_config.seq_len,
            "vocab_size": b.cnn_config.vocab_size,
        },
        "gbdt_config": {
            "learning_rate": b.gbdt_config.learning_rate,
            "max_estimators": b.gbdt_config.max_estimators,
            "num_leaves": b.gbdt_config.num_leaves,
            "min_samples_leaf": b.gbdt_config.min_samples_leaf,
            "early_stop_rounds": b.gbdt_config.early_stop_rounds,
            "seed": b.gbdt_config.seed,
        },
        "platt_cnn": {"a": b.platt_cnn.a, "b": b.platt_cnn.b},
        "platt_gbdt": {"a": b.platt_gbdt.a, "b": b.platt_gbdt.b},
        "w_cnn": b.weights.w_cnn,
        "threshold": b.threshold,
        "metadata": b.metadata,
    }
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _cnn_payload(params: CnnParams) -> bytes:
    out = io.BytesIO()
    out.write(struct.pack("<I", len(params.tensors)))
    for name, tensor in params.tensors.items():
        nb = name.encode("ascii")
        out.write(struct.pack("<I", len(nb)))
        out.write(nb)
        out.write(struct.pack("<B", tensor.ndim))
        out.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        out.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    return out.getvalue()


def _gbdt_payload(model: GbdtModel) -> bytes:
    out = io.BytesIO()
    out.write(struct.pack("<dIdI", model.base_score, model.n_features,
                          model.learning_rate, len(model.trees)))
    imp = model.feature_importance_
    if imp is None:
        imp = np.zeros(model.n_features)
    out.write(np.ascontiguousarray(imp, dtype="<f8").tobytes())
    for tree in model.trees:
        out.write(struct.pack("<I", len(tree.feature)))
        out.write(np.ascontiguousarray(tree.feature, dtype="<i4").tobytes())
        out.write(np.ascontiguousarray(tree.threshold, dtype="<f8").tobytes())
        out.write(np.ascontiguousarray(tree.miss_left, dtype="u1").tobytes())
        out.write(np.ascontiguousarray(tree.left, dtype="<i4").tobytes())
        out.write(np.ascontiguousarray(tree.right, dtype="<i4").tobytes())
        out.write(np.ascontiguousarray(tree.value, dtype="<f8").tobytes())
    return out.getvalue()


def save(bundle: ModelBundle, path_or_file) -> None:
    """Serialize to the single-file container format."""
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", bundle.format_version))
    _write_section(out, "meta", _meta_payload(bundle))
    _write_section(out, "cnn", _cnn_payload(bundle.cnn_params))
    _write_section(out, "gbdt", _gbdt_payload(bundle.gbdt_model))
    blob = out.getvalue()
    if hasattr(path_or_file, "write"):
        path_or_file.write(blob)
    else:
        with open(path_or_file, "wb") as f:
            f.write(blob)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ChecksumMismatch("bundle truncated")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.data)


def _read_sections(data: bytes) -> dict[str, bytes]:
    r = _Reader(data)
    if r.take(len(MAGIC)) != MAGIC:
        raise BadMagic("not a phishkit bundle")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"format version {version}")
    sections: dict[str, bytes] = {}
    while not r.exhausted:
        name = r.take(r.u32()).decode("ascii")
        payload = r.take(r.u64())
        crc = r.u32()
        if crc != (zlib.crc32(payload) & 0xFFFFFFFF):
            raise ChecksumMismatch(f"section {name!r} failed CRC32")
        if name not in sections:
            sections[name] = payload  # unknown names stay unconsumed (ignored)
    return sections


def _parse_cnn(payload: bytes, cfg: CnnConfig) -> CnnParams:
    r = _Reader(payload)
    tensors: dict[str, np.ndarray] = {}
    for _ in range(r.u32()):
        name = r.take(r.u32()).decode("ascii")
        ndim = struct.unpack("<B", r.take(1))[0]
        shape = struct.unpack(f"<{ndim}I", r.take(4 * ndim))
        count = int(np.prod(shape)) if ndim else 1
        tensors[name] = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(shape).copy()
    return CnnParams(tensors, cfg)


def _parse_gbdt(payload: bytes, cfg: GbdtConfig) -> GbdtModel:
    r = _Reader(payload)
    base, n_features, lr, n_trees = struct.unpack("<dIdI", r.take(24))
    imp = np.frombuffer(r.take(8 * n_features), dtype="<f8").copy()
    model = GbdtModel(
        base_score=base, learning_rate=lr, n_features=n_features, feature_importance_=imp
    )
    for _ in range(n_trees):
        n = r.u32()
        model.trees.append(
            Tree(
                feature=np.frombuffer(r.take(4 * n), dtype="<i4").copy(),
                threshold=np.frombuffer(r.take(8 * n), dtype="<f8").copy(),
                miss_left=np.frombuffer(r.take(n), dtype="u1").copy(),
                left=np.frombuffer(r.take(4 * n), dtype="<i4").copy(),
                right=np.frombuffer(r.take(4 * n), dtype="<i4").copy(),
                value=np.frombuffer(r.take(8 * n), dtype="<f8").copy(),
            )
        )
    model.best_round = n_trees
    return model


def load(source, expected_schema_version: int | None = None) -> ModelBundle:
    """Read a bundle from a path, file object, or bytes."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as f:
            data = f.read()

    sections = _read_sections(data)
    for required in ("meta", "cnn", "gbdt"):
        if required not in sections:
            raise ChecksumMismatch(f"missing section {required!r}")

    meta = json.loads(sections["meta"].decode("utf-8"))
    expected = (
        expected_schema_version
        if expected_schema_version is not None
        else features.SCHEMA_VERSION
    )
    if meta["schema_version"] != expected:
        raise SchemaMismatch(
            f"bundle schema v{meta['schema_version']} vs extractor v{expected}"
        )

    cnn_cfg = CnnConfig(
        embed_dim=meta["cnn_config"]["embed_dim"],
        conv_filters=tuple(meta["cnn_config"]["conv_filters"]),
        kernel_sizes=tuple(meta["cnn_config"]["kernel_sizes"]),
        dense_hidden=meta["cnn_config"]["dense_hidden"],
        dropout_rate=meta["cnn_config"]["dropout_rate"],
        seq_len=meta["cnn_config"]["seq_len"],
        vocab_size=meta["cnn_config"]["vocab_size"],
    )
    gbdt_cfg = GbdtConfig(**meta["gbdt_config"])
    return ModelBundle(
        schema_version=meta["schema_version"],
        feature_names=tuple(meta["feature_names"]),
        vocab=CharVocab(
            symbols=meta["vocab"]["symbols"],
            pad_index=meta["vocab"]["pad_index"],
            unknown_index=meta["vocab"]["unknown_index"],
        ),
        cnn_config=cnn_cfg,
        cnn_params=_parse_cnn(sections["cnn"], cnn_cfg),
        gbdt_config=gbdt_cfg,
        gbdt_model=_parse_gbdt(sections["gbdt"], gbdt_cfg),
        platt_cnn=PlattParams(**meta["platt_cnn"]),
        platt_gbdt=PlattParams(**meta["platt_gbdt"]),
        weights=EnsembleWeights(meta["w_cnn"]),
        threshold=meta["threshold"],
        metadata=meta["metadata"],
        format_version=FORMAT_VERSION,
    )


def manifest(bundle: ModelBundle) -> str:
    """Human-readable description of a bundle (the `inspect` command body)."""
    m = bundle.gbdt_model
    lines = [
        f"phishkit model bundle (format v{bundle.format_version})",
        f"  model_version:   {bundle.model_version}",
        f"  feature schema:  v{bundle.schema_version}, {len(bundle.feature_names)} features",
        f"  char vocab:      {len(bundle.vocab.symbols)} symbols "
        f"(pad={bundle.vocab.pad_index}, unknown={bundle.vocab.unknown_index})",
        f"  cnn:             embed={bundle.cnn_config.embed_dim}, "
        f"filters={list(bundle.cnn_config.conv_filters)}, "
        f"kernels={list(bundle.cnn_config.kernel_sizes)}, "
        f"seq_len={bundle.cnn_config.seq_len}",
        f"  gbdt:            {len(m.trees)} trees, lr={m.learning_rate}, "
        f"base_score={m.base_score:.6f}",
        f"  calibration:     cnn(a={bundle.platt_cnn.a:.6f}, b={bundle.platt_cnn.b:.6f}) "
        f"gbdt(a={bundle.platt_gbdt.a:.6f}, b={bundle.platt_gbdt.b:.6f})",
        f"  ensemble:        w_cnn={bundle.weights.w_cnn:.2f}, w_gbdt={bundle.weights.w_gbdt:.2f}",
        f"  threshold:       {bundle.threshold}",
    ]
    for key in sorted(bundle.metadata):
        if key != "model_version":
            lines.append(f"  {key + ':':<16} {bundle.metadata[key]}")
    return "\n".join(lines)
