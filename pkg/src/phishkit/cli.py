"""Operator command line: ingest -> train -> eval -> predict/serve/inspect.

Stage outputs are plain files so every run is auditable; the pipeline
commands finish by atomically writing a run manifest (seed, config, input
fingerprints, output paths, per-stage timings).  Exit codes: 0 ok, 2 bad
input, 3 degenerate data.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import cnn as cnn_mod
from . import dataset as ds
from . import gbdt as gbdt_mod
from . import metrics as metrics_mod
from .bundle import ModelBundle, load as load_bundle, manifest as bundle_manifest, save as save_bundle
from .calibration import apply_platt, fit_platt
from .cnn import CnnConfig, TrainConfig
from .encoding import VOCAB, encode_batch
from .ensemble import combine, grid_search_weight
from .errors import (
    BadMagic,
    ChecksumMismatch,
    DegenerateLabels,
    EmptyFile,
    EmptyTraining,
    MalformedRow,
    MalformedUrl,
    MissingColumn,
    PhishkitError,
    SchemaMismatch,
    TooFewGroups,
    VersionUnsupported,
)
from .features import FEATURE_NAMES, SCHEMA_VERSION, feature_matrix
from .gbdt import GbdtConfig
from .predictor import Predictor

INPUT_ERRORS = (
    OSError,
    MissingColumn,
    EmptyFile,
    MalformedRow,
    MalformedUrl,
    BadMagic,
    VersionUnsupported,
    ChecksumMismatch,
    SchemaMismatch,
    ValueError,
)
DEGENERACY_ERRORS = (TooFewGroups, DegenerateLabels, EmptyTraining)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write_json(obj, path) -> None:
    tmp = Path(path).with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")
    os.replace(tmp, path)


def _write_manifest(out_dir, command, args_snapshot, inputs, outputs, timings, seed):
    manifest = {
        "command": command,
        "seed": seed,
        "config": args_snapshot,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "timings_s": {k: round(v, 4) for k, v in timings.items()},
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    _atomic_write_json(manifest, Path(out_dir) / f"{command}_manifest.json")


class _Timer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def stage(self, name):
        return _Stage(self, name)


class _Stage:
    def __init__(self, timer, name):
        self.timer, self.name = timer, name

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.timer.timings[self.name] = time.perf_counter() - self.t0
        return False


# --- ingest ----------------------------------------------------------------

def cmd_ingest(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    timer = _Timer()

    with timer.stage("load"):
        phish, phish_stats = ds.load_phishtank(args.phishtank)
        benign, benign_stats = ds.load_tranco(args.tranco, limit=args.limit)
        records, merge_stats = ds.merge_sources(phish, benign)
    with timer.stage("features"):
        feats = feature_matrix([r.parsed for r in records])
    with timer.stage("encode"):
        seqs = encode_batch([r.parsed.normalized for r in records])
    with timer.stage("split"):
        assignment = ds.split(records, ratios=tuple(args.ratios), seed=args.seed)
        assignment.validate(records)
    with timer.stage("write"):
        ds.write_dataset_csv(records, out_dir / "dataset.csv")
        from .features import matrix_to_csv

        matrix_to_csv(feats, out_dir / "features.csv")
        ds.write_char_seqs(seqs, out_dir / "char_seqs.bin")
        ds.write_splits(assignment, args.seed, args.ratios, out_dir / "splits.json")

    n_phish = sum(r.label for r in records)
    print(f"total:        {len(records)}")
    print(f"phishing:     {n_phish}")
    print(f"valid:        {len(records) - n_phish}")
    print(
        f"skipped:      {phish_stats.malformed + benign_stats.malformed} malformed, "
        f"{phish_stats.duplicates + benign_stats.duplicates + merge_stats.duplicates} duplicate, "
        f"{merge_stats.label_conflicts} label conflicts"
    )
    print(
        f"splits:       train={len(assignment.train)} val={len(assignment.val)} "
        f"test={len(assignment.test)}"
    )
    _write_manifest(
        out_dir,
        "ingest",
        {"limit": args.limit, "ratios": list(args.ratios)},
        [args.phishtank, args.tranco],
        [out_dir / n for n in ("dataset.csv", "features.csv", "char_seqs.bin", "splits.json")],
        timer.timings,
        args.seed,
    )
    return 0


# --- train -----------------------------------------------------------------

def _load_data_dir(data_dir):
    data_dir = Path(data_dir)
    records = ds.read_dataset_csv(data_dir / "dataset.csv")
    from .features import matrix_from_csv

    feats = matrix_from_csv(data_dir / "features.csv")
    seqs = ds.read_char_seqs(data_dir / "char_seqs.bin")
    assignment = ds.read_splits(data_dir / "splits.json")
    labels = np.array([r.label for r in records], dtype=np.float64)
    if not (len(records) == feats.shape[0] == seqs.shape[0]):
        raise ValueError("data dir artifacts disagree on row count")
    return records, labels, feats, seqs, assignment


def cmd_train(args) -> int:
    data_dir = Path(args.data)
    timer = _Timer()
    records, labels, feats, seqs, assignment = _load_data_dir(data_dir)
    tr, va = assignment.train, assignment.val

    with timer.stage("cnn"):
        cnn_cfg = CnnConfig()
        train_cfg = TrainConfig(
            batch_size=args.batch_size, max_epochs=args.max_epochs, seed=args.seed
        )
        cnn_params, cnn_history = cnn_mod.train(
            seqs[tr], labels[tr], seqs[va], labels[va], train_cfg, cnn_cfg
        )
    with timer.stage("gbdt"):
        gbdt_cfg = GbdtConfig(seed=args.seed, max_estimators=args.max_estimators)
        gbdt_model = gbdt_mod.fit(feats[tr], labels[tr], feats[va], labels[va], gbdt_cfg)
    with timer.stage("calibrate"):
        val_logits = cnn_mod.predict_logits(cnn_params, seqs[va])
        val_raw = gbdt_mod.predict_raw(gbdt_model, feats[va])
        platt_cnn = fit_platt(val_logits, labels[va])
        platt_gbdt = fit_platt(val_raw, labels[va])
        p_cnn_val = apply_platt(platt_cnn, val_logits)
        p_gbdt_val = apply_platt(platt_gbdt, val_raw)
        weights, best_val_auc = grid_search_weight(p_cnn_val, p_gbdt_val, labels[va])

    fingerprint = _sha256(data_dir / "dataset.csv")
    bundle = ModelBundle(
        schema_version=SCHEMA_VERSION,
        feature_names=FEATURE_NAMES,
        vocab=VOCAB,
        cnn_config=cnn_cfg,
        cnn_params=cnn_params,
        gbdt_config=gbdt_cfg,
        gbdt_model=gbdt_model,
        platt_cnn=platt_cnn,
        platt_gbdt=platt_gbdt,
        weights=weights,
        threshold=args.threshold,
        metadata={
            "seed": args.seed,
            "dataset_fingerprint": fingerprint,
            "model_version": f"v{SCHEMA_VERSION}-seed{args.seed}-{fingerprint[:8]}",
            "trainer": f"phishkit {__version__}",
        },
    )
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with timer.stage("save"):
        save_bundle(bundle, out_path)
        _atomic_write_json(
            {
                "cnn": cnn_history,
                "gbdt": {
                    "train_loss": gbdt_model.train_loss_curve,
                    "val_auc": gbdt_model.val_auc_curve,
                    "best_round": gbdt_model.best_round,
                },
                "ensemble": {"w_cnn": weights.w_cnn, "val_auc": best_val_auc},
            },
            out_path.parent / "history.json",
        )

    print(f"cnn epochs:    {len(cnn_history)} (best val AUC "
          f"{max(h['val_auc'] for h in cnn_history):.5f})")
    print(f"gbdt rounds:   {gbdt_model.best_round}")
    print(f"weights:       w_cnn={weights.w_cnn:.2f} w_gbdt={weights.w_gbdt:.2f} "
          f"(val AUC {best_val_auc:.5f})")
    print(f"bundle:        {out_path}")
    _write_manifest(
        out_path.parent,
        "train",
        {
            "batch_size": args.batch_size,
            "max_epochs": args.max_epochs,
            "max_estimators": args.max_estimators,
            "threshold": args.threshold,
        },
        [data_dir / n for n in ("dataset.csv", "features.csv", "char_seqs.bin", "splits.json")],
        [out_path, out_path.parent / "history.json"],
        timer.timings,
        args.seed,
    )
    return 0


# --- eval ------------------------------------------------------------------

def _split_indices(assignment, name):
    try:
        return {"train": assignment.train, "val": assignment.val, "test": assignment.test}[name]
    except KeyError:
        raise ValueError(f"unknown split {name!r}") from None


def _model_probs(bundle: ModelBundle, seqs, feats):
    logits = cnn_mod.predict_logits(bundle.cnn_params, seqs)
    raw = gbdt_mod.predict_raw(bundle.gbdt_model, feats)
    p_cnn = apply_platt(bundle.platt_cnn, logits)
    p_gbdt = apply_platt(bundle.platt_gbdt, raw)
    return p_cnn, p_gbdt, combine(bundle.weights, p_cnn, p_gbdt)


def _jsonable(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    return x


def cmd_eval(args) -> int:
    timer = _Timer()
    bundle = load_bundle(args.bundle)
    records, labels, feats, seqs, assignment = _load_data_dir(args.data)
    idx = _split_indices(assignment, args.split)
    y = labels[idx]

    with timer.stage("score"):
        p_cnn, p_gbdt, p_ens = _model_probs(bundle, seqs[idx], feats[idx])
    with timer.stage("report"):
        threshold = bundle.threshold
        rows = {}
        for name, probs in (("ensemble", p_ens), ("cnn", p_cnn), ("gbdt", p_gbdt)):
            rep = metrics_mod.evaluate(probs, y, threshold, with_curves=False)
            rows[name] = rep.scalars()
            rows[name]["confusion"] = vars(rep.confusion)
        roc, pr, reliability, hists = metrics_mod.curves(p_ens, y)
        top10 = gbdt_mod.top_importance(bundle.gbdt_model, bundle.feature_names, k=10)

    out_dir = Path(args.out)
    curves_dir = out_dir / "curves"
    curves_dir.mkdir(parents=True, exist_ok=True)
    report = {
        "split": args.split,
        "n": len(idx),
        "threshold": threshold,
        "model_version": bundle.model_version,
        "models": rows,
        "top_features": [[n, v] for n, v in top10],
    }
    _atomic_write_json(report, out_dir / "report.json")

    with open(curves_dir / "roc.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["fpr", "tpr", "threshold"])
        w.writerows(roc)
    with open(curves_dir / "pr.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["recall", "precision", "threshold"])
        w.writerows(pr)
    with open(curves_dir / "reliability.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["bin", "lo", "hi", "count", "mean_predicted", "positive_rate"])
        for b in reliability:
            w.writerow(
                [b["bin"], b["lo"], b["hi"], b["count"],
                 _jsonable(b["mean_predicted"]), _jsonable(b["positive_rate"])]
            )
    with open(curves_dir / "histograms.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["class", "lo", "hi", "count"])
        for cls, bins in hists.items():
            for b in bins:
                w.writerow([cls, b["lo"], b["hi"], b["count"]])

    for name in ("ensemble", "cnn", "gbdt"):
        r = rows[name]
        print(
            f"{name:9s} acc={r['accuracy']:.5f} precision={r['precision']:.5f} "
            f"recall={r['recall']:.5f} f1={r['f1']:.5f} auc={r['roc_auc']:.5f}"
        )
    _write_manifest(
        out_dir,
        "eval",
        {"split": args.split, "threshold": threshold},
        [args.bundle],
        [out_dir / "report.json", curves_dir],
        timer.timings,
        bundle.metadata.get("seed", 0),
    )
    return 0


# --- predict / serve / inspect ---------------------------------------------

def cmd_predict(args) -> int:
    bundle = load_bundle(args.bundle)
    predictor = Predictor(bundle, threshold=args.threshold)
    detail = predictor.predict_detail(args.url)
    print(json.dumps(detail, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    bundle_path = args.bundle or os.environ.get("PHISH_BUNDLE")
    if not bundle_path:
        raise ValueError("no bundle: pass --bundle or set PHISH_BUNDLE")
    port = args.port if args.port is not None else int(os.environ.get("PHISH_PORT", "8080"))
    serve(
        bundle_path,
        host=args.host,
        port=port,
        threshold=args.threshold,
        cors_origins=tuple(args.cors_origin) if args.cors_origin else ("*",),
        ui_dir=args.ui_dir,
    )
    return 0


def cmd_inspect(args) -> int:
    print(bundle_manifest(load_bundle(args.bundle)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phishkit", description=__doc__)
    p.add_argument("--version", action="version", version=f"phishkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pi = sub.add_parser("ingest", help="build dataset artifacts from source CSVs")
    pi.add_argument("--phishtank", required=True, help="PhishTank-style CSV (url column)")
    pi.add_argument("--tranco", required=True, help="Tranco-style CSV (rank,domain)")
    pi.add_argument("--limit", type=int, default=50000, help="Tranco ranks to keep")
    pi.add_argument("--out", required=True, help="output directory")
    pi.add_argument("--seed", type=int, default=0)
    pi.add_argument(
        "--ratios",
        type=lambda s: [float(x) for x in s.split(",")],
        default=[0.70, 0.10, 0.20],
    )
    pi.set_defaults(func=cmd_ingest)

    pt = sub.add_parser("train", help="train CNN + GBDT and write a model bundle")
    pt.add_argument("--data", required=True, help="ingested data directory")
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--out", required=True, help="bundle output path (.phsh)")
    pt.add_argument("--batch-size", type=int, default=64)
    pt.add_argument("--max-epochs", type=int, default=6)
    pt.add_argument("--max-estimators", type=int, default=1000)
    pt.add_argument("--threshold", type=float, default=0.5)
    pt.set_defaults(func=cmd_train)

    pe = sub.add_parser("eval", help="evaluate a bundle on a split")
    pe.add_argument("--bundle", required=True)
    pe.add_argument("--data", required=True)
    pe.add_argument("--split", default="test", choices=["train", "val", "test"])
    pe.add_argument("--out", required=True, help="report output directory")
    pe.set_defaults(func=cmd_eval)

    pp = sub.add_parser("predict", help="score one URL")
    pp.add_argument("--bundle", required=True)
    pp.add_argument("--url", required=True)
    pp.add_argument("--threshold", type=float, default=None)
    pp.set_defaults(func=cmd_predict)

    ps = sub.add_parser("serve", help="run the HTTP prediction service")
    ps.add_argument("--bundle", default=None, help="bundle path (or PHISH_BUNDLE)")
    ps.add_argument("--host", default="127.0.0.1")
    ps.add_argument("--port", type=int, default=None, help="port (or PHISH_PORT; default 8080)")
    ps.add_argument("--threshold", type=float, default=None)
    ps.add_argument("--cors-origin", action="append", help="allowed origin (repeatable)")
    ps.add_argument("--ui-dir", default=None, help="static web UI directory for /ui")
    ps.set_defaults(func=cmd_serve)

    pn = sub.add_parser("inspect", help="print a bundle manifest")
    pn.add_argument("--bundle", required=True)
    pn.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DEGENERACY_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PhishkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
