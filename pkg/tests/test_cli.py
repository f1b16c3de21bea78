import json

from phishkit.cli import main
from synth import write_source_csvs


def test_ingest_writes_all_artifacts(mini_pipeline, capsys):
    data = mini_pipeline["data"]
    for name in ("dataset.csv", "features.csv", "char_seqs.bin", "splits.json",
                 "ingest_manifest.json"):
        assert (data / name).exists(), name
    manifest = json.loads((data / "ingest_manifest.json").read_text())
    assert manifest["command"] == "ingest"
    assert manifest["seed"] == 5
    assert len(manifest["inputs"]) == 2
    assert "timings_s" in manifest
    # no normalized URL appears twice in the combined dataset
    urls = [line.split(",")[0] for line in (data / "dataset.csv").read_text().splitlines()[1:]]
    assert len(urls) == len(set(urls))


def test_ingest_missing_file_exit_2(tmp_path, capsys):
    rc = main([
        "ingest", "--phishtank", str(tmp_path / "nope.csv"),
        "--tranco", str(tmp_path / "nope2.csv"), "--out", str(tmp_path / "o"),
    ])
    assert rc == 2


def test_ingest_missing_column_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,link\n1,http://a.com\n")
    tranco = tmp_path / "tranco.csv"
    tranco.write_text("1,a.com\n")
    rc = main([
        "ingest", "--phishtank", str(bad), "--tranco", str(tranco),
        "--out", str(tmp_path / "o"),
    ])
    assert rc == 2
    assert "url" in capsys.readouterr().err


def test_ingest_prints_class_counts(mini_pipeline, tmp_path, capsys):
    phish, tranco = write_source_csvs(tmp_path, n_phish=30, n_benign=30, seed=2)
    rc = main([
        "ingest", "--phishtank", str(phish), "--tranco", str(tranco),
        "--out", str(tmp_path / "data"), "--seed", "1",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "phishing:     30" in out
    assert "valid:        30" in out


def test_train_outputs(mini_pipeline):
    root = mini_pipeline["root"]
    assert mini_pipeline["bundle"].exists()
    history = json.loads((root / "history.json").read_text())
    assert "cnn" in history and "gbdt" in history and "ensemble" in history
    assert history["cnn"][0].keys() >= {"epoch", "train_loss", "train_auc", "val_auc"}
    manifest = json.loads((root / "train_manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["seed"] == 5


def test_train_degenerate_split_exit_3(tmp_path, mini_pipeline):
    import shutil

    data = tmp_path / "data"
    shutil.copytree(mini_pipeline["data"], data)
    splits = json.loads((data / "splits.json").read_text())
    labels = [
        int(line.split(",")[1])
        for line in (data / "dataset.csv").read_text().splitlines()[1:]
    ]
    splits["val"] = [i for i in range(len(labels)) if labels[i] == 1][:10]
    taken = set(splits["val"])
    splits["train"] = [i for i in range(len(labels)) if i not in taken and i not in set(splits["test"])]
    (data / "splits.json").write_text(json.dumps(splits))
    rc = main(["train", "--data", str(data), "--seed", "1", "--out", str(tmp_path / "m.phsh"),
               "--max-epochs", "1", "--max-estimators", "5"])
    assert rc == 3


def test_eval_report_shape(mini_pipeline, tmp_path, capsys):
    out = tmp_path / "report"
    rc = main([
        "eval", "--bundle", str(mini_pipeline["bundle"]),
        "--data", str(mini_pipeline["data"]), "--split", "test", "--out", str(out),
    ])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert set(report["models"]) == {"ensemble", "cnn", "gbdt"}
    for row in report["models"].values():
        assert {"accuracy", "precision", "recall", "f1", "roc_auc"} <= set(row)
    assert len(report["top_features"]) == 10
    for name in ("roc.csv", "pr.csv", "reliability.csv", "histograms.csv"):
        assert (out / "curves" / name).exists()
    # ensemble val AUC >= individual val AUCs (grid endpoint property)
    val = tmp_path / "val_report"
    rc = main([
        "eval", "--bundle", str(mini_pipeline["bundle"]),
        "--data", str(mini_pipeline["data"]), "--split", "val", "--out", str(val),
    ])
    assert rc == 0
    val_report = json.loads((val / "report.json").read_text())
    ens = val_report["models"]["ensemble"]["roc_auc"]
    assert ens >= val_report["models"]["cnn"]["roc_auc"] - 1e-12
    assert ens >= val_report["models"]["gbdt"]["roc_auc"] - 1e-12


def test_eval_rerun_byte_identical(mini_pipeline, tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        rc = main([
            "eval", "--bundle", str(mini_pipeline["bundle"]),
            "--data", str(mini_pipeline["data"]), "--split", "test", "--out", str(out),
        ])
        assert rc == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    for name in ("roc.csv", "pr.csv", "reliability.csv", "histograms.csv"):
        assert (a / "curves" / name).read_bytes() == (b / "curves" / name).read_bytes()


def test_predict_malformed_exit_2(mini_pipeline, capsys):
    rc = main(["predict", "--bundle", str(mini_pipeline["bundle"]), "--url", "ftp://x"])
    assert rc == 2


def test_predict_threshold_override(mini_pipeline, capsys):
    url = "http://paypal-login-verify.evil.tk/bank"
    main(["predict", "--bundle", str(mini_pipeline["bundle"]), "--url", url])
    base = json.loads(capsys.readouterr().out)
    main(["predict", "--bundle", str(mini_pipeline["bundle"]), "--url", url,
          "--threshold", "0.99"])
    strict = json.loads(capsys.readouterr().out)
    assert base["probability"] == strict["probability"]
    assert strict["threshold"] == 0.99
    if base["probability"] < 0.99:
        assert strict["label"] == "valid"


def test_inspect_exit_codes(mini_pipeline, tmp_path, capsys):
    assert main(["inspect", "--bundle", str(mini_pipeline["bundle"])]) == 0
    assert "model bundle" in capsys.readouterr().out
    junk = tmp_path / "junk.phsh"
    junk.write_bytes(b"not a bundle at all")
    assert main(["inspect", "--bundle", str(junk)]) == 2
