import numpy as np
import pytest

from synth import write_source_csvs
from phishkit.cli import main as cli_main


@pytest.fixture(scope="session")
def mini_pipeline(tmp_path_factory):
    """A small but fully trained pipeline shared by bundle/service/cli tests."""
    root = tmp_path_factory.mktemp("mini")
    phish, tranco = write_source_csvs(root, n_phish=160, n_benign=160, seed=11)
    data_dir = root / "data"
    bundle_path = root / "model.phsh"
    report_dir = root / "report"
    assert cli_main([
        "ingest", "--phishtank", str(phish), "--tranco", str(tranco),
        "--out", str(data_dir), "--seed", "5",
    ]) == 0
    assert cli_main([
        "train", "--data", str(data_dir), "--seed", "5", "--out", str(bundle_path),
        "--max-epochs", "1", "--max-estimators", "40",
    ]) == 0
    return {
        "root": root,
        "phishtank": phish,
        "tranco": tranco,
        "data": data_dir,
        "bundle": bundle_path,
        "report": report_dir,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
