# The operator's path end to end: ingest -> train -> eval -> serve, then a
# couple of live requests against the running service.
#
# Run: python3 demos/04_pipeline_and_service.py       (~2 minutes on one core)

import json
import socket
import sys
import tempfile
import threading
import time
from pathlib import Path

import requests

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from synth import write_source_csvs  # the seeded test-corpus generator

from phishkit.cli import main as phishkit
from phishkit.service import create_app

work = Path(tempfile.mkdtemp(prefix="phishkit_demo_"))
print(f"workspace: {work}")

phish_csv, tranco_csv = write_source_csvs(work, n_phish=400, n_benign=400, seed=1)

print("\n$ phishkit ingest ...")
assert phishkit(["ingest", "--phishtank", str(phish_csv), "--tranco", str(tranco_csv),
                 "--out", str(work / "data"), "--seed", "1"]) == 0

print("\n$ phishkit train ...")
assert phishkit(["train", "--data", str(work / "data"), "--seed", "1",
                 "--out", str(work / "model.phsh"),
                 "--max-epochs", "2", "--max-estimators", "100"]) == 0

print("\n$ phishkit eval ...")
assert phishkit(["eval", "--bundle", str(work / "model.phsh"),
                 "--data", str(work / "data"), "--split", "test",
                 "--out", str(work / "report")]) == 0

print("\n$ phishkit inspect ...")
phishkit(["inspect", "--bundle", str(work / "model.phsh")])

# --- bring the service up on a free port and talk to it -----------------------
import uvicorn

with socket.socket() as s:
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
app = create_app(bundle_path=work / "model.phsh")
server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
threading.Thread(target=server.run, daemon=True).start()
while not server.started:
    time.sleep(0.05)

base = f"http://127.0.0.1:{port}"
print(f"\nservice up at {base}")
print("health:", requests.get(f"{base}/health").json())

for url in ("http://paypal-login-verify.evil7.tk/confirm?acct=9",
            "https://cedarwalnut3.com/"):
    r = requests.post(f"{base}/predict", json={"url": url}).json()
    print(f"\nPOST /predict {url}")
    print(json.dumps({k: r[k] for k in ("label", "probability", "p_cnn", "p_gbdt",
                                        "weights", "latency_ms")}, indent=2))

server.should_exit = True
print("\ndone; artifacts left in", work)
