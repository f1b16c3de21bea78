# Train the full hybrid stack on a small synthetic corpus, entirely through
# the library API: char-CNN + GBDT -> Platt calibration -> weighted ensemble.
#
# Run: python3 demos/02_train_hybrid_model.py          (~1 minute on one core)

import numpy as np

from phishkit import encode_batch, feature_matrix, normalize_url
from phishkit.calibration import apply_platt, fit_platt
from phishkit.cnn import CnnConfig, TrainConfig, predict_logits, train
from phishkit.ensemble import combine, grid_search_weight
from phishkit.gbdt import GbdtConfig, fit, predict_raw
from phishkit.metrics import evaluate

rng = np.random.default_rng(0)

# --- a quick corpus: keyword-y suspicious hosts vs clean https domains ------
words = ["atlas", "cedar", "lumen", "quartz", "raven", "walnut", "zephyr", "indigo"]
kw = ["login", "verify", "secure", "bank", "update", "signin"]

urls, labels = [], []
for i in range(1200):
    if i % 2:
        u = (f"http://{rng.choice(kw)}-{rng.choice(words)}{rng.integers(99)}"
             f".evil{rng.integers(40)}.tk/{rng.choice(kw)}?id={rng.integers(10**6)}")
        labels.append(1.0)
    else:
        u = f"https://{rng.choice(words)}{rng.choice(words)}{rng.integers(99)}.com/"
        labels.append(0.0)
    urls.append(u)

labels = np.array(labels)
parsed = [normalize_url(u) for u in urls]
seqs = encode_batch([p.normalized for p in parsed], seq_len=80)
feats = feature_matrix(parsed)

n = len(urls)
idx = rng.permutation(n)
tr, va, te = idx[: int(0.7 * n)], idx[int(0.7 * n): int(0.8 * n)], idx[int(0.8 * n):]

# --- character CNN (a slimmed config keeps the demo quick) -------------------
cnn_cfg = CnnConfig(embed_dim=16, conv_filters=(8, 16, 32), kernel_sizes=(3, 4, 5),
                    dense_hidden=16, seq_len=80)
params, history = train(seqs[tr], labels[tr], seqs[va], labels[va],
                        TrainConfig(batch_size=64, max_epochs=4, seed=0), cnn_cfg)
print("CNN epochs:")
for h in history:
    print(f"  epoch {h['epoch']}: loss {h['train_loss']:.4f} "
          f"train AUC {h['train_auc']:.4f} val AUC {h['val_auc']:.4f}")

# --- GBDT on the engineered features ----------------------------------------
model = fit(feats[tr], labels[tr], feats[va], labels[va],
            GbdtConfig(max_estimators=150, min_samples_leaf=10))
print(f"GBDT kept {model.best_round} rounds")

# --- calibrate both on validation, then grid-search the blend ----------------
val_logits = predict_logits(params, seqs[va])
val_raw = predict_raw(model, feats[va])
platt_cnn = fit_platt(val_logits, labels[va])
platt_gbdt = fit_platt(val_raw, labels[va])
weights, val_auc = grid_search_weight(
    apply_platt(platt_cnn, val_logits), apply_platt(platt_gbdt, val_raw), labels[va]
)
print(f"ensemble weights: w_cnn={weights.w_cnn:.2f} w_gbdt={weights.w_gbdt:.2f} "
      f"(val AUC {val_auc:.5f})")

# --- held-out test report -----------------------------------------------------
p_cnn = apply_platt(platt_cnn, predict_logits(params, seqs[te]))
p_gbdt = apply_platt(platt_gbdt, predict_raw(model, feats[te]))
p_ens = combine(weights, p_cnn, p_gbdt)

print("\ntest-set comparison:")
print(f"{'model':10s} {'acc':>8s} {'prec':>8s} {'recall':>8s} {'f1':>8s} {'auc':>8s}")
for name, probs in (("ensemble", p_ens), ("char-cnn", p_cnn), ("gbdt", p_gbdt)):
    r = evaluate(probs, labels[te], threshold=0.5, with_curves=False)
    print(f"{name:10s} {r.accuracy:8.5f} {r.precision:8.5f} "
          f"{r.recall:8.5f} {r.f1:8.5f} {r.roc_auc:8.5f}")
