# Evaluation deep dive: ROC / PR / reliability / probability histograms as
# plain tables, plus optional matplotlib rendering when available.
#
# Run: python3 demos/03_evaluation_curves.py [--plot out.png]

import sys

import numpy as np

from phishkit.metrics import curves, evaluate, roc_auc

rng = np.random.default_rng(7)

# synthetic classifier: well-separated but imperfect, slightly overconfident
n = 4000
labels = rng.integers(0, 2, size=n)
scores = labels * 1.8 + rng.normal(size=n)
probs = 1 / (1 + np.exp(-(1.6 * scores - 0.8)))

report = evaluate(probs, labels, threshold=0.5)
print(f"accuracy {report.accuracy:.4f}  precision {report.precision:.4f}  "
      f"recall {report.recall:.4f}  f1 {report.f1:.4f}  auc {report.roc_auc:.4f}")
print(f"confusion: tp={report.confusion.tp} fp={report.confusion.fp} "
      f"tn={report.confusion.tn} fn={report.confusion.fn}")

roc, pr, reliability, hists = curves(probs, labels)
print(f"\nROC sweep has {len(roc)} distinct thresholds; a few way-points:")
for i in np.linspace(0, len(roc) - 1, 7).astype(int):
    fpr, tpr, thr = roc[i]
    print(f"  threshold {thr:8.4f} -> fpr {fpr:.4f}, tpr {tpr:.4f}")

trapezoid = np.trapezoid([p[1] for p in roc], [p[0] for p in roc])
print(f"trapezoid area under those points: {trapezoid:.6f} "
      f"(rank AUC {roc_auc(probs, labels):.6f})")

print("\nreliability (10 equal-width bins):")
print(f"{'bin':>4s} {'count':>7s} {'mean pred':>10s} {'pos rate':>9s}")
for b in reliability:
    rate = "  -" if b["count"] == 0 else f"{b['positive_rate']:9.3f}"
    mean = "   -" if b["count"] == 0 else f"{b['mean_predicted']:10.3f}"
    print(f"{b['bin']:4d} {b['count']:7d} {mean} {rate}")

if "--plot" in sys.argv:
    out = sys.argv[sys.argv.index("--plot") + 1]
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 2, figsize=(10, 8))
    axes[0, 0].plot([p[0] for p in roc], [p[1] for p in roc])
    axes[0, 0].set_title("ROC")
    axes[0, 1].plot([p[0] for p in pr], [p[1] for p in pr])
    axes[0, 1].set_title("precision-recall")
    filled = [b for b in reliability if b["count"]]
    axes[1, 0].plot([b["mean_predicted"] for b in filled],
                    [b["positive_rate"] for b in filled], marker="o")
    axes[1, 0].plot([0, 1], [0, 1], ls="--", c="gray")
    axes[1, 0].set_title("reliability")
    for cls, color in (("phishing", "tab:red"), ("valid", "tab:green")):
        axes[1, 1].bar([b["lo"] for b in hists[cls]],
                       [b["count"] for b in hists[cls]],
                       width=0.05, alpha=0.6, color=color, label=cls, align="edge")
    axes[1, 1].set_title("probability histograms")
    axes[1, 1].legend()
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(f"\nwrote {out}")
