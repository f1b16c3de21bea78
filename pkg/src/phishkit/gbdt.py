"""Leaf-wise gradient-boosted trees on the engineered feature matrix.

Logistic-loss boosting with exact greedy split search: per round the
gradients are g = p - y and hessians h = p(1 - p); one tree is grown by
repeatedly splitting the highest-gain leaf until the leaf budget is hit
or no split has positive gain.  Split gain is the usual regularized form
Gl^2/(Hl+lam) + Gr^2/(Hr+lam) - G^2/(H+lam) with lam = 1, leaf values are
-G/(H+lam), and NaN feature values are routed to whichever side gains
more (the direction is stored per split; left when a node has no missing
values).  Candidate splits are midpoints between consecutive distinct
sorted values; ties break by lowest feature index, then lowest threshold,
then missing-direction left.  Training is deterministic: no row or
feature subsampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateLabels,
    DegenerateValidation,
    EmptyTraining,
    SchemaMismatch,
)
from .metrics import roc_auc

LAMBDA = 1.0


@dataclass(frozen=True)
class GbdtConfig:
    learning_rate: float = 0.05
    max_estimators: int = 1000
    num_leaves: int = 64
    min_samples_leaf: int = 20
    early_stop_rounds: int = 50
    seed: int = 0  # reserved; training uses no randomness


@dataclass
class Tree:
    """Flat node arrays; feature < 0 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    miss_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf value per row, honoring stored missing-value directions."""
        idx = np.zeros(x.shape[0], dtype=np.int32)
        while True:
            feat = self.feature[idx]
            active = feat >= 0
            if not active.any():
                return self.value[idx]
            rows = np.nonzero(active)[0]
            f = feat[rows]
            node = idx[rows]
            v = x[rows, f]
            go_left = np.where(
                np.isnan(v), self.miss_left[node].astype(bool), v <= self.threshold[node]
            )
            idx[rows] = np.where(go_left, self.left[node], self.right[node])

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))


@dataclass
class GbdtModel:
    base_score: float
    learning_rate: float
    n_features: int
    trees: list[Tree] = field(default_factory=list)
    feature_importance_: np.ndarray | None = None
    train_loss_curve: list[float] = field(default_factory=list)
    val_auc_curve: list[float] = field(default_factory=list)
    best_round: int = 0


@dataclass
class _Split:
    gain: float
    feature: int
    threshold: float
    miss_left: bool
    left_rows: np.ndarray
    right_rows: np.ndarray

    def key(self):
        # ordering: gain desc, feature asc, threshold asc, left before right
        return (-self.gain, self.feature, self.threshold, not self.miss_left)


def _best_split_for_node(x, g, h, rows, min_leaf: int) -> _Split | None:
    """Exact greedy scan over every (feature, midpoint, direction) candidate."""
    g_node, h_node = g[rows], h[rows]
    g_tot, h_tot = g_node.sum(), h_node.sum()
    n = len(rows)
    parent_score = g_tot * g_tot / (h_tot + LAMBDA)
    best: _Split | None = None

    for f in range(x.shape[1]):
        col = x[rows, f]
        miss = np.isnan(col)
        nm = ~miss
        vals = col[nm]
        if len(vals) < 2:
            continue
        order = np.argsort(vals, kind="mergesort")
        sv = vals[order]
        boundary = np.nonzero(sv[:-1] != sv[1:])[0]
        if len(boundary) == 0:
            continue
        sg = np.cumsum(g_node[nm][order])
        sh = np.cumsum(h_node[nm][order])
        g_miss = g_node[miss].sum()
        h_miss = h_node[miss].sum()
        n_miss = int(miss.sum())
        thresholds = 0.5 * (sv[boundary] + sv[boundary + 1])
        nl_nm = boundary + 1
        gl_nm = sg[boundary]
        hl_nm = sh[boundary]

        for miss_left in (True, False):
            gl = gl_nm + (g_miss if miss_left else 0.0)
            hl = hl_nm + (h_miss if miss_left else 0.0)
            nl = nl_nm + (n_miss if miss_left else 0)
            gr = g_tot - gl
            hr = h_tot - hl
            nr = n - nl
            gain = gl * gl / (hl + LAMBDA) + gr * gr / (hr + LAMBDA) - parent_score
            gain[(nl < min_leaf) | (nr < min_leaf)] = -np.inf
            i = int(np.argmax(gain))  # first max = lowest threshold
            if gain[i] <= 0:
                continue
            go_left = nm.copy()
            go_left[nm] = col[nm] <= thresholds[i]
            if miss_left:
                go_left |= miss
            # recompute the winning candidate's gain by direct masked sums:
            # identical partitions on different features then yield bit-equal
            # gains, so ties break on (feature, threshold, direction) instead
            # of summation-order noise
            gle, hle = g_node[go_left].sum(), h_node[go_left].sum()
            gre, hre = g_node[~go_left].sum(), h_node[~go_left].sum()
            exact = gle * gle / (hle + LAMBDA) + gre * gre / (hre + LAMBDA) - parent_score
            if exact <= 0:
                continue
            cand = _Split(
                gain=float(exact),
                feature=f,
                threshold=float(thresholds[i]),
                miss_left=miss_left,
                left_rows=rows[go_left],
                right_rows=rows[~go_left],
            )
            if best is None or cand.key() < best.key():
                best = cand
            if n_miss == 0:
                break  # no missing values: both directions identical, keep left
    return best


class _Leaf:
    __slots__ = ("rows", "split", "node_id", "order")

    def __init__(self, rows, split, node_id, order):
        self.rows = rows
        self.split = split
        self.node_id = node_id
        self.order = order


def _grow_tree(x, g, h, cfg: GbdtConfig):
    """One leaf-wise tree. Returns (Tree, per-row values, [(feature, gain)])."""
    n = x.shape[0]
    feature = [np.int32(-1)]
    threshold = [0.0]
    miss_left = [np.uint8(0)]
    left = [np.int32(-1)]
    right = [np.int32(-1)]
    all_rows = np.arange(n)

    leaves = [_Leaf(all_rows, _best_split_for_node(x, g, h, all_rows, cfg.min_samples_leaf), 0, 0)]
    split_log: list[tuple[int, float]] = []
    order_counter = 1
    while len(leaves) < cfg.num_leaves:
        splittable = [lf for lf in leaves if lf.split is not None]
        if not splittable:
            break
        # highest gain wins; ties by comparator key then leaf creation order
        target = min(splittable, key=lambda lf: (lf.split.key(), lf.order))
        sp = target.split
        nid = target.node_id
        feature[nid] = np.int32(sp.feature)
        threshold[nid] = sp.threshold
        miss_left[nid] = np.uint8(sp.miss_left)
        split_log.append((sp.feature, sp.gain))

        children = []
        for rows in (sp.left_rows, sp.right_rows):
            feature.append(np.int32(-1))
            threshold.append(0.0)
            miss_left.append(np.uint8(0))
            left.append(np.int32(-1))
            right.append(np.int32(-1))
            children.append(_Leaf(rows, None, len(feature) - 1, order_counter))
            order_counter += 1
        left[nid] = np.int32(children[0].node_id)
        right[nid] = np.int32(children[1].node_id)
        leaves.remove(target)
        leaves.extend(children)
        if len(leaves) < cfg.num_leaves:  # scans are wasted once the tree is full
            for child in children:
                child.split = _best_split_for_node(x, g, h, child.rows, cfg.min_samples_leaf)

    value = np.zeros(len(feature))
    row_values = np.empty(n)
    for lf in leaves:
        g_sum = g[lf.rows].sum()
        h_sum = h[lf.rows].sum()
        v = -g_sum / (h_sum + LAMBDA)
        value[lf.node_id] = v
        row_values[lf.rows] = v

    tree = Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        miss_left=np.array(miss_left, dtype=np.uint8),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=value,
    )
    return tree, row_values, split_log


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logloss(raw, y):
    return float(np.mean(np.maximum(raw, 0) - raw * y + np.log1p(np.exp(-np.abs(raw)))))


def fit(x, y, x_val, y_val, cfg: GbdtConfig | None = None) -> GbdtModel:
    """Boost with validation-AUC early stopping; returns the best-round model."""
    cfg = cfg or GbdtConfig()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x_val = np.asarray(x_val, dtype=np.float64)
    y_val = np.asarray(y_val, dtype=np.float64)
    if x.shape[0] == 0:
        raise EmptyTraining("empty training set")
    if len(np.unique(y_val)) < 2:
        raise DegenerateValidation("validation split holds a single class")
    if len(np.unique(y)) < 2:
        raise DegenerateLabels("training split holds a single class")

    prior = float(np.mean(y))
    base = float(np.log(prior / (1.0 - prior)))
    model = GbdtModel(base_score=base, learning_rate=cfg.learning_rate, n_features=x.shape[1])

    raw = np.full(x.shape[0], base)
    raw_val = np.full(x_val.shape[0], base)
    best_auc = -np.inf
    rounds_flat = 0
    split_logs: list[list[tuple[int, float]]] = []

    for _ in range(cfg.max_estimators):
        p = _sigmoid(raw)
        g = p - y
        h = p * (1.0 - p)
        tree, row_values, split_log = _grow_tree(x, g, h, cfg)
        if not split_log:
            break  # root unsplittable; further trees would be constants
        model.trees.append(tree)
        split_logs.append(split_log)
        raw += cfg.learning_rate * row_values
        raw_val += cfg.learning_rate * tree.apply(x_val)
        model.train_loss_curve.append(_logloss(raw, y))
        auc = roc_auc(raw_val, y_val)
        model.val_auc_curve.append(auc)
        if auc > best_auc:
            best_auc = auc
            model.best_round = len(model.trees)
            rounds_flat = 0
        else:
            rounds_flat += 1
            if rounds_flat >= cfg.early_stop_rounds:
                break

    model.trees = model.trees[: model.best_round]
    importance = np.zeros(x.shape[1])
    for log in split_logs[: model.best_round]:
        for f, gain in log:
            importance[f] += gain
    total = importance.sum()
    model.feature_importance_ = importance / total if total > 0 else importance
    return model


def predict_raw(model: GbdtModel, x) -> np.ndarray:
    """Log-odds scores: base + lr * sum of per-tree leaf values."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise SchemaMismatch(
            f"expected {model.n_features} feature columns, got {x.shape}"
        )
    out = np.full(x.shape[0], model.base_score)
    for tree in model.trees:
        out += model.learning_rate * tree.apply(x)
    return out


def predict_proba(model: GbdtModel, x) -> np.ndarray:
    return _sigmoid(predict_raw(model, x))


def feature_importance(model: GbdtModel) -> np.ndarray:
    """Normalized total split gain per feature (zeros when no splits)."""
    return model.feature_importance_.copy()


def top_importance(model: GbdtModel, names, k: int = 10) -> list[tuple[str, float]]:
    """The k highest-importance (name, score) pairs, stably ordered."""
    imp = model.feature_importance_
    order = np.argsort(-imp, kind="mergesort")[:k]
    return [(names[i], float(imp[i])) for i in order]
