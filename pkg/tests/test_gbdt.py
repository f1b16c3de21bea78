import numpy as np
import pytest

from phishkit.errors import (
    DegenerateLabels,
    DegenerateValidation,
    EmptyTraining,
    SchemaMismatch,
)
from phishkit.gbdt import (
    LAMBDA,
    GbdtConfig,
    GbdtModel,
    Tree,
    _best_split_for_node,
    feature_importance,
    fit,
    predict_proba,
    predict_raw,
    top_importance,
)
from phishkit.metrics import roc_auc


def brute_force_split(x, g, h, min_leaf):
    """Exhaustive (feature, midpoint, direction) search, highest gain first;
    ties by lowest feature, lowest threshold, then missing-left."""
    n, m = x.shape
    g_tot, h_tot = g.sum(), h.sum()
    parent = g_tot * g_tot / (h_tot + LAMBDA)
    best = None
    for f in range(m):
        col = x[:, f]
        miss = np.isnan(col)
        vals = np.unique(col[~miss])
        for i in range(len(vals) - 1):
            thr = 0.5 * (vals[i] + vals[i + 1])
            for miss_left in (True, False):
                go_left = np.where(miss, miss_left, col <= thr)
                nl = int(go_left.sum())
                if nl < min_leaf or n - nl < min_leaf:
                    continue
                gl, hl = g[go_left].sum(), h[go_left].sum()
                gr, hr = g[~go_left].sum(), h[~go_left].sum()
                gain = gl * gl / (hl + LAMBDA) + gr * gr / (hr + LAMBDA) - parent
                if gain <= 0:
                    continue
                key = (-gain, f, thr, not miss_left)
                if best is None or key < best[0]:
                    best = (key, f, thr, miss_left)
    return best


def _stump() -> GbdtModel:
    """feature 0 <= 5 -> -1 else +2, lr 0.05, base 0."""
    tree = Tree(
        feature=np.array([0, -1, -1], dtype=np.int32),
        threshold=np.array([5.0, 0.0, 0.0]),
        miss_left=np.array([0, 0, 0], dtype=np.uint8),
        left=np.array([1, -1, -1], dtype=np.int32),
        right=np.array([2, -1, -1], dtype=np.int32),
        value=np.array([0.0, -1.0, 2.0]),
    )
    model = GbdtModel(base_score=0.0, learning_rate=0.05, n_features=36)
    model.trees.append(tree)
    model.feature_importance_ = np.zeros(36)
    return model


def _row(v0: float) -> np.ndarray:
    row = np.zeros((1, 36))
    row[0, 0] = v0
    return row


# --- split search vs oracle ---------------------------------------------------

def test_split_matches_bruteforce_on_20_datasets():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        x = rng.normal(size=(10, 36))
        x[rng.random((10, 36)) < 0.15] = np.nan
        g = rng.normal(size=10)
        h = rng.uniform(0.05, 0.3, size=10)
        mine = _best_split_for_node(x, g, h, np.arange(10), 1)
        want = brute_force_split(x, g, h, 1)
        if want is None:
            assert mine is None
            continue
        _, f, thr, miss_left = want
        assert mine.feature == f
        assert mine.threshold == pytest.approx(thr, abs=1e-12)
        assert mine.miss_left == miss_left


def test_split_matches_bruteforce_at_fifty_rows():
    rng = np.random.default_rng(77)
    for _ in range(5):
        x = rng.normal(size=(50, 36))
        x[rng.random((50, 36)) < 0.1] = np.nan
        g = rng.normal(size=50)
        h = rng.uniform(0.05, 0.3, size=50)
        mine = _best_split_for_node(x, g, h, np.arange(50), 5)
        want = brute_force_split(x, g, h, 5)
        _, f, thr, miss_left = want
        assert (mine.feature, mine.miss_left) == (f, miss_left)
        assert mine.threshold == pytest.approx(thr, abs=1e-12)


def test_one_round_stump_matches_oracle():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(10, 36))
    y = (rng.random(10) > 0.5).astype(float)
    y[:2] = [0, 1]  # both classes
    xv, yv = x.copy(), y.copy()
    cfg = GbdtConfig(num_leaves=2, min_samples_leaf=1, max_estimators=1)
    model = fit(x, y, xv, yv, cfg)
    p = 1.0 / (1.0 + np.exp(-model.base_score))
    g, h = p - y, np.full(10, p * (1 - p))
    _, f, thr, miss_left = brute_force_split(x, g, h, 1)
    tree = model.trees[0]
    assert tree.feature[0] == f
    assert tree.threshold[0] == pytest.approx(thr, abs=1e-12)
    assert bool(tree.miss_left[0]) == miss_left


# --- prediction arithmetic ------------------------------------------------------

def test_zero_tree_model_predicts_base():
    model = GbdtModel(base_score=0.3, learning_rate=0.05, n_features=36)
    model.feature_importance_ = np.zeros(36)
    out = predict_raw(model, np.zeros((4, 36)))
    np.testing.assert_allclose(out, 0.3)


def test_stump_arithmetic():
    model = _stump()
    assert predict_raw(model, _row(3.0))[0] == pytest.approx(-0.05)
    assert predict_raw(model, _row(7.0))[0] == pytest.approx(0.10)


def test_stump_missing_routing():
    model = _stump()  # miss_left stored False -> missing goes right
    assert predict_raw(model, _row(np.nan))[0] == pytest.approx(0.10)
    model.trees[0].miss_left[0] = 1
    assert predict_raw(model, _row(np.nan))[0] == pytest.approx(-0.05)


def test_predict_proba_is_sigmoid_and_monotone():
    model = _stump()
    raw = predict_raw(model, np.vstack([_row(3.0), _row(7.0)]))
    probs = predict_proba(model, np.vstack([_row(3.0), _row(7.0)]))
    np.testing.assert_allclose(probs, 1 / (1 + np.exp(-raw)))
    assert (raw[0] < raw[1]) == (probs[0] < probs[1])


def test_proba_at_zero_raw():
    model = GbdtModel(base_score=0.0, learning_rate=0.05, n_features=36)
    model.feature_importance_ = np.zeros(36)
    assert predict_proba(model, np.zeros((1, 36)))[0] == 0.5


def test_empty_model_reproduces_train_prior():
    rng = np.random.default_rng(0)
    y = (rng.random(200) < 0.25).astype(float)
    prior = y.mean()
    model = GbdtModel(
        base_score=float(np.log(prior / (1 - prior))), learning_rate=0.05, n_features=36
    )
    model.feature_importance_ = np.zeros(36)
    assert predict_proba(model, np.zeros((1, 36)))[0] == pytest.approx(prior, abs=1e-12)


def test_schema_mismatch():
    model = _stump()
    with pytest.raises(SchemaMismatch):
        predict_raw(model, np.zeros((2, 5)))


# --- training behavior -----------------------------------------------------------

def _make_problem(n, seed, n_features=36, informative=5):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, n_features))
    logit = 2.0 * x[:, informative] + 0.5 * x[:, 2]
    y = (rng.random(n) < 1 / (1 + np.exp(-logit))).astype(float)
    return x, y


def test_training_loss_non_increasing_50_rounds():
    x, y = _make_problem(500, seed=1)
    xv, yv = _make_problem(200, seed=2)
    cfg = GbdtConfig(min_samples_leaf=5, max_estimators=50, early_stop_rounds=50)
    model = fit(x, y, xv, yv, cfg)
    losses = model.train_loss_curve
    assert len(losses) >= 2
    assert all(losses[i + 1] <= losses[i] + 1e-12 for i in range(len(losses) - 1))


def test_separable_feature_reaches_auc_1_within_20_rounds():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(300, 36))
    y = (x[:, 11] > 0).astype(float)
    xv = rng.normal(size=(100, 36))
    yv = (xv[:, 11] > 0).astype(float)
    model = fit(x, y, xv, yv, GbdtConfig(min_samples_leaf=5, max_estimators=20))
    assert max(model.val_auc_curve) == 1.0
    assert roc_auc(predict_raw(model, xv), yv) == 1.0


def _leaf_ids(tree: Tree, x: np.ndarray) -> np.ndarray:
    """Independent per-row traversal returning leaf node ids."""
    ids = []
    for row in x:
        node = 0
        while tree.feature[node] >= 0:
            v = row[tree.feature[node]]
            go_left = bool(tree.miss_left[node]) if np.isnan(v) else v <= tree.threshold[node]
            node = tree.left[node] if go_left else tree.right[node]
        ids.append(node)
    return np.array(ids)


def test_leaf_budget_and_min_samples():
    x, y = _make_problem(400, seed=4)
    xv, yv = _make_problem(150, seed=5)
    cfg = GbdtConfig(num_leaves=8, min_samples_leaf=25, max_estimators=10)
    model = fit(x, y, xv, yv, cfg)
    assert model.trees
    for tree in model.trees:
        assert tree.n_leaves <= 8
        ids = _leaf_ids(tree, x)
        reached, counts = np.unique(ids, return_counts=True)
        assert (counts >= 25).all()
        # every leaf is populated by training rows
        assert set(reached) == set(np.nonzero(tree.feature < 0)[0])


def test_apply_matches_independent_traversal():
    x, y = _make_problem(250, seed=14)
    x[np.random.default_rng(15).random(x.shape) < 0.1] = np.nan
    xv, yv = _make_problem(100, seed=16)
    model = fit(x, y, xv, yv, GbdtConfig(min_samples_leaf=10, max_estimators=5))
    probe = x[:60]
    for tree in model.trees:
        np.testing.assert_array_equal(tree.apply(probe), tree.value[_leaf_ids(tree, probe)])


def test_determinism_identical_models():
    x, y = _make_problem(300, seed=6)
    xv, yv = _make_problem(120, seed=7)
    cfg = GbdtConfig(min_samples_leaf=5, max_estimators=15)
    m1 = fit(x, y, xv, yv, cfg)
    m2 = fit(x, y, xv, yv, cfg)
    assert len(m1.trees) == len(m2.trees)
    for t1, t2 in zip(m1.trees, m2.trees):
        np.testing.assert_array_equal(t1.feature, t2.feature)
        np.testing.assert_array_equal(t1.threshold, t2.threshold)
        np.testing.assert_array_equal(t1.value, t2.value)
    np.testing.assert_array_equal(m1.feature_importance_, m2.feature_importance_)


def test_early_stop_truncates_to_best_round():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(200, 36))
    y = (x[:, 0] > 0).astype(float)
    xv = rng.normal(size=(80, 36))
    yv = (xv[:, 0] > 0).astype(float)
    cfg = GbdtConfig(min_samples_leaf=5, max_estimators=200, early_stop_rounds=10)
    model = fit(x, y, xv, yv, cfg)
    assert len(model.trees) == model.best_round
    assert len(model.val_auc_curve) <= model.best_round + 10


# --- degenerate guards ------------------------------------------------------------

def test_single_class_val_raises():
    x = np.random.default_rng(0).normal(size=(40, 36))
    y = np.ones(40)
    y[:10] = 0
    with pytest.raises(DegenerateValidation):
        fit(x, y, x, np.ones(40), GbdtConfig())


def test_all_ones_is_degenerate():
    x = np.random.default_rng(0).normal(size=(40, 36))
    with pytest.raises(DegenerateLabels):
        fit(x, np.ones(40), x, np.ones(40), GbdtConfig())


def test_empty_training():
    with pytest.raises(EmptyTraining):
        fit(np.zeros((0, 36)), np.zeros(0), np.zeros((2, 36)), np.array([0.0, 1.0]), GbdtConfig())


# --- importance --------------------------------------------------------------------

def test_zero_tree_importance_all_zero():
    model = GbdtModel(base_score=0.0, learning_rate=0.05, n_features=36)
    model.feature_importance_ = np.zeros(36)
    assert feature_importance(model).sum() == 0


def test_importance_concentrates_on_informative_feature():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(400, 36))
    entropy_host_idx = 19
    y = (x[:, entropy_host_idx] > 0).astype(float)
    xv = rng.normal(size=(150, 36))
    yv = (xv[:, entropy_host_idx] > 0).astype(float)
    model = fit(x, y, xv, yv, GbdtConfig(min_samples_leaf=5, max_estimators=30))
    imp = feature_importance(model)
    assert imp.argmax() == entropy_host_idx
    assert imp.sum() == pytest.approx(1.0, abs=1e-9)
    assert (imp >= 0).all()


def test_top_importance_listing():
    model = _stump()
    model.feature_importance_ = np.zeros(36)
    model.feature_importance_[0] = 1.0
    names = [f"f{i}" for i in range(36)]
    top = top_importance(model, names, k=3)
    assert top[0] == ("f0", 1.0)
    assert len(top) == 3
