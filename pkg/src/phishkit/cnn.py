"""Character-level CNN with hand-written backprop and Adam training.

The network is embedding -> three valid 1D convolutions with ReLU ->
global max pooling over time -> dense ReLU -> dropout (training only,
inverted scaling) -> scalar logit.  All math is float64 numpy; the heavy
convolutions are lowered to BLAS matmuls over sliding windows.  Training
is single-threaded and fully determined by the run seed: weight init,
epoch shuffling, and dropout masks each draw from their own generator
spawned from that seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateValidation, ShapeMismatch
from .metrics import roc_auc


@dataclass(frozen=True)
class CnnConfig:
    embed_dim: int = 128
    conv_filters: tuple[int, int, int] = (64, 128, 256)
    kernel_sizes: tuple[int, int, int] = (3, 4, 5)
    dense_hidden: int = 128
    dropout_rate: float = 0.5
    seq_len: int = 200
    vocab_size: int = 72

    def __post_init__(self):
        if len(self.conv_filters) != 3 or len(self.kernel_sizes) != 3:
            raise ValueError("exactly three convolution stages expected")
        remaining = self.seq_len
        for k in self.kernel_sizes:
            remaining -= k - 1
        if remaining < 1:
            raise ValueError("kernels too wide for seq_len")


@dataclass
class TrainConfig:
    batch_size: int = 64
    max_epochs: int = 6
    patience: int = 1
    min_delta: float = 1e-5
    seed: int = 0


class CnnParams:
    """Named parameter tensors; iteration order is the serialization order."""

    def __init__(self, tensors: dict[str, np.ndarray], cfg: CnnConfig):
        self.tensors = tensors
        self.cfg = cfg

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def names(self) -> list[str]:
        return list(self.tensors.keys())

    def copy(self) -> "CnnParams":
        return CnnParams({k: v.copy() for k, v in self.tensors.items()}, self.cfg)

    def zeros_like(self) -> "CnnParams":
        return CnnParams({k: np.zeros_like(v) for k, v in self.tensors.items()}, self.cfg)


def _glorot(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    if len(shape) == 1:
        fan_in, fan_out = shape[0], 1
    else:
        fan_in = int(np.prod(shape[:-1]))
        fan_out = shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(cfg: CnnConfig, rng: np.random.Generator) -> CnnParams:
    """Seeded Glorot-uniform init; the padding embedding row starts at zero."""
    t: dict[str, np.ndarray] = {}
    t["embedding"] = _glorot(rng, (cfg.vocab_size, cfg.embed_dim))
    t["embedding"][0] = 0.0
    c_in = cfg.embed_dim
    for i, (k, c_out) in enumerate(zip(cfg.kernel_sizes, cfg.conv_filters)):
        t[f"conv{i}_w"] = _glorot(rng, (k, c_in, c_out))
        t[f"conv{i}_b"] = np.zeros(c_out)
        c_in = c_out
    t["dense_w"] = _glorot(rng, (c_in, cfg.dense_hidden))
    t["dense_b"] = np.zeros(cfg.dense_hidden)
    t["out_w"] = _glorot(rng, (cfg.dense_hidden,))
    t["out_b"] = np.zeros(1)
    return CnnParams(t, cfg)


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _conv_forward(h: np.ndarray, w: np.ndarray, b: np.ndarray, keep_inputs: bool):
    """Valid 1D convolution lowered to one GEMM per kernel offset.

    h: (B, L, C_in); w: (k, C_in, C_out).  Contiguous per-offset slabs of
    the input keep BLAS on its fast path at any batch size (overlapping
    window views copy pathologically for large batches); the slabs are
    returned for the weight gradient when training.
    """
    k, c_in, c_out = w.shape
    bsz, length, _ = h.shape
    t = length - k + 1
    z2d = None
    slabs = [] if keep_inputs else None
    for dk in range(k):
        hc = np.ascontiguousarray(h[:, dk : dk + t, :]).reshape(bsz * t, c_in)
        if z2d is None:
            z2d = hc @ w[dk]
        else:
            z2d += hc @ w[dk]
        if keep_inputs:
            slabs.append(hc)
    z = z2d.reshape(bsz, t, c_out) + b
    return z, slabs


def _conv_backward(dz: np.ndarray, slabs: list[np.ndarray], w: np.ndarray, in_len: int):
    """Gradients of a valid 1D convolution. dz: (B, T, C_out) post-ReLU-mask."""
    k, c_in, c_out = w.shape
    bsz, t, _ = dz.shape
    dz2d = dz.reshape(bsz * t, c_out)
    dw = np.empty_like(w)
    db = dz2d.sum(axis=0)
    dh = np.zeros((bsz, in_len, c_in))
    for dk in range(k):
        dw[dk] = slabs[dk].T @ dz2d
        dh[:, dk : dk + t, :] += (dz2d @ w[dk].T).reshape(bsz, t, c_in)
    return dw, db, dh


def forward(
    params: CnnParams,
    x: np.ndarray,
    train_mode: bool = False,
    dropout_rng: np.random.Generator | None = None,
    need_cache: bool = False,
):
    """Run the network on integer sequences x (B, seq_len).

    Returns (logits, cache); the cache carries every intermediate needed by
    :func:`backward` (conv input slabs are only retained when training or
    when need_cache is set).  Inference (train_mode=False) is a pure
    function of (params, x).
    """
    cfg = params.cfg
    x = np.atleast_2d(np.asarray(x))
    if x.shape[1] != cfg.seq_len:
        raise ShapeMismatch(f"expected seq_len {cfg.seq_len}, got {x.shape[1]}")
    if train_mode and dropout_rng is None:
        raise ValueError("train_mode forward needs a dropout generator")

    keep = train_mode or need_cache
    h = params["embedding"][x]  # (B, L, E)
    cache: dict = {"x": x, "conv": []}
    for i in range(3):
        z, slabs = _conv_forward(h, params[f"conv{i}_w"], params[f"conv{i}_b"], keep)
        mask = z > 0
        h = z * mask
        cache["conv"].append((slabs, mask, h.shape[1]))
    # global max pool over time; argmax (first hit) routes the gradient
    pool_arg = h.argmax(axis=1)  # (B, C3)
    pooled = np.take_along_axis(h, pool_arg[:, None, :], axis=1)[:, 0, :]
    cache["pool_arg"] = pool_arg
    cache["pooled"] = pooled

    z_d = pooled @ params["dense_w"] + params["dense_b"]
    dense_mask = z_d > 0
    a_d = z_d * dense_mask
    cache["dense_mask"] = dense_mask

    if train_mode and cfg.dropout_rate > 0:
        keep = dropout_rng.random(a_d.shape) >= cfg.dropout_rate
        drop_scale = 1.0 / (1.0 - cfg.dropout_rate)
        a_d = a_d * keep * drop_scale
        cache["drop"] = (keep, drop_scale)
    cache["a_d"] = a_d

    logits = a_d @ params["out_w"] + params["out_b"][0]
    return logits, cache


def bce_with_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy in the numerically stable logits form."""
    z, y = np.asarray(logits, dtype=np.float64), np.asarray(labels, dtype=np.float64)
    per = np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))
    return float(np.mean(per))


def backward(params: CnnParams, cache: dict, dlogits: np.ndarray) -> CnnParams:
    """Backpropagate d(loss)/d(logits) through the cached forward pass."""
    grads = params.zeros_like()
    g = grads.tensors

    a_d = cache["a_d"]
    g["out_w"][:] = a_d.T @ dlogits
    g["out_b"][:] = dlogits.sum()
    da = np.outer(dlogits, params["out_w"])
    if "drop" in cache:
        keep, drop_scale = cache["drop"]
        da = da * keep * drop_scale
    dz_d = da * cache["dense_mask"]

    pooled = cache["pooled"]
    g["dense_w"][:] = pooled.T @ dz_d
    g["dense_b"][:] = dz_d.sum(axis=0)
    d_pooled = dz_d @ params["dense_w"].T  # (B, C3)

    t3 = cache["conv"][2][2]
    bsz, c3 = d_pooled.shape
    dh = np.zeros((bsz, t3, c3))
    np.put_along_axis(dh, cache["pool_arg"][:, None, :], d_pooled[:, None, :], axis=1)

    for i in (2, 1, 0):
        slabs, mask, _ = cache["conv"][i]
        dz = dh * mask
        in_len = cache["conv"][i - 1][2] if i > 0 else params.cfg.seq_len
        dw, db, dh = _conv_backward(dz, slabs, params[f"conv{i}_w"], in_len)
        g[f"conv{i}_w"][:] = dw
        g[f"conv{i}_b"][:] = db

    np.add.at(g["embedding"], cache["x"], dh)
    return grads


def loss_and_grads(
    params: CnnParams,
    x: np.ndarray,
    labels: np.ndarray,
    dropout_rng: np.random.Generator | None = None,
):
    """Mean BCE-with-logits loss and full parameter gradients for a batch."""
    loss, grads, _ = _loss_grads_logits(params, x, labels, dropout_rng)
    return loss, grads


def _loss_grads_logits(params, x, labels, dropout_rng):
    x = np.atleast_2d(np.asarray(x))
    y = np.asarray(labels, dtype=np.float64)
    if len(y) != x.shape[0]:
        raise ShapeMismatch("labels length must match batch size")
    logits, cache = forward(
        params, x, train_mode=dropout_rng is not None, dropout_rng=dropout_rng,
        need_cache=True,
    )
    loss = bce_with_logits(logits, y)
    dlogits = (sigmoid(logits) - y) / len(y)
    return loss, backward(params, cache, dlogits), logits


@dataclass
class AdamState:
    """Per-tensor first/second moments plus the shared step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: CnnParams, lr: float = 1e-3) -> "AdamState":
        return cls(
            m={k: np.zeros_like(t) for k, t in params.tensors.items()},
            v={k: np.zeros_like(t) for k, t in params.tensors.items()},
            lr=lr,
        )


def adam_step(params: CnnParams, grads: CnnParams, state: AdamState) -> None:
    """One in-place Adam update with bias correction."""
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for name, t in params.tensors.items():
        gt = grads.tensors[name]
        state.m[name] = b1 * state.m[name] + (1 - b1) * gt
        state.v[name] = b2 * state.v[name] + (1 - b2) * gt * gt
        m_hat = state.m[name] / c1
        v_hat = state.v[name] / c2
        t -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


class EarlyStopper:
    """Keep the best validation AUC; stop after `patience` flat epochs."""

    def __init__(self, patience: int = 1, min_delta: float = 1e-5):
        self.patience = patience
        self.min_delta = min_delta
        self.best = -np.inf
        self.best_epoch = -1
        self.flat = 0

    def update(self, epoch: int, value: float) -> bool:
        """Record an epoch's metric; returns True when training should stop."""
        if value > self.best + self.min_delta:
            self.best = value
            self.best_epoch = epoch
            self.flat = 0
            return False
        self.flat += 1
        return self.flat >= self.patience


def predict_logits(params: CnnParams, x: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Inference logits, dropout off, computed in memory-bounded chunks."""
    x = np.atleast_2d(np.asarray(x))
    out = np.empty(x.shape[0])
    for i in range(0, x.shape[0], chunk):
        out[i : i + chunk] = forward(params, x[i : i + chunk])[0]
    return out


def predict_proba(params: CnnParams, x: np.ndarray) -> np.ndarray:
    """Phishing probability sigma(logit) per input row."""
    return sigmoid(predict_logits(params, x))


def train(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    cfg: TrainConfig | None = None,
    cnn_cfg: CnnConfig | None = None,
):
    """Train with Adam and per-epoch validation-AUC early stopping.

    Returns (best_params, history): the parameters of the best-AUC epoch
    and one history row per epoch with train loss and train/val AUC.  The
    train AUC is computed over the minibatch logits seen during the epoch.
    """
    cfg = cfg or TrainConfig()
    cnn_cfg = cnn_cfg or CnnConfig()
    if len(x_train) == 0 or len(x_val) == 0:
        raise ShapeMismatch("train and validation sets must be non-empty")
    y_val = np.asarray(y_val)
    if len(np.unique(y_val)) < 2:
        raise DegenerateValidation("validation split holds a single class")
    y_train = np.asarray(y_train, dtype=np.float64)

    init_rng, shuffle_rng, drop_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)
    )
    params = init_params(cnn_cfg, init_rng)
    state = AdamState.for_params(params)
    stopper = EarlyStopper(patience=cfg.patience, min_delta=cfg.min_delta)

    best_params = params.copy()
    history: list[dict] = []
    n = len(x_train)
    for epoch in range(1, cfg.max_epochs + 1):
        perm = shuffle_rng.permutation(n)
        epoch_logits = np.empty(n)
        epoch_labels = y_train[perm]
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            loss, grads, logits = _loss_grads_logits(
                params, x_train[idx], y_train[idx], drop_rng
            )
            adam_step(params, grads, state)
            epoch_logits[start : start + len(idx)] = logits
            loss_sum += loss * len(idx)

        val_auc = roc_auc(predict_logits(params, x_val), y_val)
        history.append(
            {
                "epoch": epoch,
                "train_loss": loss_sum / n,
                "train_auc": roc_auc(epoch_logits, epoch_labels),
                "val_auc": val_auc,
            }
        )
        improved_before = stopper.best_epoch
        should_stop = stopper.update(epoch, val_auc)
        if stopper.best_epoch == epoch and stopper.best_epoch != improved_before:
            best_params = params.copy()
        if should_stop:
            break
    return best_params, history
