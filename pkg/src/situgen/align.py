"""Spatially biased self-attention, alignment/LM losses and gradient verification.

Everything here runs on small float64 matrices and exists for verification,
not throughput. Row-vector convention: ``Q = O @ W_Q`` for ``O`` of shape (K, D).
The pairwise bias is a two-layer tanh MLP applied to each 5-vector f_ij::

    B_ij = tanh(f_ij @ W1 + b1) @ w2 + b2        W1: (5, H), b1: (H,), w2: (H, 1), b2: scalar
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteGradient, ShapeError
from .geometry import pairwise_features

FEATURE_FIELDS = ("d", "sin_h", "cos_h", "sin_v", "cos_v")
PARAM_NAMES = ("w_q", "w_k", "w_v", "mlp_w1", "mlp_b1", "mlp_w2", "mlp_b2")


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be a non-empty 2D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} has non-finite entries")
    return arr


@dataclass
class AttentionParams:
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    mlp_w1: np.ndarray
    mlp_b1: np.ndarray
    mlp_w2: np.ndarray
    mlp_b2: float | np.ndarray

    def __post_init__(self):
        for name in PARAM_NAMES:
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        d = self.w_q.shape[0]
        h = self.mlp_w1.shape[1] if self.mlp_w1.ndim == 2 else -1
        expected = {
            "w_q": (d, d), "w_k": (d, d), "w_v": (d, d),
            "mlp_w1": (5, h), "mlp_b1": (h,), "mlp_w2": (h, 1), "mlp_b2": (),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ShapeError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
            if not np.all(np.isfinite(getattr(self, name))):
                raise ShapeError(f"{name} has non-finite entries")

    @property
    def dim(self) -> int:
        return self.w_q.shape[0]

    @property
    def hidden(self) -> int:
        return self.mlp_w1.shape[1]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {n: getattr(self, n) for n in PARAM_NAMES}

    @classmethod
    def from_dict(cls, d) -> "AttentionParams":
        return cls(**{n: d[n] for n in PARAM_NAMES})

    @classmethod
    def random(cls, dim: int, hidden: int = 8, rng: np.random.Generator | None = None,
               scale: float = 0.5) -> "AttentionParams":
        rng = rng or np.random.default_rng()
        s = scale / math.sqrt(dim)
        return cls(rng.normal(0, s, (dim, dim)), rng.normal(0, s, (dim, dim)),
                   rng.normal(0, s, (dim, dim)), rng.normal(0, scale, (5, hidden)),
                   rng.normal(0, scale, hidden), rng.normal(0, scale, (hidden, 1)),
                   float(rng.normal(0, scale)))

    @classmethod
    def zeros(cls, dim: int, hidden: int = 8) -> "AttentionParams":
        return cls(np.zeros((dim, dim)), np.zeros((dim, dim)), np.zeros((dim, dim)),
                   np.zeros((5, hidden)), np.zeros(hidden), np.zeros((hidden, 1)), 0.0)


@dataclass(frozen=True)
class LossReport:
    lm: float
    align: float
    total: float


def feature_tensor(centers, standardize_distance: bool = False) -> np.ndarray:
    """K x K x 5 pairwise features; optionally z-score the distance channel."""
    f = pairwise_features(centers)
    if standardize_distance and f.shape[0] > 1:
        d = f[..., 0]
        std = d.std()
        if std > 0:
            f = f.copy()
            f[..., 0] = (d - d.mean()) / std
    return f


def _check_features(f, k: int) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (k, k, 5):
        raise ShapeError(f"feature tensor must have shape ({k}, {k}, 5), got {f.shape}")
    return f


def _softmax_rows(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def mlp_bias(features: np.ndarray, params: AttentionParams) -> np.ndarray:
    hid = np.tanh(features @ params.mlp_w1 + params.mlp_b1)
    return (hid @ params.mlp_w2)[..., 0] + params.mlp_b2


def _forward(o, f, params):
    o = as_matrix(o, "O")
    k, d = o.shape
    if params.dim != d:
        raise ShapeError(f"parameters expect D={params.dim}, objects have D={d}")
    f = _check_features(f, k)
    q = o @ params.w_q
    kk = o @ params.w_k
    v = o @ params.w_v
    hid = np.tanh(f @ params.mlp_w1 + params.mlp_b1)
    bias = (hid @ params.mlp_w2)[..., 0] + params.mlp_b2
    logits = q @ kk.T / math.sqrt(d) + bias
    attn = _softmax_rows(logits)
    out = attn @ v
    cache = dict(o=o, f=f, q=q, kk=kk, v=v, hid=hid, attn=attn)
    return out, cache


def spatial_attention_forward(o, f, params: AttentionParams) -> np.ndarray:
    """``softmax(Q K^T / sqrt(D) + MLP(F)) V`` for one head with d_h = D."""
    return _forward(o, f, params)[0]


def attention_weights(o, f, params: AttentionParams) -> np.ndarray:
    return _forward(o, f, params)[1]["attn"]


def scaled_dot_product_attention(o, w_q, w_k, w_v) -> np.ndarray:
    """Plain single-head attention without any positional bias."""
    o = as_matrix(o, "O")
    q, k, v = o @ w_q, o @ w_k, o @ w_v
    scores = q @ k.T / np.sqrt(o.shape[1])
    scores = scores - scores.max(axis=-1, keepdims=True)
    w = np.exp(scores)
    w /= w.sum(axis=-1, keepdims=True)
    return w @ v


def mse_align_loss(pred, target) -> float:
    pred = as_matrix(pred, "O'")
    target = as_matrix(target, "W")
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def cross_entropy(logits, targets) -> float:
    """Mean negative log-likelihood of ``targets`` under row-wise softmax of ``logits``."""
    logits = as_matrix(logits, "logits")
    targets = np.asarray(targets)
    n, vocab = logits.shape
    if targets.shape != (n,):
        raise ShapeError(f"expected {n} targets, got shape {targets.shape}")
    if not np.issubdtype(targets.dtype, np.integer):
        raise IndexError("targets must be integer token indices")
    if np.any(targets < 0) or np.any(targets >= vocab):
        raise IndexError(f"target index outside [0, {vocab})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(n), targets]
    return float(np.mean(log_z - picked))


def joint_loss(lm: float, align: float) -> LossReport:
    if not (math.isfinite(lm) and math.isfinite(align)) or lm < 0 or align < 0:
        raise ValueError("losses must be finite and non-negative")
    return LossReport(lm, align, lm + align)


def alignment_loss_and_grads(o, f, w, params: AttentionParams):
    """MSE(attention(O, F), W) and its analytic gradient for every parameter."""
    out, c = _forward(o, f, params)
    w = as_matrix(w, "W")
    if w.shape != out.shape:
        raise ShapeError(f"shape mismatch {out.shape} vs {w.shape}")
    k, d = out.shape
    resid = out - w
    loss = float(np.mean(resid ** 2))

    d_out = 2.0 * resid / resid.size
    d_attn = d_out @ c["v"].T
    d_v = c["attn"].T @ d_out
    d_logits = c["attn"] * (d_attn - np.sum(d_attn * c["attn"], axis=1, keepdims=True))
    d_scores = d_logits / math.sqrt(d)
    d_q = d_scores @ c["kk"]
    d_kk = d_scores.T @ c["q"]
    o_ = c["o"]
    hid = c["hid"]
    d_hid_pre = d_logits[..., None] * params.mlp_w2[:, 0] * (1.0 - hid ** 2)
    grads = {
        "w_q": o_.T @ d_q,
        "w_k": o_.T @ d_kk,
        "w_v": o_.T @ d_v,
        "mlp_w1": np.einsum("ijf,ijh->fh", c["f"], d_hid_pre),
        "mlp_b1": d_hid_pre.sum(axis=(0, 1)),
        "mlp_w2": np.einsum("ij,ijh->h", d_logits, hid)[:, None],
        "mlp_b2": np.asarray(d_logits.sum()),
    }
    return loss, grads


def grad_check(loss_and_grads: Callable, params: dict[str, np.ndarray],
               epsilon: float = 1e-5, floor: float = 1e-4) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_and_grads(params) -> (loss, grads)`` with ``grads`` keyed like
    ``params``. Per entry the error is ``|a - n| / max(|a|, |n|, floor * max(1, |L|))``.

    The floor exists because a central difference carries roundoff of about
    ``eps_machine * |L| / epsilon`` (~1e-11 here); entries whose true gradient
    is near zero (b2 always is: softmax ignores a constant shift) would
    otherwise report pure noise as relative error.
    """
    if not 0.0 < epsilon <= 1e-3:
        raise ValueError("epsilon must lie in (0, 1e-3]")
    params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    loss, analytic = loss_and_grads(params)
    if not math.isfinite(loss):
        raise NonFiniteGradient("loss is not finite")
    denom_floor = floor * max(1.0, abs(loss))
    worst = 0.0
    for name, value in params.items():
        g = np.asarray(analytic[name], dtype=np.float64)
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"analytic gradient of {name} is not finite")
        flat = value.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = loss_and_grads(params)[0]
            flat[i] = orig - epsilon
            down = loss_and_grads(params)[0]
            flat[i] = orig
            numeric = (up - down) / (2.0 * epsilon)
            if not math.isfinite(numeric):
                raise NonFiniteGradient(f"finite difference of {name}[{i}] is not finite")
            a = float(gflat[i])
            err = abs(a - numeric) / max(abs(a), abs(numeric), denom_floor)
            worst = max(worst, err)
    return worst


def alignment_grad_check(o, f, w, params: AttentionParams, epsilon: float = 1e-5) -> float:
    def fn(p):
        return alignment_loss_and_grads(o, f, w, AttentionParams.from_dict(p))

    return grad_check(fn, params.as_dict(), epsilon)


def random_instance(seed: int, k: int = 3, d: int = 4, hidden: int = 8, scale: float = 1.0):
    """Random (O, F, W, params) problem with features from random object centers."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-3, 3, (k, 3))
    o = rng.normal(0, 1, (k, d)) * scale
    w = rng.normal(0, 1, (k, d)) * scale
    return o, feature_tensor(centers), w, AttentionParams.random(d, hidden, rng)


def export_features_json(features, object_ids) -> bytes:
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 3 or f.shape[0] != f.shape[1] or f.shape[2] != 5 or f.shape[0] != len(object_ids):
        raise ShapeError(f"features {f.shape} do not match {len(object_ids)} ids")
    doc = {"object_ids": list(object_ids), "fields": list(FEATURE_FIELDS), "features": f.tolist()}
    return json.dumps(doc).encode("utf-8")


def import_features_json(data) -> tuple[np.ndarray, list[str]]:
    doc = json.loads(data)
    return np.asarray(doc["features"], dtype=np.float64), list(doc["object_ids"])
