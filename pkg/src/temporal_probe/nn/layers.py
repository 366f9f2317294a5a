"""Layers with hand-derived backward passes.

Every layer follows the same shape: ``forward(...)`` returns ``(y, ctx)`` and
``backward(dy, ctx)`` accumulates parameter gradients and returns the input
gradient. The explicit context lets one layer instance (shared weights) run
several times inside a single forward pass.
"""

from __future__ import annotations

import numpy as np

from .params import Parameter


def _f64(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=np.float64)


class Dense:
    """y = x W + b."""

    def __init__(self, w: Parameter, b: Parameter):
        if w.shape[1] != b.shape[0]:
            raise ValueError(f"bias shape {b.shape} does not match W {w.shape}")
        self.w = w
        self.b = b

    def forward(self, x: np.ndarray):
        x = _f64(x)
        if x.shape[1] != self.w.shape[0]:
            raise ValueError(f"input width {x.shape[1]} != W rows {self.w.shape[0]}")
        y = x @ _f64(self.w.value) + _f64(self.b.value)
        return y, x

    def backward(self, dy: np.ndarray, ctx):
        x = ctx
        self.w.accumulate(x.T @ dy)
        self.b.accumulate(dy.sum(axis=0))
        return dy @ _f64(self.w.value).T


class Relu:
    def forward(self, x: np.ndarray):
        y = np.maximum(x, 0.0)
        return y, (x > 0.0)

    def backward(self, dy: np.ndarray, ctx):
        return dy * ctx


class Sigmoid:
    def forward(self, x: np.ndarray):
        # Split by sign for overflow-free exp.
        y = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.clip(x, 0, None))),
                     np.exp(np.clip(x, None, 0)) / (1.0 + np.exp(np.clip(x, None, 0))))
        return y, y

    def backward(self, dy: np.ndarray, ctx):
        y = ctx
        return dy * y * (1.0 - y)


class Dropout:
    """Inverted-scaling dropout: kept activations divide by 1 - rate so the
    train-mode expectation matches eval mode, where it is the identity."""

    def __init__(self, rate: float):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")
        self.rate = rate

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None):
        if not train or self.rate == 0.0:
            return x, None
        if rng is None:
            raise ValueError("train-mode dropout needs a generator")
        mask = rng.random(x.shape) >= self.rate
        scale = 1.0 / (1.0 - self.rate)
        return x * mask * scale, (mask, scale)

    def backward(self, dy: np.ndarray, ctx):
        if ctx is None:
            return dy
        mask, scale = ctx
        return dy * mask * scale


class LayerNorm:
    """Per-row normalization over the feature axis with learnable scale/shift."""

    def __init__(self, gamma: Parameter, beta: Parameter, eps: float = 1e-5):
        self.gamma = gamma
        self.beta = beta
        self.eps = eps

    def forward(self, x: np.ndarray):
        x = _f64(x)
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mu) * inv_std
        y = xhat * _f64(self.gamma.value) + _f64(self.beta.value)
        return y, (xhat, inv_std)

    def backward(self, dy: np.ndarray, ctx):
        xhat, inv_std = ctx
        self.beta.accumulate(dy.sum(axis=0))
        self.gamma.accumulate((dy * xhat).sum(axis=0))
        dxhat = dy * _f64(self.gamma.value)
        mean_d = dxhat.mean(axis=-1, keepdims=True)
        mean_dx = (dxhat * xhat).mean(axis=-1, keepdims=True)
        return (dxhat - mean_d - xhat * mean_dx) * inv_std


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = _f64(z)
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def softmax_backward(s: np.ndarray, ds: np.ndarray, axis: int = -1) -> np.ndarray:
    return s * (ds - (ds * s).sum(axis=axis, keepdims=True))


class SelfAttention:
    """Multi-head scaled dot-product self-attention with output projection.

    Projections map d_in -> proj via Wq/Wk/Wv, heads split the projection
    width, and Wo maps back proj -> d_out. Rows of each attention matrix sum
    to one, so head outputs are convex combinations of value rows.
    """

    def __init__(self, wq: Parameter, wk: Parameter, wv: Parameter, wo: Parameter, heads: int):
        proj = wq.shape[1]
        if proj % heads != 0:
            raise ValueError(f"projection width {proj} not divisible by {heads} heads")
        self.wq, self.wk, self.wv, self.wo = wq, wk, wv, wo
        self.heads = heads
        self.head_dim = proj // heads
        self.inv_scale = 1.0 / np.sqrt(self.head_dim)

    def forward(self, x: np.ndarray):
        x = _f64(x)
        q = x @ _f64(self.wq.value)
        k = x @ _f64(self.wk.value)
        v = x @ _f64(self.wv.value)
        n = x.shape[0]
        concat = np.empty_like(q)
        attn = []
        for h in range(self.heads):
            sl = slice(h * self.head_dim, (h + 1) * self.head_dim)
            scores = (q[:, sl] @ k[:, sl].T) * self.inv_scale
            a = softmax(scores)
            attn.append(a)
            concat[:, sl] = a @ v[:, sl]
        y = concat @ _f64(self.wo.value)
        return y, (x, q, k, v, concat, attn)

    def backward(self, dy: np.ndarray, ctx):
        x, q, k, v, concat, attn = ctx
        self.wo.accumulate(concat.T @ dy)
        dconcat = dy @ _f64(self.wo.value).T
        dq = np.empty_like(q)
        dk = np.empty_like(k)
        dv = np.empty_like(v)
        for h in range(self.heads):
            sl = slice(h * self.head_dim, (h + 1) * self.head_dim)
            a = attn[h]
            da = dconcat[:, sl] @ v[:, sl].T
            dv[:, sl] = a.T @ dconcat[:, sl]
            dscores = softmax_backward(a, da) * self.inv_scale
            dq[:, sl] = dscores @ k[:, sl]
            dk[:, sl] = dscores.T @ q[:, sl]
        self.wq.accumulate(x.T @ dq)
        self.wk.accumulate(x.T @ dk)
        self.wv.accumulate(x.T @ dv)
        return (dq @ _f64(self.wq.value).T
                + dk @ _f64(self.wk.value).T
                + dv @ _f64(self.wv.value).T)


def positional_encoding(n: int, d: int, frequency: float = 10000.0) -> np.ndarray:
    """Sinusoidal absolute encoding: even columns sin(pos / frequency^(2i/d)),
    odd columns the matching cos."""
    if d % 2 != 0:
        raise ValueError("encoding width must be even")
    pos = np.arange(n, dtype=np.float64)[:, None]
    i = np.arange(d // 2, dtype=np.float64)[None, :]
    angle = pos / frequency ** (2.0 * i / d)
    pe = np.empty((n, d), dtype=np.float64)
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its gradient w.r.t. the prediction."""
    pred = _f64(pred)
    target = _f64(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    n = pred.size
    if n == 0:
        raise ValueError("empty prediction")
    diff = pred - target
    loss = float((diff * diff).sum() / n)
    return loss, 2.0 * diff / n
