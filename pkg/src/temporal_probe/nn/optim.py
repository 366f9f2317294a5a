"""Adam with decoupled weight decay, and global gradient-norm clipping."""

from __future__ import annotations

import numpy as np

from .params import Parameter


def adam_step(p: Parameter, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8, weight_decay: float = 0.0) -> None:
    """One bias-corrected Adam update. Weight decay is decoupled (applied to
    the value before the moment update, not mixed into the gradient). The
    gradient is cleared afterward."""
    value = p.value.astype(np.float64)
    grad = p.grad.astype(np.float64)
    if weight_decay:
        value -= lr * weight_decay * value
    p.step_count += 1
    t = p.step_count
    m = beta1 * p.adam_m.astype(np.float64) + (1.0 - beta1) * grad
    v = beta2 * p.adam_v.astype(np.float64) + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    value -= lr * m_hat / (np.sqrt(v_hat) + eps)
    p.adam_m[...] = m
    p.adam_v[...] = v
    p.value[...] = value
    p.grad[...] = 0.0


def clip_grad_norm(params, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm.
    Returns the pre-clip norm."""
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    total = 0.0
    for p in params:
        g = p.grad.astype(np.float64)
        total += float((g * g).sum())
    norm = float(np.sqrt(total))
    if norm > max_norm:
        scale = max_norm / norm
        for p in params:
            p.grad[...] = p.grad * scale
    return norm
