"""Minimal dense numeric stack with exact analytic gradients.

Stored tensors (parameter values, gradients, optimizer state, dataset
features) are float32; all arithmetic runs in float64 and results are rounded
back on store. That keeps finite-difference gradient checks meaningful while
honoring the 32-bit storage contract.
"""

from .params import Parameter, glorot_uniform
from .layers import (
    Dense,
    Dropout,
    LayerNorm,
    Relu,
    SelfAttention,
    Sigmoid,
    mse_loss,
    positional_encoding,
    softmax,
    softmax_backward,
)
from .optim import adam_step, clip_grad_norm
from .gradcheck import BlockCheck, finite_diff_check, max_relative_error

__all__ = [
    "Parameter", "glorot_uniform",
    "Dense", "Dropout", "LayerNorm", "Relu", "SelfAttention", "Sigmoid",
    "mse_loss", "positional_encoding", "softmax", "softmax_backward",
    "adam_step", "clip_grad_norm",
    "BlockCheck", "finite_diff_check", "max_relative_error",
]
