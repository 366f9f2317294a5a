"""Trainable parameter: float32 value plus gradient and Adam state."""

from __future__ import annotations

import numpy as np


class Parameter:
    """Value, accumulated gradient, and Adam moments, all one shape."""

    __slots__ = ("value", "grad", "adam_m", "adam_v", "step_count")

    def __init__(self, value: np.ndarray):
        v = np.ascontiguousarray(value, dtype=np.float32)
        self.value = v
        self.grad = np.zeros_like(v)
        self.adam_m = np.zeros_like(v)
        self.adam_v = np.zeros_like(v)
        self.step_count = 0

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    def accumulate(self, g: np.ndarray) -> None:
        self.grad += g.astype(np.float32)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Parameter(shape={self.value.shape}, steps={self.step_count})"


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int,
                   shape: tuple[int, ...] | None = None) -> Parameter:
    """Uniform init on +/- sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    if shape is None:
        shape = (fan_in, fan_out)
    return Parameter(rng.uniform(-limit, limit, size=shape))


def zeros(shape) -> Parameter:
    return Parameter(np.zeros(shape, dtype=np.float32))
