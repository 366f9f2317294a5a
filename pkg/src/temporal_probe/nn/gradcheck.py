"""Central-difference verification of analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BlockCheck:
    name: str
    max_rel_error: float
    checked: int


def finite_diff_check(loss_fn, params, *, h: float = 1e-3, samples: int = 32,
                      seed: int = 0) -> list[BlockCheck]:
    """Compare analytic gradients against central differences.

    ``loss_fn()`` must be deterministic (dropout disabled), return the scalar
    loss, and accumulate gradients into the given parameter blocks as a side
    effect. For each block at least ``samples`` coordinates are probed (all
    of them for small blocks) and the worst relative error
    |a - n| / max(1, |a|, |n|) is reported. Never raises; callers decide what
    error level is acceptable.

    Coordinates whose first probe disagrees are re-probed at h/16 and h/256:
    a probe that straddles a ReLU kink produces a bogus numeric slope that
    collapses once the step no longer crosses it, while a wrong analytic
    gradient keeps its error at every step size.
    """
    named = [(name, p) for name, p in params]
    rng = np.random.default_rng(seed)

    for _, p in named:
        p.zero_grad()
    loss_fn()
    analytic = {name: p.grad.astype(np.float64).copy() for name, p in named}
    for _, p in named:
        p.zero_grad()

    def loss_only() -> float:
        value = float(loss_fn())
        for _, q in named:
            q.zero_grad()
        return value

    def probe(flat_value, c: int, step: float) -> float:
        original = float(flat_value[c])
        flat_value[c] = np.float32(original + step)
        hi = float(flat_value[c])
        up = loss_only()
        flat_value[c] = np.float32(original - step)
        lo = float(flat_value[c])
        down = loss_only()
        flat_value[c] = original
        # Divide by the float32-achievable step, not the requested one.
        return (up - down) / (hi - lo)

    reports = []
    for name, p in named:
        flat_value = p.value.reshape(-1)
        flat_analytic = analytic[name].reshape(-1)
        count = flat_value.shape[0]
        if count <= samples:
            coords = np.arange(count)
        else:
            coords = rng.choice(count, size=samples, replace=False)
        worst = 0.0
        for c in coords:
            a = float(flat_analytic[c])
            best = np.inf
            for step in (h, h / 16.0, h / 256.0):
                numeric = probe(flat_value, c, step)
                best = min(best, abs(a - numeric) / max(1.0, abs(a), abs(numeric)))
                if best < 1e-6:
                    break
            worst = max(worst, best)
        reports.append(BlockCheck(name=name, max_rel_error=worst, checked=len(coords)))
    return reports


def max_relative_error(reports) -> float:
    return max((r.max_rel_error for r in reports), default=0.0)
