"""Adam with per-component learning-rate groups (scaled encoder rate)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from bisimlab.nn import ModelParams


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(
    params: ModelParams,
    grads: dict[str, np.ndarray],
    state: AdamState,
    base_lr: float = 3e-4,
    encoder_lr_scale: float = 0.3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update in place; encoder group uses the scaled rate."""
    state.t += 1
    t = state.t
    for name, p in params.named_parameters():
        g = grads.get(name)
        if g is None:
            continue
        lr = base_lr * encoder_lr_scale if name.startswith("encoder.") else base_lr
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
