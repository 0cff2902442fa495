"""Adaptive-moment (Adam) parameter updates over named tensors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import MapPlanError, ShapeError
from .autodiff import Tensor


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def copy(self) -> "AdamState":
        return AdamState(self.step, {k: a.copy() for k, a in self.m.items()}, {k: a.copy() for k, a in self.v.items()})


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[dict[str, Tensor], AdamState]:
    """Return updated parameters and a new state; the inputs are not modified.

    Parameters missing from ``grads`` are treated as having zero gradient.
    """
    if lr <= 0:
        raise MapPlanError(f"learning rate must be positive, got {lr}")
    new = state.copy()
    new.step += 1
    t = new.step
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    out: dict[str, Tensor] = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.value)
        elif g.shape != p.shape:
            raise ShapeError(f"adam_step[{name}]", p.shape, g.shape)
        m = new.m.get(name)
        v = new.v.get(name)
        if m is None:
            m = np.zeros_like(p.value)
            v = np.zeros_like(p.value)
        elif m.shape != p.shape:
            raise ShapeError(f"adam_step state[{name}]", p.shape, m.shape)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        new.m[name] = m
        new.v[name] = v
        update = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        out[name] = Tensor(p.value - update, requires_grad=p.requires_grad)
    return out, new
