"""Central finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from ..errors import GradientError
from .autodiff import Tape, Tensor, backward
from .rng import SeededRng


def finite_diff_check(
    f: Callable[[list[Tensor]], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-6,
    n_probe: int | None = None,
    rng: SeededRng | None = None,
) -> float:
    """Max over coordinates of ``|g_ad - g_fd| / max(1, |g_fd|)``.

    ``f`` receives a list of tensors shaped like ``params`` and returns a
    scalar tensor. When ``n_probe`` is given, only that many coordinates
    (drawn from ``rng``) are differenced, which keeps checks of large models
    affordable; otherwise every coordinate is checked.
    """
    if not (0.0 < eps <= 1e-2):
        raise GradientError(f"eps must lie in (0, 1e-2], got {eps}")
    leaves = [Tensor(p.value, requires_grad=True) for p in params]
    with Tape() as tape:
        loss = f(leaves)
    if not np.all(np.isfinite(loss.value)):
        raise GradientError("non-finite function value at the base point")
    grads = backward(tape, loss, wrt=leaves)

    coords = [(i, j) for i, p in enumerate(leaves) for j in range(p.size)]
    if n_probe is not None and n_probe < len(coords):
        rng = rng or SeededRng(0)
        picks = rng.gen.choice(len(coords), size=n_probe, replace=False)
        coords = [coords[k] for k in sorted(picks)]

    base = [p.value.copy() for p in leaves]
    worst = 0.0
    for i, j in coords:
        vals = []
        for sign in (1.0, -1.0):
            shifted = base[i].copy().reshape(-1)
            shifted[j] += sign * eps
            args = [Tensor(b) for b in base]
            args[i] = Tensor(shifted.reshape(base[i].shape))
            v = float(f(args).value)
            if not math.isfinite(v):
                raise GradientError(f"non-finite function value while probing parameter {i}, coordinate {j}")
            vals.append(v)
        g_fd = (vals[0] - vals[1]) / (2.0 * eps)
        g_ad = float(grads[leaves[i]].reshape(-1)[j])
        worst = max(worst, abs(g_ad - g_fd) / max(1.0, abs(g_fd)))
    return worst
