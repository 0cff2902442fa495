"""Differentiable primitives over :class:`Tensor`.

Shapes must match exactly; the only implicit expansion is the bias row in
:func:`linear`. Every function raises :class:`ShapeError` naming both shapes
on a mismatch.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import MapPlanError, ShapeError
from .autodiff import Tensor, constant, record


def _same(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(op, a.shape, b.shape)


def add(a: Tensor, b: Tensor) -> Tensor:
    _same("add", a, b)
    return record(a.value + b.value, (a, b), lambda g: (g, g), "add")


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same("sub", a, b)
    return record(a.value - b.value, (a, b), lambda g: (g, -g), "sub")


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same("mul", a, b)
    av, bv = a.value, b.value
    return record(av * bv, (a, b), lambda g: (g * bv, g * av), "mul")


def neg(a: Tensor) -> Tensor:
    return record(-a.value, (a,), lambda g: (-g,), "neg")


def scale(a: Tensor, c: float) -> Tensor:
    return record(a.value * c, (a,), lambda g: (g * c,), "scale")


def shift(a: Tensor, c: float) -> Tensor:
    return record(a.value + c, (a,), lambda g: (g,), "shift")


def mul_scalar(a: Tensor, s: Tensor) -> Tensor:
    """``a`` times a single-element tensor ``s`` (gradient flows to both)."""
    if s.size != 1:
        raise ShapeError("mul_scalar", a.shape, s.shape)
    av, sv = a.value, s.value.reshape(-1)[0]
    sshape = s.shape
    return record(av * sv, (a, s), lambda g: (g * sv, np.full(sshape, np.sum(g * av))), "mul_scalar")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    av, bv = a.value, b.value
    return record(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g), "matmul")


def linear(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """``x @ W + b`` with ``b`` added to every row."""
    if x.value.ndim != 2 or W.value.ndim != 2 or x.shape[1] != W.shape[0]:
        raise ShapeError("linear", x.shape, W.shape)
    if b.shape != (W.shape[1],):
        raise ShapeError("linear bias", W.shape, b.shape)
    xv, wv = x.value, W.value
    return record(
        xv @ wv + b.value,
        (x, W, b),
        lambda g: (g @ wv.T, xv.T @ g, g.sum(axis=0)),
        "linear",
    )


def transpose(a: Tensor) -> Tensor:
    if a.value.ndim != 2:
        raise ShapeError("transpose", a.shape)
    return record(a.value.T, (a,), lambda g: (g.T,), "transpose")


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = a.shape
    try:
        out = a.value.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", old, tuple(shape)) from None
    return record(out, (a,), lambda g: (g.reshape(old),), "reshape")


def index(a: Tensor, idx) -> Tensor:
    """Static indexing/slicing; gradients scatter back with accumulation."""
    shape = a.shape

    def vjp(g):
        full = np.zeros(shape)
        np.add.at(full, idx, g)
        return (full,)

    return record(a.value[idx], (a,), vjp, "index")


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not parts:
        raise MapPlanError("concat of an empty sequence")
    values = [p.value for p in parts]
    try:
        out = np.concatenate(values, axis=axis)
    except ValueError:
        raise ShapeError("concat", *[p.shape for p in parts]) from None
    splits = np.cumsum([v.shape[axis] for v in values])[:-1]

    def vjp(g):
        return tuple(np.split(g, splits, axis=axis))

    return record(out, tuple(parts), vjp, "concat")


def stack(parts: Sequence[Tensor]) -> Tensor:
    """Stack equal-shape tensors along a new leading axis."""
    if not parts:
        raise MapPlanError("stack of an empty sequence")
    for p in parts[1:]:
        _same("stack", parts[0], p)
    out = np.stack([p.value for p in parts])
    return record(out, tuple(parts), lambda g: tuple(g[i] for i in range(len(parts))), "stack")


def total(a: Tensor) -> Tensor:
    shape = a.shape
    return record(np.sum(a.value), (a,), lambda g: (np.full(shape, g),), "sum")


def mean(a: Tensor) -> Tensor:
    shape, n = a.shape, a.size
    return record(np.mean(a.value), (a,), lambda g: (np.full(shape, g / n),), "mean")


def sum_axis(a: Tensor, axis: int) -> Tensor:
    shape = a.shape

    def vjp(g):
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return record(np.sum(a.value, axis=axis), (a,), vjp, "sum_axis")


def dot(a: Tensor, b: Tensor) -> Tensor:
    """Sum of the elementwise product, a scalar."""
    return total(mul(a, b))


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.value)
    return record(y, (a,), lambda g: (g * (1.0 - y * y),), "tanh")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a: Tensor) -> Tensor:
    y = _sigmoid(np.asarray(a.value, dtype=np.float64).reshape(-1)).reshape(a.shape)
    return record(y, (a,), lambda g: (g * y * (1.0 - y),), "sigmoid")


def log_sigmoid(a: Tensor) -> Tensor:
    """``log(sigmoid(a))`` without overflow."""
    x = a.value
    y = -np.logaddexp(0.0, -x)
    s = _sigmoid(np.asarray(x, dtype=np.float64).reshape(-1)).reshape(a.shape)
    return record(y, (a,), lambda g: (g * (1.0 - s),), "log_sigmoid")


def softplus(a: Tensor) -> Tensor:
    x = a.value
    y = np.logaddexp(0.0, x)
    s = _sigmoid(np.asarray(x, dtype=np.float64).reshape(-1)).reshape(a.shape)
    return record(y, (a,), lambda g: (g * s,), "softplus")


def exp(a: Tensor) -> Tensor:
    y = np.exp(a.value)
    return record(y, (a,), lambda g: (g * y,), "exp")


def log(a: Tensor) -> Tensor:
    x = a.value
    if np.any(x <= 0):
        raise MapPlanError("log of a non-positive value")
    return record(np.log(x), (a,), lambda g: (g / x,), "log")


def square(a: Tensor) -> Tensor:
    x = a.value
    return record(x * x, (a,), lambda g: (2.0 * g * x,), "square")


def abs_(a: Tensor) -> Tensor:
    x = a.value
    return record(np.abs(x), (a,), lambda g: (g * np.sign(x),), "abs")


def power(a: Tensor, p: float) -> Tensor:
    """``a ** p`` for nonnegative ``a``."""
    x = a.value
    y = x**p

    def vjp(g):
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(x > 0, p * x ** (p - 1.0), 1.0 if p == 1 else 0.0)
        return (g * d,)

    return record(y, (a,), vjp, "power")


def maximum(a: Tensor, b: Tensor) -> Tensor:
    _same("maximum", a, b)
    pick = a.value >= b.value
    return record(np.where(pick, a.value, b.value), (a, b), lambda g: (g * pick, g * ~pick), "maximum")


def minimum(a: Tensor, b: Tensor) -> Tensor:
    _same("minimum", a, b)
    pick = a.value <= b.value
    return record(np.where(pick, a.value, b.value), (a, b), lambda g: (g * pick, g * ~pick), "minimum")


def div(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise ``a / b``; ``b`` must be nonzero everywhere."""
    _same("div", a, b)
    av, bv = a.value, b.value
    if np.any(bv == 0):
        raise MapPlanError("division by zero")
    y = av / bv
    return record(y, (a, b), lambda g: (g / bv, -g * y / bv), "div")


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp into ``[lo, hi]``; the gradient is zero where clamping is active."""
    x = a.value
    inside = (x >= lo) & (x <= hi)
    return record(np.clip(x, lo, hi), (a,), lambda g: (g * inside,), "clip")


def softmax_rows(a: Tensor) -> Tensor:
    x = a.value
    z = x - np.max(x, axis=-1, keepdims=True)
    e = np.exp(z)
    y = e / np.sum(e, axis=-1, keepdims=True)

    def vjp(g):
        return (y * (g - np.sum(g * y, axis=-1, keepdims=True)),)

    return record(y, (a,), vjp, "softmax")


def cumsum(a: Tensor, axis: int = 0) -> Tensor:
    def vjp(g):
        return (np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis),)

    return record(np.cumsum(a.value, axis=axis), (a,), vjp, "cumsum")


def row_norm(a: Tensor) -> Tensor:
    """Euclidean norm of each row of a 2-D tensor; gradient 0 at the origin."""
    if a.value.ndim != 2:
        raise ShapeError("row_norm", a.shape)
    x = a.value
    n = np.sqrt(np.sum(x * x, axis=1))

    def vjp(g):
        safe = np.where(n > 0, n, 1.0)
        d = np.where((n > 0)[:, None], x / safe[:, None], 0.0)
        return (g[:, None] * d,)

    return record(n, (a,), vjp, "row_norm")


def custom(value: np.ndarray, inputs: Sequence[Tensor], vjp, name: str) -> Tensor:
    """Register an externally computed primitive with its own cotangent rule."""
    return record(np.asarray(value, dtype=np.float64), tuple(inputs), vjp, name)


def scaled_dot_attention(Q: Tensor, K: Tensor, V: Tensor, return_weights: bool = False):
    """Single-head ``softmax(Q K^T / sqrt(d)) V``."""
    if Q.value.ndim != 2 or K.value.ndim != 2 or V.value.ndim != 2:
        raise ShapeError("attention", Q.shape, K.shape, V.shape)
    d = Q.shape[1]
    if d == 0 or K.shape[0] == 0:
        raise MapPlanError("attention over an empty memory or zero feature width")
    if K.shape[1] != d:
        raise ShapeError("attention (query/key width)", Q.shape, K.shape)
    if V.shape[0] != K.shape[0]:
        raise ShapeError("attention (key/value rows)", K.shape, V.shape)
    scores = scale(matmul(Q, transpose(K)), 1.0 / math.sqrt(d))
    weights = softmax_rows(scores)
    out = matmul(weights, V)
    return (out, weights) if return_weights else out


__all__ = [
    "abs_",
    "add",
    "clip",
    "concat",
    "constant",
    "cumsum",
    "custom",
    "div",
    "dot",
    "exp",
    "index",
    "linear",
    "log",
    "log_sigmoid",
    "matmul",
    "maximum",
    "mean",
    "minimum",
    "mul",
    "mul_scalar",
    "neg",
    "power",
    "reshape",
    "row_norm",
    "scale",
    "scaled_dot_attention",
    "shift",
    "sigmoid",
    "softmax_rows",
    "softplus",
    "square",
    "stack",
    "sub",
    "sum_axis",
    "tanh",
    "total",
    "transpose",
]
