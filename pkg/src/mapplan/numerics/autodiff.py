"""Tensor values, the recording tape and reverse-mode gradients.

Tensors wrap read-only float64 numpy arrays. Primitive operations append a
record to the innermost active :class:`Tape` whenever one of their inputs
requires a gradient; outside a tape nothing is recorded, which is how
inference runs. :func:`backward` walks the records in reverse order.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import GradientError

VJP = Callable[[np.ndarray], Sequence["np.ndarray | None"]]

_local = threading.local()


def _stack() -> list["Tape"]:
    stack = getattr(_local, "tapes", None)
    if stack is None:
        stack = _local.tapes = []
    return stack


def current_tape() -> "Tape | None":
    stack = _stack()
    return stack[-1] if stack else None


class Tensor:
    """Immutable dense float64 array, optionally tracked for gradients."""

    __slots__ = ("value", "requires_grad", "op", "__weakref__")

    def __init__(self, value, requires_grad: bool = False) -> None:
        arr = np.array(value, dtype=np.float64)
        arr.setflags(write=False)
        self.value = arr
        self.requires_grad = bool(requires_grad)
        self.op: str | None = None

    @classmethod
    def _wrap(cls, arr: np.ndarray, op: str) -> "Tensor":
        t = cls.__new__(cls)
        arr = np.asarray(arr, dtype=np.float64)
        arr.setflags(write=False)
        t.value = arr
        t.requires_grad = False
        t.op = op
        return t

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    @property
    def is_leaf(self) -> bool:
        return self.op is None

    def item(self) -> float:
        return float(self.value.reshape(-1)[0]) if self.value.size == 1 else _not_scalar(self)

    def numpy(self) -> np.ndarray:
        return self.value

    def detach(self) -> "Tensor":
        return Tensor(self.value)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def __len__(self) -> int:
        return self.shape[0]

    # operator sugar; the implementations live in ops
    def __add__(self, other):
        from . import ops

        return ops.add(self, other) if isinstance(other, Tensor) else ops.shift(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other) if isinstance(other, Tensor) else ops.shift(self, -float(other))

    def __rsub__(self, other):
        from . import ops

        return ops.shift(ops.neg(self), float(other))

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other) if isinstance(other, Tensor) else ops.scale(self, float(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops

        if isinstance(other, Tensor):
            raise TypeError("division by a tensor is not supported")
        return ops.scale(self, 1.0 / float(other))

    def __neg__(self):
        from . import ops

        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)

    def __getitem__(self, index):
        from . import ops

        return ops.index(self, index)

    @property
    def T(self) -> "Tensor":
        from . import ops

        return ops.transpose(self)


def _not_scalar(t: Tensor) -> float:
    raise GradientError(f"item() needs a single-element tensor, got shape {t.shape}")


@dataclass
class Record:
    out: Tensor
    inputs: tuple[Tensor, ...]
    vjp: VJP


class Tape:
    """Ordered log of executed primitives; use as a context manager."""

    def __init__(self) -> None:
        self.records: list[Record] = []

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        stack = _stack()
        if not stack or stack[-1] is not self:
            raise GradientError("tape stack corrupted: exiting a tape that is not innermost")
        stack.pop()

    def __len__(self) -> int:
        return len(self.records)


def record(value: np.ndarray, inputs: Sequence[Tensor], vjp: VJP, op: str) -> Tensor:
    """Wrap ``value`` as the output of primitive ``op`` and log it if needed.

    ``vjp`` maps the output cotangent to one cotangent per input (``None``
    for inputs that need none).
    """
    out = Tensor._wrap(value, op)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.records.append(Record(out, tuple(inputs), vjp))
    return out


def backward(tape: Tape, loss: Tensor, wrt: Iterable[Tensor] | None = None) -> dict[Tensor, np.ndarray]:
    """Reverse-mode pass from a scalar ``loss`` over ``tape``.

    Returns a mapping from every gradient-requiring leaf reached by the tape
    to its gradient. Tensors listed in ``wrt`` are always present in the
    result, with zeros when they did not take part in the computation.
    """
    if loss.size != 1:
        raise GradientError(f"loss must be a scalar, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    leaves: dict[int, Tensor] = {}
    if loss.is_leaf and loss.requires_grad:
        leaves[id(loss)] = loss
    for rec in reversed(tape.records):
        g = grads.pop(id(rec.out), None)
        if g is None:
            continue
        in_grads = rec.vjp(g)
        for inp, gi in zip(rec.inputs, in_grads):
            if gi is None or not inp.requires_grad:
                continue
            key = id(inp)
            if inp.is_leaf:
                leaves[key] = inp
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = np.asarray(gi, dtype=np.float64).reshape(inp.shape)
    result: dict[Tensor, np.ndarray] = {}
    for key, leaf in leaves.items():
        result[leaf] = grads.get(key, np.zeros_like(leaf.value))
    if wrt is not None:
        for t in wrt:
            if t not in result:
                result[t] = np.zeros_like(t.value)
    return result


def parameter(value) -> Tensor:
    return Tensor(value, requires_grad=True)


def constant(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)
