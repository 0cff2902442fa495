"""Minimal differentiable-computation core used by every learned component."""

from . import ops
from .autodiff import Tape, Tensor, backward, constant, current_tape, parameter
from .gradcheck import finite_diff_check
from .ops import linear, scaled_dot_attention
from .optim import AdamState, adam_step
from .rng import SeededRng, glorot_uniform

__all__ = [
    "AdamState",
    "SeededRng",
    "Tape",
    "Tensor",
    "adam_step",
    "backward",
    "constant",
    "current_tape",
    "finite_diff_check",
    "glorot_uniform",
    "linear",
    "ops",
    "parameter",
    "scaled_dot_attention",
]
