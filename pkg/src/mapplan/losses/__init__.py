"""Losses applied to the fused decoded trajectory."""

from .planning import (
    SOFT_TAU,
    AdaptiveMode,
    AdaptiveWeights,
    LossReport,
    adaptive_loss,
    ade_loss,
    collision_loss,
    planning_loss,
)

__all__ = [
    "SOFT_TAU",
    "AdaptiveMode",
    "AdaptiveWeights",
    "LossReport",
    "adaptive_loss",
    "ade_loss",
    "collision_loss",
    "planning_loss",
]
