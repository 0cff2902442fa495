"""Layered online-mapping decoder, its losses and the map-guided planning query."""

from .decoder import MapMemory, SegLayer, SegPrediction, init_mapping_params, map_decode, pom_query
from .losses import (
    DetectionWeights,
    MapTargets,
    axis_box,
    detection_loss,
    dice_loss,
    focal_loss,
    giou_terms,
    greedy_match,
    grid_box,
    layer_losses,
    mapping_loss,
    mapping_targets,
    seg_loss,
)

__all__ = [
    "DetectionWeights",
    "MapMemory",
    "MapTargets",
    "SegLayer",
    "SegPrediction",
    "axis_box",
    "detection_loss",
    "dice_loss",
    "focal_loss",
    "giou_terms",
    "greedy_match",
    "grid_box",
    "init_mapping_params",
    "layer_losses",
    "map_decode",
    "mapping_loss",
    "mapping_targets",
    "pom_query",
    "seg_loss",
]
