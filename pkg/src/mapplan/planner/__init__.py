"""Ego-status encoding, the two planning branches, fusion and trajectory decoding."""

from .model import (
    Ablation,
    PlanOutput,
    Trajectory,
    decode_trajectory,
    ego_features,
    encode_ego_status,
    ep_query,
    forward_plan,
    fuse,
    fusion_weight,
    init_model,
    init_planner_params,
)

__all__ = [
    "Ablation",
    "PlanOutput",
    "Trajectory",
    "decode_trajectory",
    "ego_features",
    "encode_ego_status",
    "ep_query",
    "forward_plan",
    "fuse",
    "fusion_weight",
    "init_model",
    "init_planner_params",
]
