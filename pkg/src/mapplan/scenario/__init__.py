"""Synthetic driving world: scenes, ego status, BEV rasters and scene files."""

from .bev import CLASSES, BEVGrid, SceneRegions, rasterize_bev, scene_regions, token_index
from .ego import derive_ego_status, scene_ego_status
from .generate import ScenarioParams, generate_scenario
from .io import dumps, load_scenario, loads, save_scenario
from .types import (
    DEFAULT_BEV_GRID,
    DEFAULT_REGION_GRID,
    EGO_LENGTH,
    EGO_WIDTH,
    FRAME_DT,
    HORIZON,
    Command,
    EgoStatus,
    IntervalMode,
    PoseRecord,
    Scene,
)

__all__ = [
    "CLASSES",
    "DEFAULT_BEV_GRID",
    "DEFAULT_REGION_GRID",
    "EGO_LENGTH",
    "EGO_WIDTH",
    "FRAME_DT",
    "HORIZON",
    "BEVGrid",
    "Command",
    "EgoStatus",
    "IntervalMode",
    "PoseRecord",
    "ScenarioParams",
    "Scene",
    "SceneRegions",
    "derive_ego_status",
    "dumps",
    "generate_scenario",
    "load_scenario",
    "loads",
    "rasterize_bev",
    "save_scenario",
    "scene_ego_status",
    "scene_regions",
    "token_index",
]
