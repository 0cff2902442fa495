"""Per-scene inputs and targets precomputed once for training and evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GridSpec
from .mapping import MapTargets, mapping_targets
from .scenario import (
    DEFAULT_BEV_GRID,
    DEFAULT_REGION_GRID,
    BEVGrid,
    EgoStatus,
    IntervalMode,
    Scene,
    SceneRegions,
    rasterize_bev,
    scene_ego_status,
    scene_regions,
)


@dataclass(frozen=True, eq=False)
class Sample:
    scene: Scene
    bev: BEVGrid
    regions: SceneRegions
    targets: MapTargets
    ego: EgoStatus

    @property
    def gt(self) -> np.ndarray:
        return np.asarray(self.scene.gt_trajectory, dtype=np.float64)

    @property
    def mask(self) -> np.ndarray:
        return np.asarray(self.scene.validity, dtype=bool)


def prepare_sample(
    scene: Scene,
    bev_channels: int = 8,
    interval_mode: IntervalMode = IntervalMode.ACTUAL_DT,
    bev_grid: GridSpec = DEFAULT_BEV_GRID,
    region_grid: GridSpec = DEFAULT_REGION_GRID,
) -> Sample:
    bev = rasterize_bev(scene, bev_grid, bev_channels)
    return Sample(
        scene=scene,
        bev=bev,
        regions=scene_regions(scene, region_grid),
        targets=mapping_targets(scene, bev),
        ego=scene_ego_status(scene, IntervalMode(interval_mode)),
    )
