"""BEV feature rasterization and per-scene region masks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ScenarioError
from ..geometry import ConvexPolygon, GridSpec, RegionMask, box_corners, clip_to, rasterize
from ..numerics import SeededRng
from .types import DEFAULT_REGION_GRID, Scene

CLASSES = ("drivable", "lane", "crosswalk", "obstacle")
N_NOISE_WAVES = 3


@dataclass(frozen=True, eq=False)
class BEVGrid:
    """Dense feature raster standing in for a learned BEV encoder.

    ``features`` has shape (rows, cols, C): channels 0-3 are the class masks
    in :data:`CLASSES` order, 4-5 the normalized cell coordinates
    (x, y) in [-1, 1] with cell (0, 0) at (-1, -1), and the rest smooth noise.
    """

    grid: GridSpec
    features: np.ndarray
    gt_masks: dict[str, RegionMask] = field(default_factory=dict)

    @property
    def channels(self) -> int:
        return int(self.features.shape[2])

    def tokens(self) -> np.ndarray:
        """Features flattened row-major to (rows * cols, C)."""
        return self.features.reshape(-1, self.channels)


def token_index(grid: GridSpec, stride: int) -> np.ndarray:
    """Row-major flat indices of every ``stride``-th cell, offset to the block centers."""
    if stride < 1:
        raise ScenarioError(f"token stride must be positive, got {stride}")
    rows = np.arange(stride // 2, grid.rows, stride)
    cols = np.arange(stride // 2, grid.cols, stride)
    return (rows[:, None] * grid.cols + cols[None, :]).reshape(-1)


def _normalized_coords(n: int) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    return -1.0 + 2.0 * np.arange(n) / (n - 1)


def rasterize_bev(scene: Scene, grid: GridSpec, channels: int = 8) -> BEVGrid:
    if channels < 6:
        raise ScenarioError(f"BEV needs at least 6 channels, got {channels}")
    current_obstacles = [box_corners(b) for b in scene.obstacles[0]] if scene.obstacles else []
    masks = {
        "drivable": rasterize(scene.drivable, grid),
        "lane": rasterize(scene.lanes, grid),
        "crosswalk": rasterize(scene.crosswalks, grid),
        "obstacle": rasterize(current_obstacles, grid),
    }
    feats = np.zeros((grid.rows, grid.cols, channels))
    for c, name in enumerate(CLASSES):
        feats[:, :, c] = masks[name].bits
    xs = _normalized_coords(grid.cols)
    ys = _normalized_coords(grid.rows)
    X, Y = np.meshgrid(xs, ys)
    feats[:, :, 4] = X
    feats[:, :, 5] = Y
    rng = SeededRng(scene.seed).stream("bev-noise")
    for c in range(6, channels):
        field_ = np.zeros((grid.rows, grid.cols))
        for _ in range(N_NOISE_WAVES):
            fx, fy = rng.uniform(-3.0, 3.0, 2)
            phase = rng.uniform(0.0, 2 * np.pi)
            field_ += np.sin(np.pi * (fx * X + fy * Y) + phase)
        feats[:, :, c] = 0.5 * field_ / N_NOISE_WAVES
    feats.setflags(write=False)
    return BEVGrid(grid, feats, masks)


@dataclass(frozen=True, eq=False)
class SceneRegions:
    """Drivable/obstacle regions of one scene on the evaluation grid.

    Polygon lists are clipped to the grid so that the exact point tests on
    the masks and the signed distances to the polygons describe the same
    region (off-grid counts as undrivable).
    """

    grid: GridSpec
    drivable: RegionMask
    undrivable: RegionMask
    obstacles: tuple[RegionMask, ...]
    drivable_polys: tuple[ConvexPolygon, ...]
    obstacle_polys: tuple[tuple[ConvexPolygon, ...], ...]


def scene_regions(scene: Scene, grid: GridSpec = DEFAULT_REGION_GRID) -> SceneRegions:
    window = grid.boundary_polygon()
    drivable_polys = tuple(p for p in (clip_to(d, window) for d in scene.drivable) if p is not None)
    drivable = rasterize(drivable_polys, grid)
    obstacle_polys = tuple(tuple(box_corners(b) for b in step) for step in scene.obstacles)
    obstacles = tuple(rasterize(step, grid, outside=False) for step in obstacle_polys)
    return SceneRegions(grid, drivable, drivable.complement(), obstacles, drivable_polys, obstacle_polys)
