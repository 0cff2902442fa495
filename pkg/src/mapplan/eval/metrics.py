"""Per-horizon L2, collision and off-road rates, and the leaderboard score."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import MapPlanError
from ..geometry import OrientedBox, box_overlap_grad
from ..scenario.bev import SceneRegions, scene_regions
from ..scenario.types import EGO_LENGTH, EGO_WIDTH, FRAME_DT, Scene

# leaderboard normalization: (reference, range, weight) per metric
SCORE_TERMS = {"l2": (3.5, 1.0, 0.5), "collision": (2.0, 1.5, 0.25), "offroad": (2.5, 2.5, 0.25)}
OVERLAP_EPS = 1e-9


@dataclass(frozen=True)
class HorizonSpec:
    """1-based step indices of the reported horizons."""

    steps: tuple[int, ...] = (5, 7, 9)
    frame_dt: float = FRAME_DT

    def labels(self) -> tuple[str, ...]:
        return tuple(f"{s * self.frame_dt:g}s" for s in self.steps)

    def check(self, horizon: int) -> None:
        bad = [s for s in self.steps if not 1 <= s <= horizon]
        if bad:
            raise MapPlanError(f"horizon steps {bad} fall outside 1..{horizon}")


def _avg(values: dict[str, float | None]) -> float | None:
    vals = list(values.values())
    if any(v is None for v in vals):
        return None
    return sum(vals) / len(vals)


def l2_metrics(
    preds: Sequence[np.ndarray], gts: Sequence[np.ndarray], masks: Sequence[np.ndarray], h: HorizonSpec = HorizonSpec()
) -> dict[str, float | None]:
    """Mean over valid scenes of the waypoint error at each horizon step, plus ``avg``.

    A horizon with no valid scene is reported as None, and so is ``avg``.
    """
    out: dict[str, float | None] = {}
    for label, step in zip(h.labels(), h.steps):
        errs = [
            float(np.hypot(*(np.asarray(p)[step - 1] - np.asarray(g)[step - 1])))
            for p, g, m in zip(preds, gts, masks)
            if m[step - 1]
        ]
        out[label] = float(np.mean(errs)) if errs else None
    out["avg"] = _avg(out)
    return out


def _footprint_hits(x: float, y: float, heading: float, obstacles, length: float, width: float) -> bool:
    ego = OrientedBox(float(x), float(y), length, width, heading)
    return any(box_overlap_grad(ego, b)[0] > OVERLAP_EPS for b in obstacles)


def collision_rate(
    preds: Sequence[np.ndarray],
    scenes: Sequence[Scene],
    h: HorizonSpec = HorizonSpec(),
    regions: Sequence[SceneRegions] | None = None,
    footprint: bool = False,
    ego_length: float = EGO_LENGTH,
    ego_width: float = EGO_WIDTH,
) -> dict[str, float | None]:
    """Percent of valid scenes whose waypoint is in an obstacle while the ground truth is not.

    The default test is the point indicator on the rasterized obstacle
    region. With ``footprint`` the ego box (ground-truth heading) is tested
    for positive overlap with any obstacle box instead, for both the
    prediction and the ground truth.
    """
    if regions is None and not footprint:
        regions = [scene_regions(s) for s in scenes]
    out: dict[str, float | None] = {}
    for label, step in zip(h.labels(), h.steps):
        t = step - 1
        hits = n = 0
        for k, (p, s) in enumerate(zip(preds, scenes)):
            if not s.validity[t]:
                continue
            n += 1
            gx, gy = s.gt_trajectory[t]
            px, py = np.asarray(p)[t]
            if footprint:
                obs = s.obstacles[t]
                head = s.gt_headings[t]
                pred_in = _footprint_hits(px, py, head, obs, ego_length, ego_width)
                gt_in = _footprint_hits(gx, gy, head, obs, ego_length, ego_width)
            else:
                mask = regions[k].obstacles[t]
                pred_in = mask.contains(px, py)
                gt_in = mask.contains(gx, gy)
            hits += pred_in and not gt_in
        out[label] = 100.0 * hits / n if n else None
    out["avg"] = _avg(out)
    return out


def offroad_rate(
    preds: Sequence[np.ndarray],
    scenes: Sequence[Scene],
    h: HorizonSpec = HorizonSpec(),
    regions: Sequence[SceneRegions] | None = None,
) -> dict[str, float | None]:
    """Percent of valid scenes whose waypoint is outside the drivable region (off-grid counts)."""
    if regions is None:
        regions = [scene_regions(s) for s in scenes]
    out: dict[str, float | None] = {}
    for label, step in zip(h.labels(), h.steps):
        t = step - 1
        hits = n = 0
        for p, s, r in zip(preds, scenes, regions):
            if not s.validity[t]:
                continue
            n += 1
            px, py = np.asarray(p)[t]
            hits += r.undrivable.contains(px, py)
        out[label] = 100.0 * hits / n if n else None
    out["avg"] = _avg(out)
    return out


def leaderboard_score(l2: float, col: float, off: float) -> float:
    """Weighted sum of ``(reference - value) / range`` for L2 (m), collision (%) and off-road (%).

    Not clamped: values beyond the reference give negative contributions.
    """
    total = 0.0
    for value, (ref, rng, weight) in zip((l2, col, off), SCORE_TERMS.values()):
        total += weight * (ref - value) / rng
    return total


@dataclass(frozen=True)
class MetricsReport:
    l2: dict[str, float | None]
    collision: dict[str, float | None]
    offroad: dict[str, float | None]
    n_scenes: int
    score: float | None = field(default=None)

    def __post_init__(self) -> None:
        if self.score is None and None not in (self.l2["avg"], self.collision["avg"], self.offroad["avg"]):
            object.__setattr__(
                self, "score", leaderboard_score(self.l2["avg"], self.collision["avg"], self.offroad["avg"])
            )

    def horizons(self) -> list[str]:
        return list(self.l2)


def evaluate_predictions(
    preds: Sequence[np.ndarray],
    scenes: Sequence[Scene],
    h: HorizonSpec = HorizonSpec(),
    regions: Sequence[SceneRegions] | None = None,
    footprint: bool = False,
    ego_length: float = EGO_LENGTH,
    ego_width: float = EGO_WIDTH,
) -> MetricsReport:
    for s in scenes:
        h.check(s.horizon)
    if regions is None:
        regions = [scene_regions(s) for s in scenes]
    gts = [np.asarray(s.gt_trajectory) for s in scenes]
    masks = [np.asarray(s.validity) for s in scenes]
    return MetricsReport(
        l2=l2_metrics(preds, gts, masks, h),
        collision=collision_rate(preds, scenes, h, regions, footprint, ego_length, ego_width),
        offroad=offroad_rate(preds, scenes, h, regions),
        n_scenes=len(scenes),
    )

