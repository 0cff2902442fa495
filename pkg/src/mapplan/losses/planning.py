"""Losses on the decoded trajectory: overlap, displacement and the region-aware term."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..geometry import ConvexPolygon, OrientedBox, box_overlap_grad, signed_distance
from ..numerics import Tensor, constant, ops
from ..scenario.bev import SceneRegions
from ..scenario.types import EGO_LENGTH, EGO_WIDTH, Scene

SOFT_TAU = 0.5


class AdaptiveMode(str, enum.Enum):
    EXACT = "EXACT"
    SOFT = "SOFT"


@dataclass(frozen=True)
class AdaptiveWeights:
    """Weights of the displacement, collision-count and off-road-count terms."""

    w_l2: float = 0.1
    w_col: float = 1.0
    w_off: float = 1.0

    def __post_init__(self) -> None:
        for name in ("w_l2", "w_col", "w_off"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"adaptive weight {name} must be nonnegative, got {getattr(self, name)}")


@dataclass(frozen=True)
class LossReport:
    collision: float
    ade: float
    adaptive: float
    mapping: float
    total: float
    tensor: Tensor | None = field(default=None, compare=False, repr=False)


def _gt_arrays(scene: Scene) -> tuple[np.ndarray, np.ndarray]:
    return np.asarray(scene.gt_trajectory, dtype=np.float64), np.asarray(scene.validity, dtype=np.float64)


def collision_loss(
    pred: Tensor,
    scene: Scene,
    ego_length: float = EGO_LENGTH,
    ego_width: float = EGO_WIDTH,
) -> Tensor:
    """Sum over valid steps of the overlap between the ego box and every obstacle box.

    The ego box sits at the predicted waypoint with the ground-truth heading
    of that step. The gradient with respect to the waypoint is the exact
    derivative of the clipped area under translation.
    """
    T = pred.shape[0]
    reach = 0.5 * math.hypot(ego_length, ego_width)
    pts = pred.value
    grad = np.zeros((T, 2))
    value = 0.0
    for t in range(T):
        if not scene.validity[t]:
            continue
        x, y = float(pts[t, 0]), float(pts[t, 1])
        ego = None
        for obs in scene.obstacles[t]:
            # cheap rejection on bounding circles
            if math.hypot(x - obs.center_x, y - obs.center_y) > reach + 0.5 * math.hypot(obs.length, obs.width):
                continue
            if ego is None:
                ego = OrientedBox(x, y, ego_length, ego_width, scene.gt_headings[t])
            area, gx, gy = box_overlap_grad(ego, obs)
            value += area
            grad[t, 0] += gx
            grad[t, 1] += gy
    return ops.custom(np.float64(value), (pred,), lambda g: (g * grad,), "collision")


def ade_loss(pred: Tensor, gt: np.ndarray, mask: np.ndarray) -> Tensor:
    """Masked mean Euclidean distance between waypoints; 0 (with a warning) if nothing is valid."""
    m = np.asarray(mask, dtype=np.float64)
    n = m.sum()
    if n == 0:
        warnings.warn("ADE over an all-invalid mask is defined as 0", RuntimeWarning, stacklevel=2)
        return ops.scale(ops.total(pred), 0.0)
    d = ops.row_norm(ops.sub(pred, constant(np.asarray(gt, dtype=np.float64))))
    return ops.scale(ops.dot(d, constant(m)), 1.0 / n)


def _soft_inside(pred: Tensor, polys: Sequence[Sequence[ConvexPolygon]], tau: float, outside: bool) -> Tensor:
    """Per-step ``sigmoid(-sd / tau)`` of the waypoint against a union of polygons.

    ``sd`` is the smallest signed distance over the step's polygons (exact
    outside the union). With ``outside`` the complement is scored instead,
    i.e. ``sigmoid(sd / tau)``. Steps without polygons score 0 (1 with
    ``outside``) and pass no gradient.
    """
    pts = pred.value
    T = pts.shape[0]
    vals = np.zeros(T)
    dvals = np.zeros((T, 2))
    sign = 1.0 if outside else -1.0
    for t in range(T):
        if not polys[t]:
            vals[t] = 1.0 if outside else 0.0
            continue
        best = None
        for poly in polys[t]:
            d = signed_distance(pts[t, 0], pts[t, 1], poly)
            if best is None or d[0] < best[0]:
                best = d
        z = sign * best[0] / tau
        s = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
        vals[t] = s
        ds = s * (1.0 - s) * sign / tau
        dvals[t] = (ds * best[1], ds * best[2])
    return ops.custom(vals, (pred,), lambda g: (g[:, None] * dvals,), "soft_region")


def adaptive_loss(
    pred: Tensor,
    scene: Scene,
    regions: SceneRegions,
    w: AdaptiveWeights = AdaptiveWeights(),
    mode: AdaptiveMode = AdaptiveMode.SOFT,
    tau: float = SOFT_TAU,
) -> Tensor:
    """``w_l2 * L2 + w_col * L_col + w_off * L_off`` over the valid steps.

    L2 is the summed (not averaged) waypoint distance. In EXACT mode the
    collision term counts steps whose waypoint lies in an obstacle cell while
    the ground truth does not, and the off-road term counts waypoints in the
    undrivable region; both are constants for differentiation. SOFT mode
    replaces the two point indicators on the prediction by sigmoids of the
    signed distance to the obstacle boxes and to the drivable polygons.
    """
    mode = AdaptiveMode(mode)
    gt, m = _gt_arrays(scene)
    l2 = ops.dot(ops.row_norm(ops.sub(pred, constant(gt))), constant(m))
    gt_free = np.array([not o.lookup(gt[t : t + 1, 0], gt[t : t + 1, 1])[0] for t, o in enumerate(regions.obstacles)])
    if mode is AdaptiveMode.EXACT:
        pts = pred.value
        in_obs = np.array([o.lookup(pts[t : t + 1, 0], pts[t : t + 1, 1])[0] for t, o in enumerate(regions.obstacles)])
        off = regions.undrivable.lookup(pts[:, 0], pts[:, 1])
        col_term = float(np.sum(m * in_obs * gt_free))
        off_term = float(np.sum(m * off))
        return ops.shift(ops.scale(l2, w.w_l2), w.w_col * col_term + w.w_off * off_term)
    col = ops.dot(_soft_inside(pred, regions.obstacle_polys, tau, outside=False), constant(m * gt_free))
    drivable = [regions.drivable_polys] * pred.shape[0]
    off = ops.dot(_soft_inside(pred, drivable, tau, outside=True), constant(m))
    return ops.add(ops.add(ops.scale(l2, w.w_l2), ops.scale(col, w.w_col)), ops.scale(off, w.w_off))


def planning_loss(
    pred: Tensor,
    scene: Scene,
    regions: SceneRegions,
    mapping: Tensor | None = None,
    w: AdaptiveWeights = AdaptiveWeights(),
    ego_length: float = EGO_LENGTH,
    ego_width: float = EGO_WIDTH,
    tau: float = SOFT_TAU,
) -> LossReport:
    """Training objective on the final decoded trajectory.

    ``total = mapping + collision + ade + adaptive(SOFT)``; ``mapping`` is
    the already computed segmentation loss (zero when absent).
    """
    gt, m = _gt_arrays(scene)
    col = collision_loss(pred, scene, ego_length, ego_width)
    ade = ade_loss(pred, gt, m)
    ada = adaptive_loss(pred, scene, regions, w, AdaptiveMode.SOFT, tau)
    total = ops.add(ops.add(col, ade), ada)
    if mapping is not None:
        total = ops.add(mapping, total)
    return LossReport(
        collision=col.item(),
        ade=ade.item(),
        adaptive=ada.item(),
        mapping=mapping.item() if mapping is not None else 0.0,
        total=total.item(),
        tensor=total,
    )
