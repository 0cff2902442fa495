"""Segmentation and detection losses for the layered map decoder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..geometry import AxisBox, GridSpec, box_corners
from ..numerics import Tensor, constant, ops
from ..scenario.bev import CLASSES, BEVGrid
from ..scenario.types import Scene
from .decoder import SegLayer, SegPrediction

DICE_EPS = 1e-6
PROB_CLAMP = 1e-7
THING_CLASS = CLASSES.index("obstacle")
STUFF_CLASSES = tuple(i for i, c in enumerate(CLASSES) if c != "obstacle")


@dataclass(frozen=True)
class DetectionWeights:
    l1: float = 5.0
    giou: float = 2.0
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0


@dataclass(frozen=True, eq=False)
class MapTargets:
    """Ground truth for one scene on the BEV grid.

    ``masks`` is (cells, 4) in ``CLASSES`` order; ``boxes`` is (k, 4)
    normalized (cx, cy, w, h) of the axis-aligned hulls of the current
    obstacles, clipped to the grid.
    """

    masks: np.ndarray
    boxes: np.ndarray


def mapping_targets(scene: Scene, bev: BEVGrid) -> MapTargets:
    masks = np.stack([bev.gt_masks[c].bits.reshape(-1) for c in CLASSES], axis=1).astype(np.float64)
    g = bev.grid
    x0, y0, x1, y1 = g.bounds
    rows = []
    for b in scene.obstacles[0] if scene.obstacles else ():
        poly = box_corners(b)
        bx0, bx1 = max(poly.xs.min(), x0), min(poly.xs.max(), x1)
        by0, by1 = max(poly.ys.min(), y0), min(poly.ys.max(), y1)
        if bx1 - bx0 <= 1e-6 or by1 - by0 <= 1e-6:
            continue
        rows.append(
            (
                (0.5 * (bx0 + bx1) - x0) / g.width,
                (0.5 * (by0 + by1) - y0) / g.height,
                (bx1 - bx0) / g.width,
                (by1 - by0) / g.height,
            )
        )
    return MapTargets(masks, np.array(rows, dtype=np.float64).reshape(-1, 4))


def dice_loss(probs: Tensor, gt: np.ndarray, eps: float = DICE_EPS) -> Tensor:
    """``1 - 2 sum(p g) / (sum p + sum g + eps)`` over all cells."""
    g = constant(np.asarray(gt, dtype=np.float64).reshape(probs.shape))
    inter = ops.dot(probs, g)
    denom = ops.shift(ops.total(probs), float(g.value.sum()) + eps)
    return ops.shift(ops.neg(ops.scale(ops.div(inter, denom), 2.0)), 1.0)


def focal_loss(probs: Tensor, labels: np.ndarray, alpha: float = 0.25, gamma: float = 2.0) -> Tensor:
    """Mean sigmoid focal loss of probabilities ``probs`` against 0/1 ``labels``.

    Probabilities are clamped to ``[1e-7, 1 - 1e-7]`` so that saturated
    predictions give a finite loss.
    """
    y = np.asarray(labels, dtype=np.float64).reshape(probs.shape)
    p = ops.clip(probs, PROB_CLAMP, 1.0 - PROB_CLAMP)
    q = ops.shift(ops.neg(p), 1.0)
    pos = ops.mul(ops.power(q, gamma), ops.log(p))
    neg = ops.mul(ops.power(p, gamma), ops.log(q))
    w_pos = constant(-alpha * y)
    w_neg = constant(-(1.0 - alpha) * (1.0 - y))
    return ops.mean(ops.add(ops.mul(w_pos, pos), ops.mul(w_neg, neg)))


def greedy_match(pred_centers: np.ndarray, gt_centers: np.ndarray) -> list[tuple[int, int]]:
    """One-to-one (pred, gt) pairs, repeatedly taking the closest remaining pair."""
    if len(pred_centers) == 0 or len(gt_centers) == 0:
        return []
    d = np.linalg.norm(pred_centers[:, None, :] - gt_centers[None, :, :], axis=2)
    pairs = []
    # stable order on ties: flat index order
    for flat in np.argsort(d, axis=None, kind="stable"):
        i, j = divmod(int(flat), d.shape[1])
        if any(i == a or j == b for a, b in pairs):
            continue
        pairs.append((i, j))
        if len(pairs) == min(d.shape):
            break
    return sorted(pairs)


def _corners(cxcywh: Tensor) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    cx, cy, w, h = (cxcywh[:, k] for k in range(4))
    hw, hh = ops.scale(w, 0.5), ops.scale(h, 0.5)
    return ops.sub(cx, hw), ops.sub(cy, hh), ops.add(cx, hw), ops.add(cy, hh)


def giou_terms(pred: Tensor, gt: np.ndarray) -> Tensor:
    """Differentiable GIoU of matched (k, 4) cxcywh boxes against constant targets."""
    ax1, ay1, ax2, ay2 = _corners(pred)
    g = constant(gt)
    bx1, by1, bx2, by2 = _corners(g)
    zero = constant(np.zeros(pred.shape[0]))
    iw = ops.maximum(ops.sub(ops.minimum(ax2, bx2), ops.maximum(ax1, bx1)), zero)
    ih = ops.maximum(ops.sub(ops.minimum(ay2, by2), ops.maximum(ay1, by1)), zero)
    inter = ops.mul(iw, ih)
    area_a = ops.mul(ops.sub(ax2, ax1), ops.sub(ay2, ay1))
    area_b = ops.mul(ops.sub(bx2, bx1), ops.sub(by2, by1))
    union = ops.sub(ops.add(area_a, area_b), inter)
    hull = ops.mul(
        ops.sub(ops.maximum(ax2, bx2), ops.minimum(ax1, bx1)),
        ops.sub(ops.maximum(ay2, by2), ops.minimum(ay1, by1)),
    )
    return ops.sub(ops.div(inter, union), ops.div(ops.sub(hull, union), hull))


def axis_box(cxcywh) -> AxisBox:
    cx, cy, w, h = (float(v) for v in cxcywh)
    return AxisBox(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h)


def detection_loss(layer: SegLayer, gt_boxes: np.ndarray, w: DetectionWeights = DetectionWeights()) -> Tensor:
    """Greedy-matched L1 + GIoU box terms plus focal objectness over all queries."""
    pairs = greedy_match(layer.boxes.value[:, :2], gt_boxes[:, :2])
    labels = np.zeros(layer.boxes.shape[0])
    labels[[i for i, _ in pairs]] = 1.0
    loss = focal_loss(ops.sigmoid(layer.score_logits), labels, w.focal_alpha, w.focal_gamma)
    if not pairs:
        return loss
    pi = np.array([i for i, _ in pairs])
    gj = np.array([j for _, j in pairs])
    matched = layer.boxes[pi]
    target = gt_boxes[gj]
    l1 = ops.total(ops.abs_(ops.sub(matched, constant(target))))
    g = giou_terms(matched, target)
    box = ops.add(ops.scale(l1, w.l1), ops.scale(ops.shift(ops.neg(ops.total(g)), float(len(pairs))), w.giou))
    return ops.add(box, loss)


def seg_loss(layer: SegLayer, gt_masks: np.ndarray) -> Tensor:
    """Dice on the thing class plus Dice on each stuff class.

    A class absent from the ground truth is skipped: its Dice term would be
    the constant 1 with zero gradient, so dropping it changes no update and
    lets a perfect prediction score 0.
    """
    probs = ops.sigmoid(layer.mask_logits)
    loss = ops.scale(ops.total(probs[:, 0]), 0.0)
    for c in (THING_CLASS, *STUFF_CLASSES):
        if gt_masks[:, c].any():
            loss = ops.add(loss, dice_loss(probs[:, c], gt_masks[:, c]))
    return loss


def layer_losses(
    pred: SegPrediction, targets: MapTargets, w: DetectionWeights = DetectionWeights()
) -> list[tuple[Tensor, Tensor]]:
    """(detection, segmentation) per decoder layer, first to last."""
    return [(detection_loss(l, targets.boxes, w), seg_loss(l, targets.masks)) for l in pred.layers]


def mapping_loss(
    pred: SegPrediction,
    targets: MapTargets,
    w: DetectionWeights = DetectionWeights(),
    encoder_aux: bool = False,
) -> Tensor:
    """Final-layer detection + segmentation loss plus the same for every earlier layer.

    With ``encoder_aux`` (and a prediction decoded with encoder outputs) the
    encoder's detection + segmentation loss is added as well.
    """
    terms = [ops.add(d, s) for d, s in layer_losses(pred, targets, w)]
    if encoder_aux and pred.encoder is not None:
        terms.append(ops.add(detection_loss(pred.encoder, targets.boxes, w), seg_loss(pred.encoder, targets.masks)))
    loss = terms[0]
    for t in terms[1:]:
        loss = ops.add(loss, t)
    return loss


def grid_box(g: GridSpec, cxcywh) -> AxisBox:
    """Normalized box back in world meters."""
    cx, cy, w, h = (float(v) for v in cxcywh)
    x0, y0 = g.origin_x, g.origin_y
    return axis_box((x0 + cx * g.width, y0 + cy * g.height, w * g.width, h * g.height))
