"""Exact 2-D geometry for BEV boxes, regions and grids."""

from ._backend import BACKEND
from .shapes import (
    AxisBox,
    ConvexPolygon,
    GridSpec,
    OrientedBox,
    RegionMask,
    box_corners,
    box_overlap_grad,
    clip_to,
    convex_intersection_area,
    convex_intersection_area_grad,
    giou,
    point_in_mask,
    rasterize,
    signed_distance,
)

__all__ = [
    "BACKEND",
    "AxisBox",
    "ConvexPolygon",
    "GridSpec",
    "OrientedBox",
    "RegionMask",
    "box_corners",
    "box_overlap_grad",
    "clip_to",
    "convex_intersection_area",
    "convex_intersection_area_grad",
    "giou",
    "point_in_mask",
    "rasterize",
    "signed_distance",
]
