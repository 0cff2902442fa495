"""Boxes, convex polygons, grids and region masks in the BEV plane."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from ..errors import GeometryError
from ._backend import kernels

_DUP_TOL = 1e-12


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon stored counterclockwise without a closing vertex.

    Clockwise input is reversed and consecutive duplicate vertices are
    dropped; anything that is still not convex raises :class:`GeometryError`.
    """

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        pts: list[tuple[float, float]] = []
        for x, y in self.vertices:
            p = (float(x), float(y))
            if pts and abs(p[0] - pts[-1][0]) <= _DUP_TOL and abs(p[1] - pts[-1][1]) <= _DUP_TOL:
                continue
            pts.append(p)
        while len(pts) > 1 and abs(pts[0][0] - pts[-1][0]) <= _DUP_TOL and abs(pts[0][1] - pts[-1][1]) <= _DUP_TOL:
            pts.pop()
        if len(pts) < 3:
            raise GeometryError(f"polygon needs at least 3 distinct vertices, got {len(pts)}")
        if _signed_area(pts) < 0:
            pts.reverse()
        if _signed_area(pts) <= 0:
            raise GeometryError("polygon has zero area")
        n = len(pts)
        span = max(max(abs(a) for p in pts for a in p), 1.0)
        for i in range(n):
            (x0, y0), (x1, y1), (x2, y2) = pts[i], pts[(i + 1) % n], pts[(i + 2) % n]
            if (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1) < -1e-12 * span * span:
                raise GeometryError("polygon is not convex")
        object.__setattr__(self, "vertices", tuple(pts))

    @cached_property
    def xs(self) -> np.ndarray:
        return np.array([p[0] for p in self.vertices])

    @cached_property
    def ys(self) -> np.ndarray:
        return np.array([p[1] for p in self.vertices])

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    def translated(self, dx: float, dy: float) -> "ConvexPolygon":
        return ConvexPolygon(tuple((x + dx, y + dy) for x, y in self.vertices))

    def contains(self, x: float, y: float) -> bool:
        """Boundary-inclusive point test."""
        d, _, _ = kernels.signed_distance(float(x), float(y), self.xs, self.ys)
        return d <= 0.0


def _signed_area(pts: Sequence[tuple[float, float]]) -> float:
    s = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


@dataclass(frozen=True)
class OrientedBox:
    """Rectangle of ``length`` along ``heading`` and ``width`` across it."""

    center_x: float
    center_y: float
    length: float
    width: float
    heading: float

    def __post_init__(self) -> None:
        if not (self.length > 0 and self.width > 0):
            raise GeometryError(f"box extents must be positive, got length={self.length}, width={self.width}")
        for name in ("center_x", "center_y", "length", "width", "heading"):
            if not math.isfinite(getattr(self, name)):
                raise GeometryError(f"box {name} is not finite")

    @property
    def area(self) -> float:
        return self.length * self.width

    def corners(self) -> ConvexPolygon:
        return box_corners(self)


def box_corners(b: OrientedBox) -> ConvexPolygon:
    c, s = math.cos(b.heading), math.sin(b.heading)
    hl, hw = 0.5 * b.length, 0.5 * b.width
    local = ((hl, -hw), (hl, hw), (-hl, hw), (-hl, -hw))
    return ConvexPolygon(tuple((b.center_x + c * u - s * v, b.center_y + s * u + c * v) for u, v in local))


def convex_intersection_area(a: ConvexPolygon, b: ConvexPolygon) -> float:
    """Area of ``a & b``; 0 when they are disjoint or only touch."""
    return float(kernels.intersection_area(a.xs, a.ys, b.xs, b.ys))


def convex_intersection_area_grad(a: ConvexPolygon, b: ConvexPolygon) -> tuple[float, float, float]:
    """Area of ``a & b`` and its derivative with respect to translating ``a``.

    The derivative is the sum over edges of ``a`` of the outward edge normal
    times the edge length lying inside ``b``. At configurations where an
    edge of ``a`` runs along an edge of ``b`` the area is not differentiable
    and this returns one of the one-sided derivatives.
    """
    area, gx, gy = kernels.intersection_area_grad(a.xs, a.ys, b.xs, b.ys)
    return float(area), float(gx), float(gy)


def box_overlap_grad(a: OrientedBox, b: OrientedBox) -> tuple[float, float, float]:
    """Overlap area of two boxes and its derivative with respect to moving ``a``'s center.

    The clipping runs in ``b``'s own frame, so the result does not depend
    on where the pair sits in the world and coincident boxes return exactly
    ``length * width``.
    """
    c, s = math.cos(b.heading), math.sin(b.heading)
    dx, dy = a.center_x - b.center_x, a.center_y - b.center_y
    rel = OrientedBox(c * dx + s * dy, -s * dx + c * dy, a.length, a.width, a.heading - b.heading)
    local = OrientedBox(0.0, 0.0, b.length, b.width, 0.0)
    area, gx, gy = convex_intersection_area_grad(box_corners(rel), box_corners(local))
    return area, c * gx - s * gy, s * gx + c * gy


def signed_distance(x: float, y: float, poly: ConvexPolygon) -> tuple[float, float, float]:
    """Signed distance to ``poly`` (negative inside) and its gradient in (x, y)."""
    d, gx, gy = kernels.signed_distance(float(x), float(y), poly.xs, poly.ys)
    return float(d), float(gx), float(gy)


@dataclass(frozen=True)
class AxisBox:
    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)


def giou(a: AxisBox, b: AxisBox) -> float:
    """Generalized IoU of two axis-aligned boxes, in (-1, 1]."""
    for box in (a, b):
        if not (box.x2 > box.x1 and box.y2 > box.y1):
            raise GeometryError(f"GIoU needs boxes with positive extent, got {box}")
    iw = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = iw * ih
    union = a.area + b.area - inter
    hull = (max(a.x2, b.x2) - min(a.x1, b.x1)) * (max(a.y2, b.y2) - min(a.y1, b.y1))
    return inter / union - (hull - union) / hull


@dataclass(frozen=True)
class GridSpec:
    """Regular grid; cell (0, 0) has its lower-left corner at the origin.

    Rows run along +y and columns along +x.
    """

    origin_x: float
    origin_y: float
    resolution: float
    rows: int
    cols: int

    def __post_init__(self) -> None:
        if not self.resolution > 0:
            raise GeometryError(f"grid resolution must be positive, got {self.resolution}")
        if self.rows <= 0 or self.cols <= 0:
            raise GeometryError(f"grid needs positive rows/cols, got {self.rows}x{self.cols}")

    @property
    def width(self) -> float:
        return self.cols * self.resolution

    @property
    def height(self) -> float:
        return self.rows * self.resolution

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (self.origin_x, self.origin_y, self.origin_x + self.width, self.origin_y + self.height)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """(row, col) holding the point; a point on a cell edge goes to the upper/right cell."""
        return (
            int(math.floor((y - self.origin_y) / self.resolution)),
            int(math.floor((x - self.origin_x) / self.resolution)),
        )

    def center_of(self, row: int, col: int) -> tuple[float, float]:
        return (self.origin_x + (col + 0.5) * self.resolution, self.origin_y + (row + 0.5) * self.resolution)

    def in_range(self, row: int, col: int) -> bool:
        return 0 <= row < self.rows and 0 <= col < self.cols

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """(x, y) center arrays of shape (rows, cols)."""
        cx = self.origin_x + (np.arange(self.cols) + 0.5) * self.resolution
        cy = self.origin_y + (np.arange(self.rows) + 0.5) * self.resolution
        return np.meshgrid(cx, cy)

    def boundary_polygon(self) -> ConvexPolygon:
        x0, y0, x1, y1 = self.bounds
        return ConvexPolygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Boolean raster; ``outside`` is the answer for points off the grid."""

    grid: GridSpec
    bits: np.ndarray
    outside: bool = False

    def __post_init__(self) -> None:
        bits = np.array(self.bits, dtype=bool)
        if bits.shape != (self.grid.rows, self.grid.cols):
            raise GeometryError(f"mask shape {bits.shape} does not match grid {self.grid.rows}x{self.grid.cols}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RegionMask):
            return NotImplemented
        return self.grid == other.grid and self.outside == other.outside and np.array_equal(self.bits, other.bits)

    def count(self) -> int:
        return int(self.bits.sum())

    def complement(self) -> "RegionMask":
        return RegionMask(self.grid, ~self.bits, not self.outside)

    def union(self, other: "RegionMask") -> "RegionMask":
        if other.grid != self.grid:
            raise GeometryError("cannot combine masks on different grids")
        return RegionMask(self.grid, self.bits | other.bits, self.outside or other.outside)

    def contains(self, x: float, y: float) -> bool:
        return point_in_mask((x, y), self)

    def lookup(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Vectorized :func:`point_in_mask`."""
        g = self.grid
        rows = np.floor((np.asarray(ys) - g.origin_y) / g.resolution).astype(np.int64)
        cols = np.floor((np.asarray(xs) - g.origin_x) / g.resolution).astype(np.int64)
        inside = (rows >= 0) & (rows < g.rows) & (cols >= 0) & (cols < g.cols)
        out = np.full(rows.shape, self.outside, dtype=bool)
        out[inside] = self.bits[rows[inside], cols[inside]]
        return out


def point_in_mask(p: tuple[float, float], m: RegionMask) -> bool:
    row, col = m.grid.cell_of(p[0], p[1])
    if not m.grid.in_range(row, col):
        return m.outside
    return bool(m.bits[row, col])


def rasterize(polys: Iterable[ConvexPolygon], g: GridSpec, outside: bool = False) -> RegionMask:
    """Cells whose centers lie inside any polygon (boundary inclusive)."""
    out = np.zeros((g.rows, g.cols), dtype=np.uint8)
    for poly in polys:
        kernels.rasterize_convex(poly.xs, poly.ys, g.origin_x, g.origin_y, g.resolution, out)
    return RegionMask(g, out.astype(bool), outside)


def clip_to(poly: ConvexPolygon, window: ConvexPolygon) -> ConvexPolygon | None:
    """``poly & window`` as a polygon, or None when the overlap has no area."""
    xs, ys = kernels.clip_polygon(poly.xs, poly.ys, window.xs, window.ys)
    try:
        return ConvexPolygon(tuple(zip(xs.tolist(), ys.tolist())))
    except GeometryError:
        return None
