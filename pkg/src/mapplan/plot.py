"""Deterministic SVG plots of a predicted trajectory against ground truth.

The view is the ego frame with +x (forward) pointing up and +y (left)
pointing left. The drivable raster is drawn as merged runs of cells,
obstacles at the last valid step as outlines, the ground truth in green and
the prediction in red. Coordinates are printed with fixed precision so the
bytes depend only on the inputs.
"""

from __future__ import annotations

import numpy as np

from .geometry import GridSpec, RegionMask, box_corners
from .scenario.types import Scene

_FMT = "{:.2f}"


class _View:
    def __init__(self, grid: GridSpec, width: int, height: int) -> None:
        self.x0, self.y0, self.x1, self.y1 = grid.bounds
        self.sx = width / (self.y1 - self.y0)
        self.sy = height / (self.x1 - self.x0)

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        return (self.y1 - y) * self.sx, (self.x1 - x) * self.sy


def _n(v: float) -> str:
    s = _FMT.format(v)
    return "0.00" if s == "-0.00" else s


def _mask_rects(mask: RegionMask, view: _View) -> list[str]:
    g = mask.grid
    out = []
    for c in range(g.cols):
        col = mask.bits[:, c]
        r = 0
        while r < g.rows:
            if not col[r]:
                r += 1
                continue
            start = r
            while r < g.rows and col[r]:
                r += 1
            x_lo = g.origin_x + c * g.resolution
            y_lo, y_hi = g.origin_y + start * g.resolution, g.origin_y + r * g.resolution
            left, top = view(x_lo + g.resolution, y_hi)
            right, bottom = view(x_lo, y_lo)
            out.append(
                f'<rect x="{_n(left)}" y="{_n(top)}" width="{_n(right - left)}" height="{_n(bottom - top)}"/>'
            )
    return out


def _polyline(pts: np.ndarray, view: _View, color: str, dash: str = "") -> str:
    coords = " ".join(f"{_n(a)},{_n(b)}" for a, b in (view(x, y) for x, y in pts))
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"{extra}/>'


def render_svg(
    scene: Scene,
    drivable: RegionMask,
    pred: np.ndarray,
    gt: np.ndarray,
    valid: np.ndarray,
    width: int = 480,
    height: int = 480,
) -> str:
    """SVG document of ``pred`` and ``gt`` (valid steps only) over ``drivable``.

    Both polylines start at the ego origin. The canvas is exactly
    ``width`` x ``height`` user units.
    """
    if width <= 0 or height <= 0:
        raise ValueError(f"canvas must be positive, got {width}x{height}")
    view = _View(drivable.grid, width, height)
    valid = np.asarray(valid, dtype=bool)
    origin = np.zeros((1, 2))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{scene.scene_id}</title>",
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#5a5a5a"/>',
        '<g fill="#d9d9d9" stroke="none">',
        *_mask_rects(drivable, view),
        "</g>",
    ]
    steps = np.flatnonzero(valid)
    if steps.size:
        parts.append('<g fill="none" stroke="#1f4e9c" stroke-width="1.5">')
        for b in scene.obstacles[steps[-1]]:
            pts = " ".join(f"{_n(a)},{_n(c)}" for a, c in (view(x, y) for x, y in box_corners(b).vertices))
            parts.append(f'<polygon points="{pts}"/>')
        parts.append("</g>")
    parts.append(_polyline(np.vstack([origin, np.asarray(gt)[valid]]), view, "#2ca02c"))
    parts.append(_polyline(np.vstack([origin, np.asarray(pred)[valid]]), view, "#d62728", "6,3"))
    ex, ey = view(0.0, 0.0)
    parts.append(f'<circle cx="{_n(ex)}" cy="{_n(ey)}" r="3" fill="#000000"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
