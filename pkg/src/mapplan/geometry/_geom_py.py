"""Pure-Python geometry kernels, the fallback for the compiled ``_geom``.

Same signatures and arithmetic order as the extension so both backends
agree to the last bit on the clipping and signed-distance paths.
"""

from __future__ import annotations

import math

import numpy as np

EDGE_TOL = 1e-12


def _clip(ax, ay, bx, by):
    px = [float(v) for v in ax]
    py = [float(v) for v in ay]
    bx = [float(v) for v in bx]
    by = [float(v) for v in by]
    m = len(bx)
    for j in range(m):
        n = len(px)
        if n == 0:
            break
        x0, y0 = bx[j], by[j]
        ex = bx[(j + 1) % m] - x0
        ey = by[(j + 1) % m] - y0
        nx, ny = [], []
        for k in range(n):
            x1, y1 = px[k], py[k]
            x2, y2 = px[(k + 1) % n], py[(k + 1) % n]
            dp = ex * (y1 - y0) - ey * (x1 - x0)
            dq = ex * (y2 - y0) - ey * (x2 - x0)
            if dp >= 0:
                nx.append(x1)
                ny.append(y1)
                if dq < 0:
                    t = dp / (dp - dq)
                    nx.append(x1 + t * (x2 - x1))
                    ny.append(y1 + t * (y2 - y1))
            elif dq >= 0:
                t = dp / (dp - dq)
                nx.append(x1 + t * (x2 - x1))
                ny.append(y1 + t * (y2 - y1))
        px, py = nx, ny
    return px, py


def _shoelace(xs, ys) -> float:
    n = len(xs)
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        s += xs[i] * ys[(i + 1) % n] - xs[(i + 1) % n] * ys[i]
    return 0.5 * s


def clip_polygon(ax, ay, bx, by):
    xs, ys = _clip(ax, ay, bx, by)
    return np.array(xs), np.array(ys)


def intersection_area(ax, ay, bx, by) -> float:
    area = _shoelace(*_clip(ax, ay, bx, by))
    return area if area > 0.0 else 0.0


def _segment_inside_fraction(px, py, qx, qy, bx, by) -> float:
    m = len(bx)
    t0, t1 = 0.0, 1.0
    for j in range(m):
        ex = bx[(j + 1) % m] - bx[j]
        ey = by[(j + 1) % m] - by[j]
        dp = ex * (py - by[j]) - ey * (px - bx[j])
        dq = ex * (qy - by[j]) - ey * (qx - bx[j])
        if dp < 0 and dq < 0:
            return 0.0
        if dp >= 0 and dq >= 0:
            continue
        t = dp / (dp - dq)
        if dp < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t1 <= t0:
            return 0.0
    return t1 - t0


def intersection_area_grad(ax, ay, bx, by):
    area = _shoelace(*_clip(ax, ay, bx, by))
    if area <= 0.0:
        return 0.0, 0.0, 0.0
    ax = [float(v) for v in ax]
    ay = [float(v) for v in ay]
    bx = [float(v) for v in bx]
    by = [float(v) for v in by]
    na = len(ax)
    gx = gy = 0.0
    for k in range(na):
        dx = ax[(k + 1) % na] - ax[k]
        dy = ay[(k + 1) % na] - ay[k]
        frac = _segment_inside_fraction(ax[k], ay[k], ax[(k + 1) % na], ay[(k + 1) % na], bx, by)
        gx += dy * frac
        gy -= dx * frac
    return area, gx, gy


def signed_distance(px, py, xs, ys):
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    px, py = float(px), float(py)
    n = len(xs)
    inside = True
    smin, kbest = 1e300, 0
    for k in range(n):
        ex = xs[(k + 1) % n] - xs[k]
        ey = ys[(k + 1) % n] - ys[k]
        s = (ex * (py - ys[k]) - ey * (px - xs[k])) / math.sqrt(ex * ex + ey * ey)
        if s < 0:
            inside = False
        if s < smin:
            smin, kbest = s, k
    if inside:
        ex = xs[(kbest + 1) % n] - xs[kbest]
        ey = ys[(kbest + 1) % n] - ys[kbest]
        L = math.sqrt(ex * ex + ey * ey)
        return -smin, ey / L, -ex / L
    best, cx_best, cy_best = 1e300, 0.0, 0.0
    for k in range(n):
        ex = xs[(k + 1) % n] - xs[k]
        ey = ys[(k + 1) % n] - ys[k]
        t = ((px - xs[k]) * ex + (py - ys[k]) * ey) / (ex * ex + ey * ey)
        t = min(1.0, max(0.0, t))
        cx = xs[k] + t * ex
        cy = ys[k] + t * ey
        d2 = (px - cx) * (px - cx) + (py - cy) * (py - cy)
        if d2 < best:
            best, cx_best, cy_best = d2, cx, cy
    L = math.sqrt(best)
    return L, (px - cx_best) / L, (py - cy_best) / L


def rasterize_convex(xs, ys, origin_x, origin_y, resolution, out) -> None:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    rows, cols = out.shape
    xmin, xmax, ymin, ymax = xs.min(), xs.max(), ys.min(), ys.max()
    scale = max(1.0, max(xmax - xmin, ymax - ymin))
    c0 = int(max(0.0, math.floor((xmin - origin_x) / resolution - 0.5)))
    c1 = int(min(cols - 1.0, math.ceil((xmax - origin_x) / resolution - 0.5)))
    r0 = int(max(0.0, math.floor((ymin - origin_y) / resolution - 0.5)))
    r1 = int(min(rows - 1.0, math.ceil((ymax - origin_y) / resolution - 0.5)))
    if r1 < r0 or c1 < c0:
        return
    cy = origin_y + (np.arange(r0, r1 + 1) + 0.5) * resolution
    cx = origin_x + (np.arange(c0, c1 + 1) + 0.5) * resolution
    CX, CY = np.meshgrid(cx, cy)
    ok = np.ones(CX.shape, dtype=bool)
    n = len(xs)
    for k in range(n):
        ex = xs[(k + 1) % n] - xs[k]
        ey = ys[(k + 1) % n] - ys[k]
        ok &= (ex * (CY - ys[k]) - ey * (CX - xs[k])) >= -EDGE_TOL * scale * scale
    out[r0 : r1 + 1, c0 : c1 + 1] |= ok.astype(out.dtype)
