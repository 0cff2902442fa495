# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled geometry kernels. Mirrors ``_geom_py`` function by function.

Polygons arrive as two float64 coordinate arrays with counterclockwise
vertex order and no repeated closing vertex.
"""

from libc.math cimport sqrt, floor, ceil

import numpy as np

cdef enum:
    MAXV = 64

cdef double EDGE_TOL = 1e-12


cdef inline double _cross(double ax, double ay, double bx, double by) nogil:
    return ax * by - ay * bx


cdef int _clip(const double[:] ax, const double[:] ay, const double[:] bx, const double[:] by,
               double* outx, double* outy) nogil:
    """Sutherland-Hodgman: clip polygon a by every edge of b. Returns vertex count."""
    cdef double bufx[2][MAXV]
    cdef double bufy[2][MAXV]
    cdef int n = ax.shape[0]
    cdef int m = bx.shape[0]
    cdef int i, j, k, src = 0, dst, cnt
    cdef double ex, ey, px, py, qx, qy, dp, dq, t
    if n > MAXV // 2 or m > MAXV // 2:
        return -1
    for i in range(n):
        bufx[0][i] = ax[i]
        bufy[0][i] = ay[i]
    for j in range(m):
        if n == 0:
            break
        ex = bx[(j + 1) % m] - bx[j]
        ey = by[(j + 1) % m] - by[j]
        dst = 1 - src
        cnt = 0
        for k in range(n):
            px = bufx[src][k]
            py = bufy[src][k]
            qx = bufx[src][(k + 1) % n]
            qy = bufy[src][(k + 1) % n]
            dp = _cross(ex, ey, px - bx[j], py - by[j])
            dq = _cross(ex, ey, qx - bx[j], qy - by[j])
            if dp >= 0:
                bufx[dst][cnt] = px
                bufy[dst][cnt] = py
                cnt += 1
                if dq < 0:
                    t = dp / (dp - dq)
                    bufx[dst][cnt] = px + t * (qx - px)
                    bufy[dst][cnt] = py + t * (qy - py)
                    cnt += 1
            elif dq >= 0:
                t = dp / (dp - dq)
                bufx[dst][cnt] = px + t * (qx - px)
                bufy[dst][cnt] = py + t * (qy - py)
                cnt += 1
        n = cnt
        src = dst
    for i in range(n):
        outx[i] = bufx[src][i]
        outy[i] = bufy[src][i]
    return n


cdef double _shoelace(double* xs, double* ys, int n) nogil:
    cdef double s = 0.0
    cdef int i
    if n < 3:
        return 0.0
    for i in range(n):
        s += xs[i] * ys[(i + 1) % n] - xs[(i + 1) % n] * ys[i]
    return 0.5 * s


def clip_polygon(const double[:] ax, const double[:] ay, const double[:] bx, const double[:] by):
    cdef double outx[MAXV]
    cdef double outy[MAXV]
    cdef int n = _clip(ax, ay, bx, by, outx, outy)
    if n < 0:
        raise ValueError("polygon has too many vertices for the compiled kernel")
    return np.array([outx[i] for i in range(n)]), np.array([outy[i] for i in range(n)])


def intersection_area(const double[:] ax, const double[:] ay, const double[:] bx, const double[:] by):
    cdef double outx[MAXV]
    cdef double outy[MAXV]
    cdef int n = _clip(ax, ay, bx, by, outx, outy)
    cdef double area
    if n < 0:
        raise ValueError("polygon has too many vertices for the compiled kernel")
    area = _shoelace(outx, outy, n)
    return area if area > 0.0 else 0.0


cdef double _segment_inside_fraction(double px, double py, double qx, double qy,
                                     const double[:] bx, const double[:] by) nogil:
    """Length fraction of segment p->q inside convex b (Cyrus-Beck)."""
    cdef int m = bx.shape[0]
    cdef int j
    cdef double t0 = 0.0, t1 = 1.0, ex, ey, dp, dq, t
    for j in range(m):
        ex = bx[(j + 1) % m] - bx[j]
        ey = by[(j + 1) % m] - by[j]
        dp = _cross(ex, ey, px - bx[j], py - by[j])
        dq = _cross(ex, ey, qx - bx[j], qy - by[j])
        if dp < 0 and dq < 0:
            return 0.0
        if dp >= 0 and dq >= 0:
            continue
        t = dp / (dp - dq)
        if dp < 0:
            if t > t0:
                t0 = t
        else:
            if t < t1:
                t1 = t
        if t1 <= t0:
            return 0.0
    return t1 - t0


def intersection_area_grad(const double[:] ax, const double[:] ay, const double[:] bx, const double[:] by):
    """Area of a & b and its gradient with respect to translating a."""
    cdef double outx[MAXV]
    cdef double outy[MAXV]
    cdef int n = _clip(ax, ay, bx, by, outx, outy)
    cdef int na = ax.shape[0]
    cdef int k
    cdef double area, gx = 0.0, gy = 0.0, dx, dy, frac
    if n < 0:
        raise ValueError("polygon has too many vertices for the compiled kernel")
    area = _shoelace(outx, outy, n)
    if area <= 0.0:
        return 0.0, 0.0, 0.0
    for k in range(na):
        dx = ax[(k + 1) % na] - ax[k]
        dy = ay[(k + 1) % na] - ay[k]
        frac = _segment_inside_fraction(ax[k], ay[k], ax[(k + 1) % na], ay[(k + 1) % na], bx, by)
        gx += dy * frac
        gy -= dx * frac
    return area, gx, gy


def signed_distance(double px, double py, const double[:] xs, const double[:] ys):
    """Signed distance (negative inside) from a point to a convex polygon, with its gradient."""
    cdef int n = xs.shape[0]
    cdef int k, kbest = 0
    cdef double ex, ey, L, s, smin = 1e300
    cdef double best = 1e300, bx = 0.0, by = 0.0, t, cx, cy, d2
    cdef bint inside = True
    for k in range(n):
        ex = xs[(k + 1) % n] - xs[k]
        ey = ys[(k + 1) % n] - ys[k]
        L = sqrt(ex * ex + ey * ey)
        s = _cross(ex, ey, px - xs[k], py - ys[k]) / L
        if s < 0:
            inside = False
        if s < smin:
            smin = s
            kbest = k
    if inside:
        ex = xs[(kbest + 1) % n] - xs[kbest]
        ey = ys[(kbest + 1) % n] - ys[kbest]
        L = sqrt(ex * ex + ey * ey)
        return -smin, ey / L, -ex / L
    for k in range(n):
        ex = xs[(k + 1) % n] - xs[k]
        ey = ys[(k + 1) % n] - ys[k]
        t = ((px - xs[k]) * ex + (py - ys[k]) * ey) / (ex * ex + ey * ey)
        if t < 0:
            t = 0
        elif t > 1:
            t = 1
        cx = xs[k] + t * ex
        cy = ys[k] + t * ey
        d2 = (px - cx) * (px - cx) + (py - cy) * (py - cy)
        if d2 < best:
            best = d2
            bx = cx
            by = cy
    L = sqrt(best)
    return L, (px - bx) / L, (py - by) / L


def rasterize_convex(const double[:] xs, const double[:] ys, double origin_x, double origin_y,
                     double resolution, unsigned char[:, :] out):
    """Set ``out[r, c]`` for every cell whose center lies in the polygon (boundary inclusive)."""
    cdef int rows = out.shape[0]
    cdef int cols = out.shape[1]
    cdef int n = xs.shape[0]
    cdef int k, r, c, r0, r1, c0, c1
    cdef double xmin = xs[0], xmax = xs[0], ymin = ys[0], ymax = ys[0]
    cdef double cx, cy, ex, ey, scale
    cdef bint ok
    for k in range(1, n):
        xmin = min(xmin, xs[k])
        xmax = max(xmax, xs[k])
        ymin = min(ymin, ys[k])
        ymax = max(ymax, ys[k])
    scale = max(1.0, max(xmax - xmin, ymax - ymin))
    c0 = <int>max(0.0, floor((xmin - origin_x) / resolution - 0.5))
    c1 = <int>min(cols - 1.0, ceil((xmax - origin_x) / resolution - 0.5))
    r0 = <int>max(0.0, floor((ymin - origin_y) / resolution - 0.5))
    r1 = <int>min(rows - 1.0, ceil((ymax - origin_y) / resolution - 0.5))
    with nogil:
        for r in range(r0, r1 + 1):
            cy = origin_y + (r + 0.5) * resolution
            for c in range(c0, c1 + 1):
                cx = origin_x + (c + 0.5) * resolution
                ok = True
                for k in range(n):
                    ex = xs[(k + 1) % n] - xs[k]
                    ey = ys[(k + 1) % n] - ys[k]
                    if _cross(ex, ey, cx - xs[k], cy - ys[k]) < -EDGE_TOL * scale * scale:
                        ok = False
                        break
                if ok:
                    out[r, c] = 1
