import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import in_oriented_box, monte_carlo_overlap, random_box_pair
from mapplan.errors import GeometryError
from mapplan.geometry import (
    AxisBox,
    ConvexPolygon,
    GridSpec,
    OrientedBox,
    RegionMask,
    box_corners,
    clip_to,
    convex_intersection_area,
    convex_intersection_area_grad,
    giou,
    point_in_mask,
    rasterize,
    signed_distance,
)


def _vertex_set(poly, nd=9):
    return {(round(x, nd) + 0.0, round(y, nd) + 0.0) for x, y in poly.vertices}


def unit_square(x=0.0, y=0.0):
    return ConvexPolygon(((x, y), (x + 1, y), (x + 1, y + 1), (x, y + 1)))


boxes = st.builds(
    OrientedBox,
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(0.2, 6),
    st.floats(0.2, 4),
    st.floats(-math.pi, math.pi),
)


# --- corners -----------------------------------------------------------------


def test_corners_square():
    got = _vertex_set(box_corners(OrientedBox(0, 0, 2, 2, 0)))
    assert got == {(1, 1), (-1, 1), (-1, -1), (1, -1)}


def test_corners_square_quarter_turn():
    assert _vertex_set(box_corners(OrientedBox(0, 0, 2, 2, math.pi / 2))) == _vertex_set(
        box_corners(OrientedBox(0, 0, 2, 2, 0))
    )


def test_corners_long_box_quarter_turn():
    got = _vertex_set(box_corners(OrientedBox(0, 0, 4, 2, math.pi / 2)))
    assert got == {(1, 2), (-1, 2), (-1, -2), (1, -2)}


@given(boxes)
def test_corners_half_turn_symmetry(b):
    flipped = OrientedBox(b.center_x, b.center_y, b.length, b.width, b.heading + math.pi)
    assert _vertex_set(box_corners(b), 6) == _vertex_set(box_corners(flipped), 6)


@given(boxes)
def test_corner_polygon_area(b):
    assert box_corners(b).area == pytest.approx(b.length * b.width, abs=1e-9)


def test_bad_boxes():
    with pytest.raises(GeometryError):
        OrientedBox(0, 0, 0, 1, 0)
    with pytest.raises(GeometryError):
        OrientedBox(0, 0, 1, 1, float("nan"))


def test_polygon_normalized_ccw():
    cw = ConvexPolygon(((0, 0), (0, 1), (1, 1), (1, 0)))
    assert cw.area == pytest.approx(1.0)
    xs, ys = cw.xs, cw.ys
    assert np.sum(xs * np.roll(ys, -1) - np.roll(xs, -1) * ys) > 0


def test_polygon_rejects_nonconvex_and_degenerate():
    with pytest.raises(GeometryError):
        ConvexPolygon(((0, 0), (2, 0), (1, 0.2), (1, 2)))
    with pytest.raises(GeometryError):
        ConvexPolygon(((0, 0), (1, 1), (2, 2)))
    with pytest.raises(GeometryError):
        ConvexPolygon(((0, 0), (1, 0), (1, 0)))


# --- intersection area -------------------------------------------------------


def test_area_identical_squares():
    assert convex_intersection_area(unit_square(), unit_square()) == pytest.approx(1.0, abs=1e-12)


def test_area_far_apart():
    assert convex_intersection_area(unit_square(), unit_square(10, 0)) == 0.0


def test_area_half_overlap():
    assert convex_intersection_area(unit_square(), unit_square(0.5, 0)) == pytest.approx(0.5, abs=1e-12)


def test_area_touching_is_zero():
    assert convex_intersection_area(unit_square(), unit_square(1, 0)) == pytest.approx(0.0, abs=1e-12)


def test_area_rotated_square_against_monte_carlo():
    a = OrientedBox(0.5, 0.5, 1, 1, 0)
    b = OrientedBox(0.5, 0.5, 1, 1, math.pi / 4)
    exact = convex_intersection_area(box_corners(a), box_corners(b))
    assert exact == pytest.approx(2 * (math.sqrt(2) - 1), abs=1e-12)
    assert abs(exact - monte_carlo_overlap(a, b)) / exact < 1e-2


def test_area_random_pairs_against_monte_carlo():
    rng = np.random.default_rng(11)
    for k in range(10):
        a, b = random_box_pair(rng)
        exact = convex_intersection_area(box_corners(a), box_corners(b))
        mc = monte_carlo_overlap(a, b, n=400_000, seed=k)
        if exact < 0.1:
            assert abs(exact - mc) < 1e-3
        else:
            assert abs(exact - mc) / exact < 1e-2


@settings(max_examples=60)
@given(boxes, boxes)
def test_area_properties(a, b):
    pa, pb = box_corners(a), box_corners(b)
    ab = convex_intersection_area(pa, pb)
    assert ab == pytest.approx(convex_intersection_area(pb, pa), abs=1e-9)
    assert ab <= min(pa.area, pb.area) + 1e-9
    assert ab >= 0.0


@given(boxes)
def test_area_self(a):
    pa = box_corners(a)
    assert convex_intersection_area(pa, pa) == pytest.approx(pa.area, abs=1e-9)


@given(boxes, boxes, st.floats(-50, 50), st.floats(-50, 50))
def test_area_translation_invariant(a, b, tx, ty):
    pa, pb = box_corners(a), box_corners(b)
    moved = convex_intersection_area(pa.translated(tx, ty), pb.translated(tx, ty))
    assert moved == pytest.approx(convex_intersection_area(pa, pb), abs=1e-9)


def test_area_grad_half_overlap():
    area, gx, gy = convex_intersection_area_grad(unit_square(0.5, 0), unit_square())
    assert area == pytest.approx(0.5)
    # moving right shrinks the overlap at unit rate
    assert gx == pytest.approx(-1.0)
    assert gy == pytest.approx(0.0, abs=1e-12)


def test_area_grad_matches_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-6
    for _ in range(30):
        a, b = random_box_pair(rng)
        pa, pb = box_corners(a), box_corners(b)
        _, gx, gy = convex_intersection_area_grad(pa, pb)
        fx = (convex_intersection_area(pa.translated(h, 0), pb) - convex_intersection_area(pa.translated(-h, 0), pb)) / (
            2 * h
        )
        fy = (convex_intersection_area(pa.translated(0, h), pb) - convex_intersection_area(pa.translated(0, -h), pb)) / (
            2 * h
        )
        assert gx == pytest.approx(fx, abs=1e-5)
        assert gy == pytest.approx(fy, abs=1e-5)


# --- backends ----------------------------------------------------------------


def test_backend_parity(kernels):
    from mapplan.geometry import _geom_py

    rng = np.random.default_rng(5)
    for _ in range(50):
        a, b = random_box_pair(rng)
        pa, pb = box_corners(a), box_corners(b)
        ref = _geom_py.intersection_area_grad(pa.xs, pa.ys, pb.xs, pb.ys)
        got = kernels.intersection_area_grad(pa.xs, pa.ys, pb.xs, pb.ys)
        np.testing.assert_allclose(got, ref, rtol=0, atol=1e-12)
        px, py = rng.uniform(-4, 4, 2)
        np.testing.assert_allclose(
            kernels.signed_distance(px, py, pa.xs, pa.ys),
            _geom_py.signed_distance(px, py, pa.xs, pa.ys),
            atol=1e-12,
        )


def test_backend_raster_parity(kernels):
    from mapplan.geometry import _geom_py

    g = GridSpec(-5, -5, 0.25, 40, 40)
    rng = np.random.default_rng(8)
    for _ in range(10):
        a, _ = random_box_pair(rng)
        p = box_corners(a)
        ref = np.zeros((g.rows, g.cols), dtype=np.uint8)
        got = np.zeros((g.rows, g.cols), dtype=np.uint8)
        _geom_py.rasterize_convex(p.xs, p.ys, g.origin_x, g.origin_y, g.resolution, ref)
        kernels.rasterize_convex(p.xs, p.ys, g.origin_x, g.origin_y, g.resolution, got)
        assert np.array_equal(ref, got)


# --- signed distance ---------------------------------------------------------


def test_signed_distance_examples():
    sq = unit_square()
    d, gx, gy = signed_distance(0.5, 0.25, sq)
    assert (d, gx, gy) == pytest.approx((-0.25, 0.0, -1.0))
    d, gx, gy = signed_distance(2.0, 0.5, sq)
    assert (d, gx, gy) == pytest.approx((1.0, 1.0, 0.0))
    d, _, _ = signed_distance(2.0, 2.0, sq)
    assert d == pytest.approx(math.sqrt(2))


def test_signed_distance_sign_matches_membership():
    rng = np.random.default_rng(9)
    b = OrientedBox(0.3, -0.2, 3.0, 1.5, 0.7)
    p = box_corners(b)
    pts = rng.uniform(-3, 3, (500, 2))
    inside = in_oriented_box(pts[:, 0], pts[:, 1], b.center_x, b.center_y, b.length, b.width, b.heading)
    d = np.array([signed_distance(x, y, p)[0] for x, y in pts])
    assert np.array_equal(d <= 0, inside)


# --- giou --------------------------------------------------------------------


def test_giou_examples():
    assert giou(AxisBox(0, 0, 1, 1), AxisBox(0, 0, 1, 1)) == pytest.approx(1.0)
    assert giou(AxisBox(0, 0, 1, 1), AxisBox(1, 0, 2, 1)) == pytest.approx(0.0, abs=1e-12)
    assert abs(giou(AxisBox(0, 0, 1, 1), AxisBox(2, 2, 3, 3)) + 7 / 9) < 1e-9


def test_giou_zero_area():
    with pytest.raises(GeometryError):
        giou(AxisBox(0, 0, 0, 1), AxisBox(0, 0, 1, 1))


axis_boxes = st.builds(
    lambda x, y, w, h: AxisBox(x, y, x + w, y + h),
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(0.1, 4),
    st.floats(0.1, 4),
)


@given(axis_boxes, axis_boxes)
def test_giou_properties(a, b):
    g = giou(a, b)
    assert g == pytest.approx(giou(b, a), abs=1e-12)
    iw = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    ih = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    iou = iw * ih / (a.area + b.area - iw * ih)
    assert -1.0 < g <= iou + 1e-12


# --- grids and masks ---------------------------------------------------------


def test_cell_round_trip():
    g = GridSpec(-3.0, 2.0, 0.5, 7, 9)
    for r in range(g.rows):
        for c in range(g.cols):
            assert g.cell_of(*g.center_of(r, c)) == (r, c)


def test_point_in_mask_examples():
    g = GridSpec(0, 0, 1, 10, 10)
    full = RegionMask(g, np.ones((10, 10), bool))
    assert point_in_mask((5.5, 5.5), full)
    empty = RegionMask(g, np.zeros((10, 10), bool))
    assert not point_in_mask((5.5, 5.5), empty)
    assert not point_in_mask((500, 5), empty)


def test_point_on_cell_boundary_uses_floor():
    g = GridSpec(0, 0, 1, 4, 4)
    bits = np.zeros((4, 4), bool)
    bits[1, 2] = True
    m = RegionMask(g, bits)
    # (2, 1) is the lower-left corner of cell (row 1, col 2)
    assert point_in_mask((2.0, 1.0), m)
    assert not point_in_mask((2.0 - 1e-12, 1.0), m)
    assert point_in_mask((2.0, 1.0), m) == point_in_mask((2.0, 1.0), m)


def test_off_grid_follows_outside_flag():
    g = GridSpec(0, 0, 1, 4, 4)
    drivable = rasterize([ConvexPolygon(((0, 0), (4, 0), (4, 4), (0, 4)))], g)
    undrivable = drivable.complement()
    assert point_in_mask((-1, -1), undrivable)
    assert not point_in_mask((1.5, 1.5), undrivable)
    obstacles = rasterize([], g)
    assert not point_in_mask((-1, -1), obstacles)


def test_mask_lookup_matches_point_test():
    g = GridSpec(-2, -2, 0.5, 8, 8)
    rng = np.random.default_rng(0)
    m = RegionMask(g, rng.random((8, 8)) < 0.5, outside=True)
    pts = rng.uniform(-3, 3, (300, 2))
    assert np.array_equal(m.lookup(pts[:, 0], pts[:, 1]), [point_in_mask(tuple(p), m) for p in pts])


def test_double_complement():
    g = GridSpec(0, 0, 1, 3, 3)
    m = RegionMask(g, np.eye(3, dtype=bool))
    assert m.complement().complement() == m
    assert m.count() == 3


def test_rasterize_full_and_empty():
    g = GridSpec(0, 0, 1, 10, 10)
    cover = ConvexPolygon(((-1, -1), (11, -1), (11, 11), (-1, 11)))
    assert rasterize([cover], g).count() == 100
    assert rasterize([], g).count() == 0


def test_rasterize_half_plane():
    g = GridSpec(0, 0, 1, 100, 100)
    left = ConvexPolygon(((-10, -10), (50, -10), (50, 110), (-10, 110)))
    assert abs(rasterize([left], g).count() / 10_000 - 0.5) <= 0.01


def test_rasterize_boundary_inclusive():
    g = GridSpec(0, 0, 1, 3, 3)
    # right edge passes exactly through the centers of column 1
    p = ConvexPolygon(((0, 0), (1.5, 0), (1.5, 3), (0, 3)))
    assert rasterize([p], g).bits[:, 1].all()


def test_rasterize_monotone():
    g = GridSpec(-5, -5, 0.5, 20, 20)
    rng = np.random.default_rng(2)
    polys = []
    prev = rasterize(polys, g)
    for _ in range(8):
        a, _ = random_box_pair(rng)
        polys.append(box_corners(a).translated(*rng.uniform(-3, 3, 2)))
        cur = rasterize(polys, g)
        assert np.all(cur.bits >= prev.bits)
        prev = cur


def test_rasterize_matches_center_membership():
    g = GridSpec(-4, -4, 0.25, 32, 32)
    b = OrientedBox(0.1, 0.2, 3.0, 2.0, 0.4)
    m = rasterize([box_corners(b)], g)
    cx, cy = g.cell_centers()
    assert np.array_equal(m.bits, in_oriented_box(cx, cy, 0.1, 0.2, 3.0, 2.0, 0.4))


def test_clip_to():
    got = clip_to(unit_square(0.5, 0.5), unit_square())
    assert got.area == pytest.approx(0.25)
    assert clip_to(unit_square(5, 5), unit_square()) is None


def test_box_overlap_grad_matches_world_frame_clipping():
    from mapplan.geometry import box_overlap_grad

    rng = np.random.default_rng(21)
    for _ in range(50):
        a, b = random_box_pair(rng)
        area, gx, gy = box_overlap_grad(a, b)
        wa, wgx, wgy = convex_intersection_area_grad(box_corners(a), box_corners(b))
        assert area == pytest.approx(wa, abs=1e-9)
        assert (gx, gy) == pytest.approx((wgx, wgy), abs=1e-7)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-math.pi, math.pi))
def test_box_overlap_coincident_is_exact(x, y, h):
    from mapplan.geometry import box_overlap_grad

    b = OrientedBox(x, y, 4.0, 1.8, h)
    assert box_overlap_grad(b, b)[0] == 4.0 * 1.8
