import math

import numpy as np
import pytest

from mapplan.geometry import _geom_py
from mapplan.geometry._backend import compiled_kernels

BACKENDS = [pytest.param(_geom_py, id="python")]
if compiled_kernels is not None:
    BACKENDS.append(pytest.param(compiled_kernels, id="cython"))


@pytest.fixture(params=BACKENDS)
def kernels(request):
    return request.param


def in_oriented_box(px, py, cx, cy, length, width, heading):
    """Vectorized membership test in the box's own frame (independent of clipping)."""
    dx, dy = px - cx, py - cy
    c, s = math.cos(heading), math.sin(heading)
    u = c * dx + s * dy
    v = -s * dx + c * dy
    return (np.abs(u) <= 0.5 * length) & (np.abs(v) <= 0.5 * width)


def monte_carlo_overlap(a, b, n=1_000_000, seed=0):
    """Estimate the overlap area of two OrientedBox values.

    Samples uniformly inside the smaller box (whose area is known exactly)
    and counts the fraction that also falls inside the other box.
    """
    if b.length * b.width < a.length * a.width:
        a, b = b, a
    rng = np.random.default_rng(seed)
    u = rng.uniform(-0.5 * a.length, 0.5 * a.length, n)
    v = rng.uniform(-0.5 * a.width, 0.5 * a.width, n)
    c, s = math.cos(a.heading), math.sin(a.heading)
    px = a.center_x + c * u - s * v
    py = a.center_y + s * u + c * v
    hit = in_oriented_box(px, py, b.center_x, b.center_y, b.length, b.width, b.heading)
    return hit.mean() * a.length * a.width


def random_box_pair(rng):
    """Two oriented boxes with nearby centers, used by the overlap oracle checks."""
    from mapplan.geometry import OrientedBox

    def box():
        return OrientedBox(
            float(rng.uniform(-1, 1)),
            float(rng.uniform(-1, 1)),
            float(rng.uniform(1.0, 5.0)),
            float(rng.uniform(1.0, 3.0)),
            float(rng.uniform(-math.pi, math.pi)),
        )

    return box(), box()


def simple_scene(obstacles=None, gt=None, validity=None, drivable=None, headings=None, horizon=10, scene_id="t"):
    """Hand-built scene: straight road along +x unless overridden.

    ``obstacles`` maps a 0-based step to a list of OrientedBox values.
    """
    from mapplan.geometry import ConvexPolygon
    from mapplan.scenario import Command, PoseRecord, Scene

    if gt is None:
        gt = [(2.0 * (t + 1), 0.0) for t in range(horizon)]
    horizon = len(gt)
    if drivable is None:
        drivable = [ConvexPolygon(((-16.0, -4.0), (80.0, -4.0), (80.0, 4.0), (-16.0, 4.0)))]
    steps = [[] for _ in range(horizon)]
    for t, boxes in (obstacles or {}).items():
        steps[t] = list(boxes)
    return Scene(
        scene_id=scene_id,
        seed=0,
        kind="corridor",
        frame_dt=0.5,
        poses=tuple(PoseRecord(0.5 * i, 2.0 * i, 0.0, 0.0) for i in range(3)),
        commands=(Command.STRAIGHT,) * 3,
        drivable=tuple(drivable),
        lanes=(),
        crosswalks=(),
        obstacles=tuple(tuple(s) for s in steps),
        gt_trajectory=tuple((float(x), float(y)) for x, y in gt),
        gt_headings=tuple(headings if headings is not None else [0.0] * horizon),
        validity=tuple(bool(v) for v in (validity if validity is not None else [True] * horizon)),
    )


@pytest.fixture(scope="session")
def small_dims():
    from mapplan.dims import ModelDims

    return ModelDims(d_map=8, d_model=12, d_lin=6, d_cmd=4, n_layers=2, n_thing_queries=3, adapter_hidden=8)


@pytest.fixture(scope="session")
def sample0():
    from mapplan.data import prepare_sample
    from mapplan.scenario import ScenarioParams, generate_scenario

    for seed in range(50):
        s = generate_scenario(seed, ScenarioParams(n_obstacles=(2, 4)))
        if any(s.obstacles[0]):
            return prepare_sample(s)
    raise RuntimeError("no scene with obstacles")
