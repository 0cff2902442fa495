"""Synthetic corridor and intersection scenes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ScenarioError
from ..geometry import (
    ConvexPolygon,
    GridSpec,
    OrientedBox,
    box_corners,
    convex_intersection_area,
    rasterize,
)
from ..numerics import SeededRng
from .types import (
    DEFAULT_REGION_GRID,
    EGO_LENGTH,
    EGO_WIDTH,
    FRAME_DT,
    HORIZON,
    Command,
    PoseRecord,
    Scene,
)

TURN_THRESHOLD = 0.35  # rad of heading change over the horizon
_BACK = -14.0
_FAR = 90.0
_MAX_ATTEMPTS = 200


@dataclass(frozen=True)
class ScenarioParams:
    n_obstacles: tuple[int, int] = (0, 4)
    road_width: float = 7.0
    max_curvature: float = 0.01
    horizon: int = HORIZON
    frame_dt: float = FRAME_DT
    timestamp_jitter: float = 0.0
    speed_range: tuple[float, float] = (2.0, 9.0)
    accel_range: tuple[float, float] = (-0.8, 0.8)
    p_intersection: float = 0.5
    invalid_tail_prob: float = 0.2
    ego_length: float = EGO_LENGTH
    ego_width: float = EGO_WIDTH
    n_past_frames: int = 3
    region_grid: GridSpec = DEFAULT_REGION_GRID

    def validate(self) -> None:
        margin = self.region_grid.resolution
        if self.road_width < self.ego_width + 4 * margin:
            raise ScenarioError(
                f"road width {self.road_width} m cannot fit the ego (width {self.ego_width} m) with "
                f"{margin} m clearance per side in its lane"
            )
        lo, hi = self.n_obstacles
        if lo < 0 or hi < lo:
            raise ScenarioError(f"invalid obstacle count range {self.n_obstacles}")
        if self.horizon < 1:
            raise ScenarioError("horizon must be at least one step")
        if not self.frame_dt > 0:
            raise ScenarioError("frame interval must be positive")
        if not 0 <= self.timestamp_jitter < self.frame_dt:
            raise ScenarioError("timestamp jitter must lie in [0, frame_dt)")
        if self.speed_range[0] <= 0 or self.speed_range[1] < self.speed_range[0]:
            raise ScenarioError(f"invalid speed range {self.speed_range}")
        if self.max_curvature < 0:
            raise ScenarioError("curvature bound must be nonnegative")
        if self.n_past_frames < 3:
            raise ScenarioError("the pose log needs at least 3 frames")


class _Path:
    """Arc-length parameterized centerline ``s -> (x, y, heading)``."""

    def __init__(self, y0: float, kappa: float = 0.0, turn_start: float | None = None, radius: float = 0.0,
                 sign: int = 0) -> None:
        self.y0 = y0
        self.kappa = kappa
        self.turn_start = turn_start
        self.radius = radius
        self.sign = sign

    def __call__(self, s: float) -> tuple[float, float, float]:
        if self.turn_start is None:
            k = self.kappa
            if abs(k) < 1e-9:
                return s, self.y0 + 0.5 * k * s * s, k * s
            return math.sin(k * s) / k, self.y0 + (1.0 - math.cos(k * s)) / k, k * s
        xs, r, sg = self.turn_start, self.radius, self.sign
        if s <= xs:
            return s, self.y0, 0.0
        arc = 0.5 * math.pi * r
        if s <= xs + arc:
            phi = (s - xs) / r
            return xs + r * math.sin(phi), self.y0 + sg * r * (1.0 - math.cos(phi)), sg * phi
        rest = s - xs - arc
        return xs + r, self.y0 + sg * (r + rest), sg * 0.5 * math.pi


def _rect(x0: float, y0: float, x1: float, y1: float) -> ConvexPolygon:
    return ConvexPolygon(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))


def _strip(path: _Path, s0: float, s1: float, off_lo: float, off_hi: float, step: float = 6.0) -> list[ConvexPolygon]:
    """Quads following ``path`` between lateral offsets; consecutive quads share edges."""
    out = []
    n = max(1, math.ceil((s1 - s0) / step - 1e-9))
    ss = [float(v) for v in np.linspace(s0, s1, n + 1)]
    for a, b in zip(ss[:-1], ss[1:]):
        pts = []
        for s, offs in ((a, (off_lo, off_hi)), (b, (off_hi, off_lo))):
            x, y, h = path(s)
            nx, ny = -math.sin(h), math.cos(h)
            for o in offs:
                pts.append((x + o * nx, y + o * ny))
        out.append(ConvexPolygon((pts[0], pts[3], pts[2], pts[1])))
    return out


def _corridor(rng: SeededRng, p: ScenarioParams):
    w = p.road_width
    kappa = float(rng.uniform(-p.max_curvature, p.max_curvature))
    center = _Path(0.0, kappa)
    drivable = _strip(center, _BACK, _FAR, -0.5 * w, 0.5 * w)
    lanes = _strip(center, _BACK, _FAR, -0.15, 0.15)
    crosswalks = []
    if rng.random() < 0.5:
        sc = float(rng.uniform(8.0, 50.0))
        crosswalks = _strip(center, sc, sc + 3.0, -0.5 * w, 0.5 * w, step=3.0)
    return _Path(-0.25 * w, kappa), drivable, lanes, crosswalks


def _intersection(rng: SeededRng, p: ScenarioParams, travel: float, command: Command):
    w = p.road_width
    hw = 0.5 * w
    lane = -0.25 * w
    sign = {Command.LEFT: 1, Command.RIGHT: -1, Command.STRAIGHT: 0}[command]
    # right turns cut the near corner, so they need a tighter radius
    radius = float(rng.uniform(4.0, 8.0) if sign >= 0 else rng.uniform(2.5, 4.0))
    exit_x_offset = 0.25 * w if sign > 0 else -0.25 * w
    if sign:
        lo = 2.0 + radius - exit_x_offset
        hi = max(lo, 0.55 * travel + radius - exit_x_offset)
    else:
        lo, hi = 6.0, max(6.0, 0.8 * travel)
    xc = float(rng.uniform(lo, hi))
    drivable = [
        _rect(_BACK, -hw, xc - hw, hw),
        _rect(xc - hw, -hw, xc + hw, hw),
        _rect(xc - hw, hw, xc + hw, 60.0),
        _rect(xc - hw, -60.0, xc + hw, -hw),
        _rect(xc + hw, -hw, _FAR, hw),
    ]
    lanes = [
        _rect(_BACK, -0.15, xc - hw, 0.15),
        _rect(xc + hw, -0.15, _FAR, 0.15),
        _rect(xc - 0.15, hw, xc + 0.15, 60.0),
        _rect(xc - 0.15, -60.0, xc + 0.15, -hw),
    ]
    crosswalks = [
        _rect(xc - hw - 3.0, -hw, xc - hw - 1.0, hw),
        _rect(xc + hw + 1.0, -hw, xc + hw + 3.0, hw),
    ]
    if sign:
        path = _Path(lane, turn_start=xc + exit_x_offset - radius, radius=radius, sign=sign)
    else:
        path = _Path(lane)
    return path, drivable, lanes, crosswalks


def _classify(heading_change: float) -> Command:
    if heading_change > TURN_THRESHOLD:
        return Command.LEFT
    if heading_change < -TURN_THRESHOLD:
        return Command.RIGHT
    return Command.STRAIGHT


def _depth_ok(x: float, y: float, polys, margin: float) -> bool:
    """True when (x, y) and its four diagonal neighbours at ``margin`` are drivable."""
    probes = ((0.0, 0.0), (margin, margin), (margin, -margin), (-margin, margin), (-margin, -margin))
    return all(any(poly.contains(x + dx, y + dy) for poly in polys) for dx, dy in probes)


def generate_scenario(seed: int, params: ScenarioParams | None = None, scene_id: str | None = None) -> Scene:
    """Deterministic scene for ``seed``.

    Ground-truth waypoints sit at least one region cell inside the drivable
    area, and every obstacle keeps clear of an inflated ego footprint at
    every step, so the ground truth itself never collides or leaves the road.
    """
    p = params or ScenarioParams()
    p.validate()
    root = SeededRng(seed)
    for attempt in range(_MAX_ATTEMPTS):
        rng = root.stream(f"attempt-{attempt}")
        scene = _try_generate(rng, p, seed, scene_id or f"{seed:08d}")
        if scene is not None:
            return scene
    raise ScenarioError(f"no valid scene found for seed {seed} after {_MAX_ATTEMPTS} attempts")


def _try_generate(rng: SeededRng, p: ScenarioParams, seed: int, scene_id: str) -> Scene | None:
    T, dt = p.horizon, p.frame_dt
    v0 = float(rng.uniform(*p.speed_range))
    a = float(rng.uniform(*p.accel_range))
    a = max(a, (0.5 - v0) / (T * dt))
    travel = v0 * T * dt + 0.5 * a * (T * dt) ** 2

    if rng.random() < p.p_intersection:
        wanted = rng.choice([Command.LEFT, Command.STRAIGHT, Command.RIGHT])
        if wanted is not Command.STRAIGHT and travel < 12.0:
            return None
        path, drivable, lanes, crosswalks = _intersection(rng, p, travel, wanted)
        kind = "intersection"
    else:
        path, drivable, lanes, crosswalks = _corridor(rng, p)
        kind = "corridor"

    times = [(i + 1) * dt for i in range(T)]
    traj, heads = [], []
    for t in times:
        x, y, h = path(v0 * t + 0.5 * a * t * t)
        traj.append((x, y))
        heads.append(h)

    validity = [True] * T
    if rng.random() < p.invalid_tail_prob:
        k = int(rng.integers(1, 4))
        for i in range(max(0, T - k), T):
            validity[i] = False
    last_valid = max(i for i in range(T) if validity[i]) if any(validity) else T - 1
    command = _classify(heads[last_valid])
    if kind == "intersection" and command is not wanted:
        return None

    # frame shift: the lane-center path starts at y0; re-express everything so
    # the ego sits at the origin of its own frame.
    y_shift = -path.y0
    drivable = [d.translated(0.0, y_shift) for d in drivable]
    lanes = [d.translated(0.0, y_shift) for d in lanes]
    crosswalks = [d.translated(0.0, y_shift) for d in crosswalks]
    traj = [(x, y + y_shift) for x, y in traj]

    margin = p.region_grid.resolution
    x0, y0, x1, y1 = p.region_grid.bounds
    for x, y in traj:
        if not (x0 + margin <= x <= x1 - margin and y0 + margin <= y <= y1 - margin):
            return None
        if not _depth_ok(x, y, drivable, margin):
            return None
    mask = rasterize(drivable, p.region_grid)
    if not all(mask.contains(x, y) for x, y in traj):
        return None

    obstacles = _place_obstacles(rng, p, traj, heads)
    poses, commands = _pose_log(rng, p, v0, a, command)
    return Scene(
        scene_id=scene_id,
        seed=int(seed),
        kind=kind,
        frame_dt=dt,
        poses=tuple(poses),
        commands=tuple(commands),
        drivable=tuple(drivable),
        lanes=tuple(lanes),
        crosswalks=tuple(crosswalks),
        obstacles=obstacles,
        gt_trajectory=tuple(traj),
        gt_headings=tuple(heads),
        validity=tuple(validity),
    )


def _place_obstacles(rng: SeededRng, p: ScenarioParams, traj, heads) -> tuple[tuple[OrientedBox, ...], ...]:
    T, dt = p.horizon, p.frame_dt
    clearance = p.region_grid.resolution * math.sqrt(2.0) + 0.2
    ego = [
        box_corners(OrientedBox(x, y, p.ego_length + 2 * clearance, p.ego_width + 2 * clearance, h))
        for (x, y), h in zip(traj, heads)
    ]
    lo, hi = p.n_obstacles
    count = int(rng.integers(lo, hi + 1))
    tracks: list[list[OrientedBox]] = []
    for _ in range(count):
        for _attempt in range(60):
            j = int(rng.integers(0, T))
            u = float(rng.uniform(-8.0, 12.0))
            v = float(rng.uniform(-6.0, 6.0))
            hj = heads[j]
            cx = traj[j][0] + math.cos(hj) * u - math.sin(hj) * v
            cy = traj[j][1] + math.sin(hj) * u + math.cos(hj) * v
            heading = hj + (math.pi if rng.random() < 0.3 else 0.0) + float(rng.normal(0.0, 0.2))
            heading = math.atan2(math.sin(heading), math.cos(heading))
            speed = 0.0 if rng.random() < 0.4 else float(rng.uniform(1.0, 8.0))
            length = float(rng.uniform(3.6, 5.0))
            width = float(rng.uniform(1.6, 2.0))
            track = []
            for i in range(T):
                d = speed * (i - j) * dt
                track.append(OrientedBox(cx + d * math.cos(heading), cy + d * math.sin(heading), length, width, heading))
            if all(convex_intersection_area(ego[i], box_corners(track[i])) == 0.0 for i in range(T)):
                tracks.append(track)
                break
    return tuple(tuple(track[i] for track in tracks) for i in range(T))


def _pose_log(rng: SeededRng, p: ScenarioParams, v0: float, a: float, command: Command):
    """Past-and-current global poses of a vehicle driving straight into the scene."""
    yaw = float(rng.uniform(-0.1, 0.1))
    gx = float(rng.uniform(-500.0, 500.0))
    gy = float(rng.uniform(-500.0, 500.0))
    t_now = float(rng.uniform(100.0, 1000.0))
    n = p.n_past_frames
    offsets = [0.0]
    for _ in range(n - 1):
        gap = p.frame_dt + (float(rng.uniform(-p.timestamp_jitter, p.timestamp_jitter)) if p.timestamp_jitter else 0.0)
        offsets.append(offsets[-1] - gap)
    offsets.reverse()
    poses = []
    for tau in offsets:
        s = v0 * tau + 0.5 * a * tau * tau
        poses.append(PoseRecord(t_now + tau, gx + math.cos(yaw) * s, gy + math.sin(yaw) * s, yaw))
    return poses, [command] * n
