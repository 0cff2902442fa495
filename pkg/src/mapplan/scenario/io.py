"""Line-oriented scenario files.

Layout (one record per line, whitespace separated, reals written with
``repr`` so they read back bit-exactly)::

    mapplan-scene 1
    id <scene id>
    seed <int>
    kind <corridor|intersection>
    frame_dt <real>
    horizon <T>
    pose <t> <x> <y> <heading> <LEFT|STRAIGHT|RIGHT>     (oldest first, >= 3)
    drivable <n> <x1> <y1> ... <xn> <yn>                 (repeatable)
    lane <n> ...                                         (repeatable)
    crosswalk <n> ...                                    (repeatable)
    obstacle <step> <cx> <cy> <length> <width> <heading> (step in 1..T)
    gt <step> <x> <y> <heading> <0|1>                    (every step 1..T once)
    end

Blank lines and lines starting with ``#`` are ignored. Any other key is
rejected by name.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

from ..errors import GeometryError, ScenarioParseError
from ..geometry import ConvexPolygon, OrientedBox
from .types import Command, PoseRecord, Scene

MAGIC = "mapplan-scene"
VERSION = 1
_SCALARS = ("id", "seed", "kind", "frame_dt", "horizon")
_KEYS = set(_SCALARS) | {"pose", "drivable", "lane", "crosswalk", "obstacle", "gt", "end"}


def _r(v: float) -> str:
    return repr(float(v))


def _poly_line(key: str, poly: ConvexPolygon) -> str:
    coords = " ".join(f"{_r(x)} {_r(y)}" for x, y in poly.vertices)
    return f"{key} {len(poly.vertices)} {coords}"


def dumps(scene: Scene) -> str:
    lines = [
        f"{MAGIC} {VERSION}",
        f"id {scene.scene_id}",
        f"seed {scene.seed}",
        f"kind {scene.kind}",
        f"frame_dt {_r(scene.frame_dt)}",
        f"horizon {scene.horizon}",
    ]
    for pose, cmd in zip(scene.poses, scene.commands):
        lines.append(f"pose {_r(pose.t)} {_r(pose.x)} {_r(pose.y)} {_r(pose.heading)} {cmd.name}")
    lines += [_poly_line("drivable", p) for p in scene.drivable]
    lines += [_poly_line("lane", p) for p in scene.lanes]
    lines += [_poly_line("crosswalk", p) for p in scene.crosswalks]
    for i, step in enumerate(scene.obstacles, start=1):
        for b in step:
            lines.append(
                f"obstacle {i} {_r(b.center_x)} {_r(b.center_y)} {_r(b.length)} {_r(b.width)} {_r(b.heading)}"
            )
    for i, ((x, y), h, m) in enumerate(zip(scene.gt_trajectory, scene.gt_headings, scene.validity), start=1):
        lines.append(f"gt {i} {_r(x)} {_r(y)} {_r(h)} {int(m)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_scenario(scene: Scene, path: str | os.PathLike) -> None:
    Path(path).write_text(dumps(scene), encoding="utf-8")


def load_scenario(path: str | os.PathLike) -> Scene:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ScenarioParseError(f"{path}: not a UTF-8 text file") from exc
    return loads(text)


def _real(tok: str, line: int, field: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ScenarioParseError(f"expected a real number, got {tok!r}", line, field) from None
    if not math.isfinite(v):
        raise ScenarioParseError(f"non-finite value {tok!r}", line, field)
    return v


def _int(tok: str, line: int, field: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ScenarioParseError(f"expected an integer, got {tok!r}", line, field) from None


def _arity(toks: list[str], n: int, line: int, field: str) -> None:
    if len(toks) != n:
        raise ScenarioParseError(f"expected {n} values, got {len(toks)}", line, field)


def _poly(toks: list[str], line: int, field: str) -> ConvexPolygon:
    if not toks:
        raise ScenarioParseError("missing vertex count", line, field)
    n = _int(toks[0], line, field)
    _arity(toks[1:], 2 * n, line, field)
    vals = [_real(t, line, field) for t in toks[1:]]
    try:
        return ConvexPolygon(tuple(zip(vals[0::2], vals[1::2])))
    except GeometryError as exc:
        raise ScenarioParseError(str(exc), line, field) from None


def loads(text: str) -> Scene:
    scalars: dict[str, tuple[str, int]] = {}
    poses: list[PoseRecord] = []
    commands: list[Command] = []
    polys: dict[str, list[ConvexPolygon]] = {"drivable": [], "lane": [], "crosswalk": []}
    obstacles: list[tuple[int, OrientedBox, int]] = []
    gt: dict[int, tuple[float, float, float, bool]] = {}
    header_seen = ended = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ended:
            raise ScenarioParseError("content after 'end'", lineno)
        key, *toks = line.split()
        if not header_seen:
            if key != MAGIC:
                raise ScenarioParseError(f"missing '{MAGIC}' header", lineno)
            _arity(toks, 1, lineno, MAGIC)
            if _int(toks[0], lineno, MAGIC) != VERSION:
                raise ScenarioParseError(f"unsupported schema version {toks[0]}", lineno, MAGIC)
            header_seen = True
            continue
        if key not in _KEYS:
            raise ScenarioParseError(f"unknown field {key!r}", lineno, key)
        if key in _SCALARS:
            if key in scalars:
                raise ScenarioParseError("duplicate field", lineno, key)
            _arity(toks, 1, lineno, key)
            scalars[key] = (toks[0], lineno)
        elif key == "pose":
            _arity(toks, 5, lineno, key)
            t, x, y, h = (_real(v, lineno, key) for v in toks[:4])
            try:
                commands.append(Command[toks[4]])
            except KeyError:
                raise ScenarioParseError(f"unknown command {toks[4]!r}", lineno, key) from None
            poses.append(PoseRecord(t, x, y, h))
        elif key in polys:
            polys[key].append(_poly(toks, lineno, key))
        elif key == "obstacle":
            _arity(toks, 6, lineno, key)
            step = _int(toks[0], lineno, key)
            vals = [_real(v, lineno, key) for v in toks[1:]]
            try:
                obstacles.append((step, OrientedBox(*vals), lineno))
            except GeometryError as exc:
                raise ScenarioParseError(str(exc), lineno, key) from None
        elif key == "gt":
            _arity(toks, 5, lineno, key)
            step = _int(toks[0], lineno, key)
            if step in gt:
                raise ScenarioParseError(f"duplicate step {step}", lineno, key)
            x, y, h = (_real(v, lineno, key) for v in toks[1:4])
            if toks[4] not in ("0", "1"):
                raise ScenarioParseError(f"validity must be 0 or 1, got {toks[4]!r}", lineno, key)
            gt[step] = (x, y, h, toks[4] == "1")
        elif key == "end":
            _arity(toks, 0, lineno, key)
            ended = True

    if not header_seen:
        raise ScenarioParseError("empty file")
    if not ended:
        raise ScenarioParseError("file is truncated (no 'end' record)")
    for key in _SCALARS:
        if key not in scalars:
            raise ScenarioParseError("required field missing", field=key)
    horizon = _int(scalars["horizon"][0], scalars["horizon"][1], "horizon")
    if horizon < 1:
        raise ScenarioParseError("horizon must be positive", scalars["horizon"][1], "horizon")
    if sorted(gt) != list(range(1, horizon + 1)):
        raise ScenarioParseError(f"gt records must cover steps 1..{horizon} exactly once", field="gt")
    steps: list[list[OrientedBox]] = [[] for _ in range(horizon)]
    for step, box, lineno in obstacles:
        if not 1 <= step <= horizon:
            raise ScenarioParseError(f"step {step} outside 1..{horizon}", lineno, "obstacle")
        steps[step - 1].append(box)
    if len(poses) < 3:
        raise ScenarioParseError("at least 3 pose records are required", field="pose")
    kind = scalars["kind"][0]
    if kind not in ("corridor", "intersection"):
        raise ScenarioParseError(f"unknown scene kind {kind!r}", scalars["kind"][1], "kind")
    return Scene(
        scene_id=scalars["id"][0],
        seed=_int(scalars["seed"][0], scalars["seed"][1], "seed"),
        kind=kind,
        frame_dt=_real(scalars["frame_dt"][0], scalars["frame_dt"][1], "frame_dt"),
        poses=tuple(poses),
        commands=tuple(commands),
        drivable=tuple(polys["drivable"]),
        lanes=tuple(polys["lane"]),
        crosswalks=tuple(polys["crosswalk"]),
        obstacles=tuple(tuple(s) for s in steps),
        gt_trajectory=tuple((gt[i][0], gt[i][1]) for i in range(1, horizon + 1)),
        gt_headings=tuple(gt[i][2] for i in range(1, horizon + 1)),
        validity=tuple(gt[i][3] for i in range(1, horizon + 1)),
    )
