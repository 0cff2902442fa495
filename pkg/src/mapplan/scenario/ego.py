from __future__ import annotations

from typing import Sequence

from ..errors import ScenarioError
from .types import FRAME_DT, Command, EgoStatus, IntervalMode, PoseRecord


def derive_ego_status(
    poses: Sequence[PoseRecord],
    commands: Sequence[Command | None],
    i: int,
    mode: IntervalMode = IntervalMode.ACTUAL_DT,
    fixed_dt: float = FRAME_DT,
) -> EgoStatus:
    """Ego kinematics at frame ``i`` by backward differences over the pose log.

    Velocity is the displacement between frames ``i-1`` and ``i`` divided by
    the gap; acceleration is the change between that velocity and the one
    of the previous gap, divided by the latest gap. Under ``FIXED_DT`` every
    gap is taken to be ``fixed_dt`` regardless of the timestamps.
    """
    if i < 2 or i >= len(poses):
        raise ScenarioError(f"frame index {i} needs two preceding frames in a log of {len(poses)}")
    p0, p1, p2 = poses[i - 2], poses[i - 1], poses[i]
    dt1 = p1.t - p0.t
    dt2 = p2.t - p1.t
    if dt1 <= 0 or dt2 <= 0:
        raise ScenarioError(f"timestamps not strictly increasing around frame {i}")
    if mode is IntervalMode.FIXED_DT:
        if fixed_dt <= 0:
            raise ScenarioError(f"fixed interval must be positive, got {fixed_dt}")
        dt1 = dt2 = fixed_dt
    if i >= len(commands) or commands[i] is None:
        raise ScenarioError(f"no driving command recorded for frame {i}")
    v1x, v1y = (p1.x - p0.x) / dt1, (p1.y - p0.y) / dt1
    v2x, v2y = (p2.x - p1.x) / dt2, (p2.y - p1.y) / dt2
    return EgoStatus(
        vx=v2x,
        vy=v2y,
        ax=(v2x - v1x) / dt2,
        ay=(v2y - v1y) / dt2,
        heading=p2.heading,
        command=commands[i],
    )


def scene_ego_status(scene, mode: IntervalMode = IntervalMode.ACTUAL_DT) -> EgoStatus:
    return derive_ego_status(scene.poses, scene.commands, scene.current_index, mode, scene.frame_dt)
