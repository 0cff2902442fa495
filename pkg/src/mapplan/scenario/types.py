"""Scene-level records shared by generation, I/O, losses and evaluation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from ..geometry import ConvexPolygon, GridSpec, OrientedBox

HORIZON = 10
FRAME_DT = 0.5
EGO_LENGTH = 4.0
EGO_WIDTH = 1.8

# Both grids cover x in [-16, 80) and y in [-48, 48) metres around the ego.
DEFAULT_REGION_GRID = GridSpec(-16.0, -48.0, 0.5, 192, 192)
DEFAULT_BEV_GRID = GridSpec(-16.0, -48.0, 1.5, 64, 64)


class Command(enum.Enum):
    LEFT = 0
    STRAIGHT = 1
    RIGHT = 2


class IntervalMode(enum.Enum):
    """How frame gaps enter the finite differences of the ego status."""

    ACTUAL_DT = "actual"
    FIXED_DT = "fixed"


@dataclass(frozen=True)
class PoseRecord:
    """Global-frame pose from the vehicle bus at time ``t`` (seconds)."""

    t: float
    x: float
    y: float
    heading: float


@dataclass(frozen=True)
class EgoStatus:
    vx: float
    vy: float
    ax: float
    ay: float
    heading: float
    command: Command

    def __post_init__(self) -> None:
        for name in ("vx", "vy", "ax", "ay", "heading"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"ego status field {name} is not finite")
        if not isinstance(self.command, Command):
            raise ValueError(f"unknown command {self.command!r}")


@dataclass(frozen=True)
class Scene:
    """One planning instance.

    Map elements, obstacles and the ground-truth future are expressed in the
    ego frame of the current (last) pose, x forward. ``poses`` and
    ``commands`` form the bus log in the global frame; the ego status is
    derived from them on demand so that the frame-interval convention can be
    chosen at evaluation time. ``obstacles[i]`` holds the boxes at future
    step ``i + 1``.
    """

    scene_id: str
    seed: int
    kind: str
    frame_dt: float
    poses: tuple[PoseRecord, ...]
    commands: tuple[Command, ...]
    drivable: tuple[ConvexPolygon, ...]
    lanes: tuple[ConvexPolygon, ...]
    crosswalks: tuple[ConvexPolygon, ...]
    obstacles: tuple[tuple[OrientedBox, ...], ...]
    gt_trajectory: tuple[tuple[float, float], ...]
    gt_headings: tuple[float, ...]
    validity: tuple[bool, ...]

    def __post_init__(self) -> None:
        n = len(self.gt_trajectory)
        if not (len(self.gt_headings) == len(self.validity) == len(self.obstacles) == n):
            raise ValueError(
                "per-step fields disagree in length: "
                f"trajectory {n}, headings {len(self.gt_headings)}, validity {len(self.validity)}, "
                f"obstacles {len(self.obstacles)}"
            )
        if len(self.poses) != len(self.commands):
            raise ValueError("pose log and command log lengths differ")

    @property
    def horizon(self) -> int:
        return len(self.gt_trajectory)

    @property
    def current_index(self) -> int:
        return len(self.poses) - 1

    @property
    def command(self) -> Command:
        return self.commands[-1]
