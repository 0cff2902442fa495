"""Run configuration: defaults, INI files and command-line overrides.

Every field lives in one INI section (``[run]``, ``[model]``, ``[loss]``
or ``[grid]``) under its own name and has a matching ``--flag`` with
underscores turned into dashes. Precedence is flag > file > default.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .dims import ModelDims
from .errors import ConfigError
from .geometry import GridSpec
from .losses import AdaptiveWeights
from .mapping import DetectionWeights
from .planner import Ablation
from .scenario import IntervalMode

CONFIG_ENV = "MAPPLAN_CONFIG"


def _f(section: str, default, help: str):
    return field(default=default, metadata={"section": section, "help": help})


@dataclass(frozen=True)
class RunConfig:
    seed: int = _f("run", 0, "seed for weight init and data order")
    epochs: int = _f("run", 30, "training epochs")
    batch_size: int = _f("run", 4, "scenes per optimizer step")
    lr: float = _f("run", 3e-3, "Adam learning rate")
    lr_decay: float = _f("run", 0.93, "multiplicative learning-rate decay per epoch")
    beta1: float = _f("run", 0.9, "Adam first-moment decay")
    beta2: float = _f("run", 0.999, "Adam second-moment decay")
    adam_eps: float = _f("run", 1e-8, "Adam denominator epsilon")
    train_dir: str = _f("run", "", "directory of training scenes")
    val_dir: str = _f("run", "", "directory of validation scenes")
    ablation: str = _f("run", "FULL", "FULL, NO_POM or NO_EP")
    interval_mode: str = _f("run", "actual", "ego-status frame interval: actual or fixed")
    encoder_aux: bool = _f("run", False, "add encoder-output auxiliary mapping losses")

    bev_channels: int = _f("model", 8, "BEV feature channels")
    d_map: int = _f("model", 32, "per-cell segmentation feature width")
    d_model: int = _f("model", 64, "planning query width")
    d_lin: int = _f("model", 32, "ego kinematics embedding width")
    d_cmd: int = _f("model", 16, "command embedding width")
    n_layers: int = _f("model", 3, "segmentation decoder layers")
    n_thing_queries: int = _f("model", 8, "obstacle box queries")
    token_stride: int = _f("model", 4, "cell stride of attention tokens")
    adapter_hidden: int = _f("model", 64, "fusion adapter hidden width")

    w_l2: float = _f("loss", 0.1, "adaptive loss displacement weight")
    w_col: float = _f("loss", 1.0, "adaptive loss collision weight")
    w_off: float = _f("loss", 1.0, "adaptive loss off-road weight")
    tau: float = _f("loss", 0.5, "soft indicator temperature in meters")
    lambda_l1: float = _f("loss", 5.0, "box L1 weight")
    lambda_giou: float = _f("loss", 2.0, "box GIoU weight")
    focal_alpha: float = _f("loss", 0.25, "focal loss alpha")
    focal_gamma: float = _f("loss", 2.0, "focal loss gamma")
    ego_length: float = _f("loss", 4.0, "ego footprint length in meters")
    ego_width: float = _f("loss", 1.8, "ego footprint width in meters")

    origin_x: float = _f("grid", -16.0, "grid origin x in meters (ego frame)")
    origin_y: float = _f("grid", -48.0, "grid origin y in meters (ego frame)")
    extent: float = _f("grid", 96.0, "grid side length in meters")
    bev_size: int = _f("grid", 64, "BEV cells per side")
    region_resolution: float = _f("grid", 0.5, "collision/off-road raster cell size in meters")

    def __post_init__(self) -> None:
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if not self.lr > 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0 < self.lr_decay <= 1:
            raise ConfigError(f"lr_decay must lie in (0, 1], got {self.lr_decay}")
        try:
            Ablation(self.ablation)
        except ValueError:
            raise ConfigError(f"unknown ablation {self.ablation!r}") from None
        try:
            IntervalMode(self.interval_mode)
        except ValueError:
            raise ConfigError(f"unknown interval mode {self.interval_mode!r} (use actual or fixed)") from None
        if not (self.extent > 0 and self.bev_size > 0 and self.region_resolution > 0):
            raise ConfigError("grid extent, size and resolution must be positive")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")
        self.dims  # validates model sizes
        self.adaptive_weights

    @property
    def dims(self) -> ModelDims:
        return ModelDims(
            bev_channels=self.bev_channels,
            d_map=self.d_map,
            d_model=self.d_model,
            d_lin=self.d_lin,
            d_cmd=self.d_cmd,
            n_layers=self.n_layers,
            n_thing_queries=self.n_thing_queries,
            token_stride=self.token_stride,
            adapter_hidden=self.adapter_hidden,
        )

    @property
    def adaptive_weights(self) -> AdaptiveWeights:
        try:
            return AdaptiveWeights(self.w_l2, self.w_col, self.w_off)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def detection_weights(self) -> DetectionWeights:
        return DetectionWeights(self.lambda_l1, self.lambda_giou, self.focal_alpha, self.focal_gamma)

    @property
    def bev_grid(self) -> GridSpec:
        return GridSpec(self.origin_x, self.origin_y, self.extent / self.bev_size, self.bev_size, self.bev_size)

    @property
    def region_grid(self) -> GridSpec:
        n = int(round(self.extent / self.region_resolution))
        return GridSpec(self.origin_x, self.origin_y, self.region_resolution, n, n)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        for f in fields(self):
            sec = f.metadata["section"]
            if not cp.has_section(sec):
                cp.add_section(sec)
            cp.set(sec, f.name, _fmt(getattr(self, f.name)))
        lines = []
        for sec in cp.sections():
            lines.append(f"[{sec}]")
            lines += [f"{k} = {v}" for k, v in cp.items(sec)]
            lines.append("")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(f: dataclasses.Field, raw: str, where: str):
    kind = f.type if isinstance(f.type, type) else {"int": int, "float": float, "bool": bool, "str": str}[f.type]
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw.strip()) if kind is not str else raw.strip()
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from None


def field_map() -> dict[str, dataclasses.Field]:
    return {f.name: f for f in fields(RunConfig)}


def load_config(path: str | os.PathLike | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the INI file (``path`` or ``$MAPPLAN_CONFIG``), then ``overrides``.

    Unknown sections or keys are rejected so typos do not silently fall back
    to defaults.
    """
    values: dict = {}
    path = path or os.environ.get(CONFIG_ENV) or None
    fmap = field_map()
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        cp = configparser.ConfigParser()
        try:
            cp.read_string(p.read_text(encoding="utf-8"), source=str(p))
        except configparser.Error as exc:
            raise ConfigError(f"{p}: {exc}") from None
        for sec in cp.sections():
            for key, raw in cp.items(sec):
                f = fmap.get(key)
                if f is None or f.metadata["section"] != sec:
                    raise ConfigError(f"{p}: unknown key [{sec}] {key}")
                values[key] = _parse(f, raw, f"{p} [{sec}] {key}")
    for key, v in (overrides or {}).items():
        if key not in fmap:
            raise ConfigError(f"unknown config field {key}")
        if v is not None:
            values[key] = _parse(fmap[key], v, f"--{key.replace('_', '-')}") if isinstance(v, str) else v
    return RunConfig(**values)
