"""Layer widths and counts shared by the mapping and planning networks."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class ModelDims:
    """Sizes of every learned block.

    ``d_map`` is the width of the per-cell segmentation features; memory
    tokens are projected from it to ``d_model``, the width of every planning
    query.
    """

    bev_channels: int = 8
    d_map: int = 32
    d_model: int = 64
    d_lin: int = 32
    d_cmd: int = 16
    n_layers: int = 3
    n_thing_queries: int = 8
    token_stride: int = 4
    adapter_hidden: int = 64
    horizon: int = 10

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not isinstance(value, int) or value <= 0:
                raise ConfigError(f"model dimension {name} must be a positive integer, got {value!r}")
        if self.n_layers < 2:
            raise ConfigError(f"the segmentation decoder needs at least 2 layers, got {self.n_layers}")
        if self.bev_channels < 6:
            raise ConfigError(f"BEV features need at least 6 channels, got {self.bev_channels}")

    @property
    def d_ego(self) -> int:
        return self.d_lin + self.d_cmd
