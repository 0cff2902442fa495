"""Exception types raised across the package."""


class MapPlanError(Exception):
    """Base class for all package errors."""


class ShapeError(MapPlanError, ValueError):
    """Operands have incompatible shapes."""

    def __init__(self, op: str, *shapes: tuple) -> None:
        self.op = op
        self.shapes = shapes
        parts = " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {parts}")


class GradientError(MapPlanError):
    """Backward pass or gradient check could not be carried out."""


class GeometryError(MapPlanError, ValueError):
    """Invalid geometric input (degenerate box, non-convex polygon, ...)."""


class ScenarioError(MapPlanError, ValueError):
    """Scenario generation or ego-status derivation failed."""


class ScenarioParseError(MapPlanError):
    """A scenario file does not follow the documented schema."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None) -> None:
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ConfigError(MapPlanError, ValueError):
    """Invalid run configuration."""


class CheckpointError(MapPlanError):
    """Checkpoint or report file is malformed or incompatible."""


class TrainingError(MapPlanError):
    """Training diverged (non-finite loss)."""
