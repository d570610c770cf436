"""Error hierarchy shared by every stage of a design run."""


class MiuraError(Exception):
    """Base class for all package errors."""


class ConfigError(MiuraError, ValueError):
    pass


class DomainError(MiuraError, ValueError):
    """A parameter point fell outside the chart's rectangle."""


class SingularChartError(MiuraError, ValueError):
    pass


class InvalidPatternError(MiuraError, ValueError):
    pass


class SingularTriangleError(MiuraError, ValueError):
    def __init__(self, index: int, area: float) -> None:
        super().__init__(f"rest triangle {index} is degenerate (signed area {area:.3e})")
        self.index = index
        self.area = area


class DegenerateEdgeError(MiuraError, ValueError):
    pass


class DegenerateFanError(MiuraError, ValueError):
    pass


class DegenerateFaceError(MiuraError, ValueError):
    pass


class LinearSolveError(MiuraError, RuntimeError):
    pass


class PlanarityGateError(MiuraError, ValueError):
    pass


class ArtifactError(MiuraError, OSError):
    """Reading or writing a run artifact failed."""
