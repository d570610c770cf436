from dataclasses import dataclass

from ..core.config import RunConfig
from ..geometry.pattern import QuadPattern, build_initial
from ..geometry.registry import build_surface
from ..geometry.surface import OffsetPair, SurfaceChart
from ..optimization.energy import EnergyModel


@dataclass(frozen=True, eq=False)
class RunSetup:
    config: RunConfig
    chart: SurfaceChart
    pair: OffsetPair
    pattern: QuadPattern
    model: EnergyModel


def build_setup(cfg: RunConfig) -> RunSetup:
    """Chart, offset pair, initial pattern and energy model for one configuration."""
    chart = build_surface(cfg.surface)
    pair = OffsetPair(chart, cfg.epsilon)
    pattern = build_initial((cfg.pattern.m, cfg.pattern.n), chart.domain, cfg.pattern.skew, cfg.pattern.fill)
    model = EnergyModel.from_pattern(pattern, pair, cfg.weights.as_tuple(), center=cfg.center)
    return RunSetup(config=cfg, chart=chart, pair=pair, pattern=pattern, model=model)
