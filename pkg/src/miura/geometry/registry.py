from typing import Dict, Type

from ..core.config import SurfaceConfig
from ..core.errors import ConfigError
from .surface import (BowlChart, FlatChart, HelicoidChart, Rect, SaddleChart, SurfaceChart,
                      TunnelChart, WaveChart)

SURFACE_REGISTRY: Dict[str, Type[SurfaceChart]] = {
    cls.kind: cls
    for cls in (FlatChart, SaddleChart, BowlChart, WaveChart, TunnelChart, HelicoidChart)
}

# the five surfaces of the experiment study
STUDY_SURFACES = ("tunnel", "saddle", "bowl", "helicoid", "wave")


def build_surface(surface: SurfaceConfig) -> SurfaceChart:
    if surface.kind not in SURFACE_REGISTRY:
        raise ConfigError(f"Unknown surface kind: {surface.kind} (known: {sorted(SURFACE_REGISTRY)})")
    domain = None
    if surface.domain is not None:
        (x0, x1), (y0, y1) = surface.domain
        domain = Rect(x0, x1, y0, y1)
    return SURFACE_REGISTRY[surface.kind](domain=domain, **surface.params)
