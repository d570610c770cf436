import pathlib
import sys

import numpy as np
import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from miura.geometry.pattern import build_initial  # noqa: E402
from miura.geometry.registry import SURFACE_REGISTRY  # noqa: E402
from miura.geometry.surface import OffsetPair, Rect  # noqa: E402
from miura.optimization.energy import EnergyModel  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def make_setup(kind: str = "saddle", dims=(4, 6), epsilon: float = 0.05, weights=(1.0, 0.1, 0.01)):
    chart = SURFACE_REGISTRY[kind]()
    pair = OffsetPair(chart, epsilon)
    pattern = build_initial(dims, chart.domain)
    model = EnergyModel.from_pattern(pattern, pair, weights)
    return chart, pair, pattern, model


def jitter(pattern, rng, scale: float = 0.02):
    """V0 moved by a small random amount, relative to the column width."""
    w = float(np.min(np.linalg.norm(pattern.vertices0[pattern.edges[:, 0]] - pattern.vertices0[pattern.edges[:, 1]],
                                    axis=1)))
    return pattern.vertices0 + scale * w * rng.uniform(-1.0, 1.0, pattern.vertices0.shape)


FD_CONFIGURATIONS = 50


def fd_configurations(kind: str, count: int = FD_CONFIGURATIONS, dims=(3, 4), weights=(1.0, 1.0, 1.0)):
    """Seeded (pair, pattern, model, y, rng) samples jittered around the initial pattern."""
    _, pair, pattern, model = make_setup(kind, dims=dims, weights=weights)
    for seed in range(count):
        rng = np.random.default_rng(seed)
        yield pair, pattern, model, jitter(pattern, rng, scale=0.1).ravel(), rng


@pytest.fixture
def saddle_setup():
    return make_setup("saddle")


@pytest.fixture
def unit_square():
    return Rect(0.0, 1.0, 0.0, 1.0)
