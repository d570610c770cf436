"""Run metrics from a planar configuration and its folded positions.

Everything except ``stationarity``, ``status`` and ``iterations`` is a pure
function of the saved meshes, so ``report`` can re-derive it bit for bit.
"""
import math
from typing import Optional

import numpy as np

from ..data.entities import RunMetrics
from ..optimization.constraints import normalized_planarity, residuals
from ..optimization.energy import edge_lengths, energy_center, length_energy_value
from ..optimization.qc import dilation
from ..unfold.development import Development
from .setup import RunSetup

MESH_METRICS = ("E_l", "mean_mu", "max_mu", "feas_planarity", "feas_develop", "E_mu", "E_c", "energy",
                "dilation", "foldover_count", "feas_planarity_normalized", "mean_edge_length",
                "edge_length_ratio", "centroid_drift", "consistency_error", "n_mountain", "n_valley", "n_flat")


def _max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def compute_metrics(setup: RunSetup, y: np.ndarray, positions: np.ndarray, *, status: str, iterations: int,
                    stationarity: float = math.nan, development: Optional[Development] = None) -> RunMetrics:
    pattern, model = setup.pattern, setup.model
    y = np.asarray(y, dtype=float).reshape(-1, 2)
    positions = np.asarray(positions, dtype=float)
    rho = model.weights

    E_l = length_energy_value(pattern, positions, model.ref_lengths)
    E_mu = model.beltrami.energy(y, hessian=False)[0]
    E_c = energy_center(pattern, y, model)[0]
    field = model.beltrami.field(y)
    g_plan, g_dev = residuals(pattern, positions)
    L = edge_lengths(pattern, positions)
    drift = np.linalg.norm(y.mean(axis=0) - pattern.vertices0.mean(axis=0)) / model.ranges[0]
    counts = development.counts() if development is not None else {"mountain": 0, "valley": 0, "flat": 0}
    m, n = pattern.dims
    return RunMetrics(
        epsilon=setup.pair.epsilon, E_l=E_l, mean_mu=field.mean_abs, max_mu=field.max_abs,
        feas_planarity=_max_abs(g_plan), feas_develop=_max_abs(g_dev), iterations=int(iterations),
        surface=setup.chart.kind, m=m, n=n, quads=pattern.n_quads, status=status,
        E_mu=E_mu, E_c=E_c, energy=float(rho[0] * E_l + rho[1] * E_mu + rho[2] * E_c),
        dilation=dilation(field.max_abs), foldover_count=field.foldover_count,
        feas_planarity_normalized=_max_abs(normalized_planarity(pattern, positions)),
        stationarity=float(stationarity), mean_edge_length=float(L.mean()),
        edge_length_ratio=float(L.mean() / model.ref_lengths.mean()), centroid_drift=float(drift),
        consistency_error=development.consistency_error if development is not None else math.nan,
        n_mountain=counts["mountain"], n_valley=counts["valley"], n_flat=counts["flat"])
