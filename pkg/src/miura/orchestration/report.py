"""Re-derive run metrics from saved artifacts and develop standalone OBJ meshes."""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pandas as pd

from ..core.config import validate_run_config
from ..core.errors import ArtifactError
from ..data.entities import METRIC_COLUMNS, RunMetrics
from ..data.repository import FileArtifactRepository
from ..geometry.pattern import FoldedState, QuadPattern
from ..unfold.development import Development, develop
from .metrics import MESH_METRICS, compute_metrics
from .pipeline import FOLDED_OBJ, MANIFEST, UNFOLDED_SVG, try_develop, write_crease_drawing
from .setup import build_setup

logger = logging.getLogger(__name__)

REPORT_CSV = "report.csv"
CREASES_CSV = "creases.csv"


@dataclass
class ReportResult:
    metrics: RunMetrics
    deviations: Dict[str, float]
    tolerance: float

    @property
    def max_deviation(self) -> float:
        finite = [v for v in self.deviations.values() if not math.isnan(v)]
        return max(finite, default=0.0)

    @property
    def consistent(self) -> bool:
        return self.max_deviation <= self.tolerance


def _deviation(saved: Any, derived: Any) -> float:
    a, b = float(saved), float(derived)
    if math.isnan(a) and math.isnan(b):
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return 0.0 if a == b else math.inf
    return abs(a - b)


def rederive(run_dir: str | Path, tolerance: float = 1e-12) -> ReportResult:
    """Metrics recomputed from ``folded.obj`` and the manifest's config, compared with the manifest."""
    repo = FileArtifactRepository(run_dir)
    doc = repo.load_manifest(MANIFEST)
    cfg = validate_run_config(doc["config"])
    setup = build_setup(cfg)
    mesh = repo.load_mesh(FOLDED_OBJ)
    if mesh.uv is None:
        raise ArtifactError(f"{repo.path(FOLDED_OBJ)} carries no planar configuration")
    if not np.array_equal(mesh.quads, setup.pattern.quads):
        raise ArtifactError(f"{repo.path(FOLDED_OBJ)} connectivity does not match its configuration")
    saved = doc.get("metrics", {})
    development = try_develop(setup, mesh.positions)
    metrics = compute_metrics(setup, mesh.uv, mesh.positions, status=doc.get("status", "unknown"),
                              iterations=int(saved.get("iterations", 0)),
                              stationarity=float(saved.get("stationarity", math.nan)), development=development)
    derived = metrics.as_row()
    deviations = {k: _deviation(saved[k], derived[k]) for k in MESH_METRICS if k in saved}
    repo.save_table(REPORT_CSV, pd.DataFrame([derived], columns=list(METRIC_COLUMNS)))
    result = ReportResult(metrics=metrics, deviations=deviations, tolerance=tolerance)
    logger.info("report %s: max deviation from manifest %.3e", run_dir, result.max_deviation)
    return result


def grid_pattern(dims: tuple[int, int]) -> QuadPattern:
    """Connectivity-only pattern on the unit integer grid."""
    m, n = dims
    i, j = np.meshgrid(np.arange(m + 1), np.arange(n + 1), indexing="ij")
    return QuadPattern.from_grid(dims, np.stack([j, i], axis=-1).reshape(-1, 2).astype(float))


def develop_mesh(obj_path: str | Path, out_dir: str | Path, gate: float = 1e-6, seed: int = 0) -> Development:
    """Develop a saved quad mesh and write its crease drawing and crease table."""
    obj_path = Path(obj_path)
    mesh = FileArtifactRepository(obj_path.parent).load_mesh(obj_path.name)
    if mesh.dims is None:
        raise ArtifactError(f"{obj_path} has no grid dimensions record")
    pattern = grid_pattern(mesh.dims)
    if not np.array_equal(mesh.quads, pattern.quads):
        raise ArtifactError(f"{obj_path} faces are not an {mesh.dims[0]}x{mesh.dims[1]} quad grid")
    development = develop(pattern, FoldedState.from_positions(mesh.positions), gate=gate, seed=seed)
    repo = FileArtifactRepository(out_dir)
    write_crease_drawing(repo, pattern, development, UNFOLDED_SVG)
    rows = [{"edge": c.edge, "a": c.vertices[0], "b": c.vertices[1], "dihedral": c.dihedral, "kind": c.kind}
            for c in development.crease_types]
    repo.save_table(CREASES_CSV, pd.DataFrame(rows, columns=["edge", "a", "b", "dihedral", "kind"]))
    return development
