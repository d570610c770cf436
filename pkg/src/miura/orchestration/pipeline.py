import logging
import time
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd

from .. import __version__
from ..core.config import RunConfig, dump_run_config
from ..core.errors import DegenerateFaceError, PlanarityGateError
from ..data.entities import METRIC_COLUMNS, TRACE_COLUMNS, RunManifest, RunMetrics
from ..data.repository import FileArtifactRepository, ObjMesh
from ..geometry.pattern import FoldedState, QuadPattern, fold
from ..monitoring.resource import ResourceMonitor
from ..optimization.solver import NewtonKKTSolver, SolveReport, SolveStatus
from ..unfold.development import Development, develop
from .metrics import compute_metrics
from .setup import RunSetup, build_setup

logger = logging.getLogger(__name__)

MANIFEST = "manifest.yaml"
FOLDED_OBJ = "folded.obj"
INITIAL_OBJ = "folded_initial.obj"
PARAMETER_SVG = "parameter_pattern.svg"
UNFOLDED_SVG = "unfolded.svg"
METRICS_CSV = "metrics.csv"
TRACE_CSV = "trace.csv"

FAILED_STATUSES = frozenset({SolveStatus.LINEAR_SOLVE_FAILURE.value, SolveStatus.DOMAIN_EXIT.value,
                             SolveStatus.LINE_SEARCH_FAILURE.value})


@dataclass
class RunResult:
    manifest: RunManifest
    metrics: RunMetrics
    report: SolveReport
    run_dir: Path
    y: np.ndarray
    lam: np.ndarray
    development: Optional[Development] = None

    @property
    def converged(self) -> bool:
        return self.report.converged

    @property
    def failed(self) -> bool:
        return self.report.status.value in FAILED_STATUSES


def run_directory(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir) / cfg.alias


def try_develop(setup: RunSetup, positions: np.ndarray) -> Optional[Development]:
    """Development of the folded mesh, or None when it does not pass the planarity gate."""
    try:
        return develop(setup.pattern, FoldedState.from_positions(positions), gate=setup.config.develop_gate,
                       seed=setup.config.seed_quad)
    except (PlanarityGateError, DegenerateFaceError) as e:
        logger.warning("development skipped: %s", e)
        return None


class Pipeline:
    """One design run: initial pattern, KKT solve, development, artifacts."""

    def __init__(self, repo: Optional[FileArtifactRepository] = None) -> None:
        self._repo = repo
        self._rm = ResourceMonitor()

    def run(self, cfg: RunConfig) -> RunResult:
        started = datetime.now(timezone.utc)
        t0 = time.perf_counter()
        run_dir = run_directory(cfg)
        repo = self._repo or FileArtifactRepository(run_dir)

        logger.info("[%s] building %s pattern %dx%d, eps=%g", cfg.alias, cfg.surface.kind,
                    cfg.pattern.m, cfg.pattern.n, cfg.epsilon)
        setup = build_setup(cfg)
        pattern = setup.pattern
        y0 = pattern.vertices0.copy()

        logger.info("[%s] solving %d constraints over %d unknowns", cfg.alias, pattern.n_constraints,
                    2 * pattern.n_vertices)
        y, lam, report = NewtonKKTSolver(pattern, setup.pair, setup.model, cfg.solver).solve(y0)
        positions = fold(pattern, setup.pair, y).positions

        logger.info("[%s] developing folded pattern", cfg.alias)
        development = try_develop(setup, positions)
        metrics = compute_metrics(setup, y, positions, status=report.status.value,
                                  iterations=report.iterations, stationarity=report.final_stat,
                                  development=development)

        artifacts = self._write_artifacts(repo, setup, y0, y, positions, report, metrics, development)
        manifest = RunManifest(config=dump_run_config(cfg), version=__version__, status=report.status.value,
                               artifacts=artifacts, metrics=metrics.as_row(), solver_message=report.message)
        if not cfg.reproducible:
            manifest.started_at = started.isoformat()
            manifest.finished_at = datetime.now(timezone.utc).isoformat()
            manifest.duration_sec = round(time.perf_counter() - t0, 3)
            manifest.resources = self._rm.snapshot()
        repo.save_manifest(MANIFEST, manifest.to_dict())
        logger.info("[%s] %s: E_l=%.3e mean|mu|=%.4f feas=(%.2e, %.2e) -> %s", cfg.alias, report.status.value,
                    metrics.E_l, metrics.mean_mu, metrics.feas_planarity, metrics.feas_develop, run_dir)
        return RunResult(manifest=manifest, metrics=metrics, report=report, run_dir=run_dir, y=y, lam=lam,
                         development=development)

    def _write_artifacts(self, repo: FileArtifactRepository, setup: RunSetup, y0: np.ndarray, y: np.ndarray,
                         positions: np.ndarray, report: SolveReport, metrics: RunMetrics,
                         development: Optional[Development]) -> Dict[str, str]:
        pattern = setup.pattern
        P0 = fold(pattern, setup.pair, y0).positions
        repo.save_mesh(INITIAL_OBJ, ObjMesh(P0, pattern.quads, uv=y0, dims=pattern.dims))
        repo.save_mesh(FOLDED_OBJ, ObjMesh(positions, pattern.quads, uv=y, dims=pattern.dims))
        flagged = np.abs(setup.model.beltrami.field(y).mu) >= 1.0
        repo.save_parameter_svg(PARAMETER_SVG, pattern.quads, setup.chart.domain,
                                [("initial", y0, "#bbbbbb"), ("optimized", y, "#111111")],
                                tris=pattern.tris, flagged=flagged)
        repo.save_table(METRICS_CSV, pd.DataFrame([metrics.as_row()], columns=list(METRIC_COLUMNS)))
        trace = pd.DataFrame([asdict(r) for r in report.energy_trace], columns=list(TRACE_COLUMNS))
        repo.save_table(TRACE_CSV, trace)
        artifacts = {"initial_mesh": INITIAL_OBJ, "folded_mesh": FOLDED_OBJ, "parameter_svg": PARAMETER_SVG,
                     "metrics": METRICS_CSV, "trace": TRACE_CSV}
        if development is not None:
            write_crease_drawing(repo, setup.pattern, development, UNFOLDED_SVG)
            artifacts["unfolded_svg"] = UNFOLDED_SVG
        return artifacts


def write_crease_drawing(repo: FileArtifactRepository, pattern: QuadPattern, development: Development,
                         name: str) -> Path:
    faces = pattern.edge_faces()
    boundary = pattern.edges[(faces[:, 0] < 0) | (faces[:, 1] < 0)]
    creases = [(c.vertices, c.kind) for c in development.crease_types]
    return repo.save_crease_svg(name, development.flat_positions, creases, boundary)
