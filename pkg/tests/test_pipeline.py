import math

import numpy as np
import pandas as pd
import pytest

from miura.core.config import SurfaceConfig, validate_run_config
from miura.data.entities import METRIC_COLUMNS, TRACE_COLUMNS
from miura.data.repository import FileArtifactRepository
from miura.geometry.pattern import FoldedState, fold
from miura.geometry.registry import STUDY_SURFACES, build_surface
from miura.orchestration.pipeline import (FOLDED_OBJ, INITIAL_OBJ, MANIFEST, METRICS_CSV, PARAMETER_SVG, TRACE_CSV,
                                          UNFOLDED_SVG, Pipeline)
from miura.orchestration.report import CREASES_CSV, REPORT_CSV, develop_mesh, rederive
from miura.orchestration.setup import build_setup
from miura.unfold.development import develop, rigid_discrepancy


def _flat_config(tmp_path, **extra):
    doc = {"alias": "flat", "surface": {"kind": "flat"}, "pattern": {"m": 4, "n": 6}, "epsilon": 0.0,
           "output_dir": str(tmp_path), "reproducible": True}
    doc.update(extra)
    return validate_run_config(doc)


@pytest.fixture
def flat_run(tmp_path):
    return Pipeline().run(_flat_config(tmp_path))


def test_pipeline_runs(flat_run, tmp_path):
    assert flat_run.converged
    assert flat_run.run_dir == tmp_path / "flat"
    for name in (MANIFEST, FOLDED_OBJ, INITIAL_OBJ, PARAMETER_SVG, METRICS_CSV, TRACE_CSV, UNFOLDED_SVG):
        assert (flat_run.run_dir / name).is_file(), name


def test_manifest_contents(flat_run):
    doc = FileArtifactRepository(flat_run.run_dir).load_manifest(MANIFEST)
    assert doc["status"] == "converged"
    assert doc["config"]["surface"]["kind"] == "flat"
    assert set(doc["artifacts"]) == {"initial_mesh", "folded_mesh", "parameter_svg", "metrics", "trace",
                                     "unfolded_svg"}
    assert "started_at" not in doc and "resources" not in doc
    assert doc["metrics"]["iterations"] == flat_run.report.iterations


def test_metrics_and_trace_tables(flat_run):
    repo = FileArtifactRepository(flat_run.run_dir)
    metrics = repo.load_table(METRICS_CSV)
    assert list(metrics.columns) == list(METRIC_COLUMNS)
    assert metrics.loc[0, "surface"] == "flat"
    assert metrics.loc[0, "quads"] == 24
    assert metrics.loc[0, "feas_planarity"] < 1e-12
    trace = repo.load_table(TRACE_CSV)
    assert list(trace.columns) == list(TRACE_COLUMNS)
    assert len(trace) == flat_run.report.iterations


def test_flat_sheet_develops_without_creases(flat_run):
    m = flat_run.metrics
    assert m.consistency_error < 1e-9
    assert (m.n_mountain, m.n_valley) == (0, 0)
    assert m.n_flat == 38
    assert m.foldover_count == 0


def test_unreproducible_runs_record_timing(tmp_path):
    result = Pipeline().run(_flat_config(tmp_path, reproducible=False, alias="timed"))
    doc = result.manifest.to_dict()
    assert doc["duration_sec"] >= 0
    assert {"memory_mb", "cpu_user_sec", "cpu_count"} <= set(doc["resources"])


def test_report_rederives_the_manifest_metrics(flat_run):
    result = rederive(flat_run.run_dir)
    assert result.consistent
    assert result.max_deviation == 0.0
    table = pd.read_csv(flat_run.run_dir / REPORT_CSV)
    assert list(table.columns) == list(METRIC_COLUMNS)


def test_report_detects_edited_metrics(flat_run):
    repo = FileArtifactRepository(flat_run.run_dir)
    doc = repo.load_manifest(MANIFEST)
    doc["metrics"]["mean_mu"] += 1e-6
    repo.save_manifest(MANIFEST, doc)
    result = rederive(flat_run.run_dir)
    assert not result.consistent
    assert result.deviations["mean_mu"] == pytest.approx(1e-6)


def test_develop_saved_mesh(flat_run, tmp_path):
    out = tmp_path / "dev"
    dev = develop_mesh(flat_run.run_dir / FOLDED_OBJ, out)
    assert dev.consistency_error < 1e-9
    creases = pd.read_csv(out / CREASES_CSV)
    assert len(creases) == 38
    assert set(creases["kind"]) == {"flat"}
    assert (out / UNFOLDED_SVG).is_file()
    assert not np.any(np.isnan(dev.flat_positions))


def test_offset_run_reports_a_status(tmp_path):
    result = Pipeline().run(_flat_config(tmp_path, alias="offset", epsilon=0.02,
                                         solver={"max_iters": 2}))
    assert result.report.status.value in {"converged", "max-iters"}
    assert result.metrics.epsilon == 0.02
    assert math.isfinite(result.metrics.E_l)


@pytest.fixture(scope="module", params=STUDY_SURFACES)
def study_run(request, tmp_path_factory):
    doc = {"alias": request.param, "surface": {"kind": request.param}, "pattern": {"quads": 288},
           "epsilon": 0.05, "output_dir": str(tmp_path_factory.mktemp("study")), "reproducible": True,
           "log_level": "WARNING"}
    return Pipeline().run(validate_run_config(doc))


@pytest.mark.slow
def test_study_run_is_feasible(study_run):
    m = study_run.metrics
    assert study_run.converged, study_run.report.message
    assert m.feas_planarity <= 1e-10
    assert m.feas_develop <= 1e-8
    assert np.all(build_surface(SurfaceConfig(kind=m.surface)).domain.contains(study_run.y, tol=0.0))


@pytest.mark.slow
def test_study_run_is_regular(study_run):
    m = study_run.metrics
    assert m.E_l <= 1e-2
    assert m.mean_mu <= 0.5
    if m.surface == "saddle":
        assert m.E_l <= 1e-3
        assert m.mean_mu <= 0.3


@pytest.mark.slow
def test_study_run_develops_isometrically(study_run):
    dev = study_run.development
    assert dev is not None
    assert dev.consistency_error <= 1e-6 * dev.diameter
    setup = build_setup(validate_run_config(study_run.manifest.config))
    pattern = setup.pattern
    P = fold(pattern, setup.pair, study_run.y).positions
    a, b = pattern.edges[:, 0], pattern.edges[:, 1]
    flat_len = np.linalg.norm(dev.flat_positions[b] - dev.flat_positions[a], axis=1)
    folded_len = np.linalg.norm(P[b] - P[a], axis=1)
    assert np.max(np.abs(flat_len - folded_len)) <= dev.consistency_error + 1e-12

    other = develop(pattern, FoldedState.from_positions(P), seed=pattern.n_quads - 1)
    assert rigid_discrepancy(other.flat_positions, dev.flat_positions) <= 2 * dev.consistency_error + 1e-12


@pytest.mark.slow
def test_saddle_columns_alternate_mountain_and_valley(study_run):
    if study_run.metrics.surface != "saddle":
        pytest.skip("crease layout is checked on the saddle")
    cols = study_run.metrics.n + 1
    vertical = [c for c in study_run.development.crease_types if c.vertices[0] % cols == c.vertices[1] % cols]
    assert vertical
    for c in vertical:
        # odd columns sit on the lower sheet
        assert c.kind == ("valley" if (c.vertices[0] % cols) % 2 else "mountain"), c
