import math

from miura.monitoring.resource import ResourceMonitor
from miura.tracking import mlflow_tracker


class _Recorder:
    def __init__(self, fail_on=None):
        self.calls = []
        self.fail_on = fail_on

    def __getattr__(self, name):
        def call(*args, **kwargs):
            if name == self.fail_on:
                raise RuntimeError("tracking server unavailable")
            self.calls.append((name, args, kwargs))

            class _Run:
                class info:
                    run_id = "r1"
            return _Run()
        return call


MANIFEST = {"config": {"alias": "saddle_q288", "epsilon": 0.05, "surface": {"kind": "saddle"},
                       "pattern": {"m": 12, "n": 24}},
            "metrics": {"E_l": 1e-4, "dilation": math.inf, "status": "converged", "iterations": 12}}


def test_track_run_logs_params_and_finite_metrics(monkeypatch, tmp_path):
    rec = _Recorder()
    monkeypatch.setattr(mlflow_tracker, "mlflow", rec)
    (tmp_path / "manifest.yaml").write_text("status: converged\n", encoding="utf-8")
    mlflow_tracker.track_run(MANIFEST, str(tmp_path))
    calls = {name: (args, kwargs) for name, args, kwargs in rec.calls}
    assert calls["start_run"][1] == {"run_name": "saddle_q288"}
    assert calls["log_params"][0][0] == {"surface": "saddle", "epsilon": 0.05, "m": 12, "n": 24}
    assert calls["log_metrics"][0][0] == {"E_l": 1e-4, "iterations": 12.0}
    assert "log_artifact" in calls
    assert rec.calls[-1][0] == "end_run"


def test_track_run_swallows_tracking_failures(monkeypatch, tmp_path, caplog):
    rec = _Recorder(fail_on="log_metrics")
    monkeypatch.setattr(mlflow_tracker, "mlflow", rec)
    mlflow_tracker.track_run(MANIFEST, str(tmp_path))
    assert "MLflow logging skipped" in caplog.text
    assert rec.calls[-1][0] == "end_run"


def test_resource_snapshot_fields():
    snap = ResourceMonitor().snapshot()
    assert snap["memory_mb"] > 0
    assert snap["cpu_count"] >= 1
    assert snap["cpu_user_sec"] >= 0
