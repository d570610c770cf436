import logging
import os
from typing import Any, Dict

import mlflow

logger = logging.getLogger(__name__)


class Tracker:
    def __init__(self, tracking_uri: str | None = None, experiment: str = "miura") -> None:
        self._uri = tracking_uri or os.getenv("MLFLOW_TRACKING_URI", "file:mlruns")
        self._experiment = experiment

    def start(self, run_name: str) -> str:
        mlflow.set_tracking_uri(self._uri)
        mlflow.set_experiment(self._experiment)
        run = mlflow.start_run(run_name=run_name)
        return run.info.run_id

    def log_params(self, params: Dict[str, Any]) -> None:
        mlflow.log_params(params)

    def log_metrics(self, metrics: Dict[str, float]) -> None:
        finite = {k: float(v) for k, v in metrics.items()
                  if isinstance(v, (int, float)) and not isinstance(v, bool) and abs(float(v)) != float("inf")}
        mlflow.log_metrics(finite)

    def log_artifact(self, path: str) -> None:
        mlflow.log_artifact(path)

    def end(self) -> None:
        mlflow.end_run()


def track_run(manifest: Dict[str, Any], run_dir: str) -> None:
    """Log one finished run; failures are reported and swallowed."""
    tracker = Tracker()
    try:
        cfg = manifest.get("config", {})
        tracker.start(run_name=str(cfg.get("alias", "run")))
        tracker.log_params({"surface": cfg.get("surface", {}).get("kind"), "epsilon": cfg.get("epsilon"),
                            "m": cfg.get("pattern", {}).get("m"), "n": cfg.get("pattern", {}).get("n")})
        tracker.log_metrics(manifest.get("metrics", {}))
        manifest_path = os.path.join(run_dir, "manifest.yaml")
        if os.path.exists(manifest_path):
            tracker.log_artifact(manifest_path)
    except Exception as e:
        logger.warning("MLflow logging skipped: %s", e)
    finally:
        try:
            tracker.end()
        except Exception:
            pass
