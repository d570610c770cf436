"""Ablations and parameter sweeps built from independent pipeline runs.

Sweeps fan out over a bounded process pool; reproducible configurations run
sequentially in submission order. Summary files are written by the parent
process only, after every run has finished.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd

from ..core.config import RunConfig, dump_run_config, validate_run_config
from ..core.logging import setup_logging
from ..data.entities import METRIC_COLUMNS
from ..data.repository import FileArtifactRepository
from ..geometry.registry import build_surface
from .pipeline import FAILED_STATUSES, Pipeline

logger = logging.getLogger(__name__)

ABLATION_TERMS = ("length", "mu", "center")
DEFAULT_EPSILONS = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1)
DEFAULT_QUAD_COUNTS = (288, 392, 512, 648, 800, 1800, 3200)
ABLATION_COLUMNS = ("variant", "drop", "status", "iterations", "mean_edge_length", "edge_length_ratio",
                    "foldover_count", "max_mu", "mean_mu", "centroid_drift", "E_l", "feas_planarity",
                    "feas_develop")


@dataclass
class ExperimentResult:
    table: pd.DataFrame
    summary: Dict[str, Any]
    out_dir: Path
    statuses: List[str] = field(default_factory=list)
    # statuses that decide failure; all of them when unset
    gating: Optional[List[str]] = None

    @property
    def failed(self) -> bool:
        checked = self.statuses if self.gating is None else self.gating
        return any(s in FAILED_STATUSES for s in checked)


def _variant(cfg: RunConfig, alias: str, output_dir: Path, **updates: Any) -> RunConfig:
    doc = dump_run_config(cfg)
    doc["alias"] = alias
    doc["output_dir"] = str(output_dir)
    for key, value in updates.items():
        node = doc
        parts = key.split("__")
        for p in parts[:-1]:
            node = node[p]
        node[parts[-1]] = value
    return validate_run_config(doc)


def _run_worker(doc: Dict[str, Any]) -> Dict[str, Any]:
    cfg = validate_run_config(doc)
    setup_logging(cfg.log_level)
    result = Pipeline().run(cfg)
    return result.metrics.as_row()


def run_many(configs: Sequence[RunConfig], workers: int = 1, reproducible: bool = False) -> List[Dict[str, Any]]:
    """Metric rows in submission order."""
    docs = [dump_run_config(c) for c in configs]
    if workers <= 1 or reproducible or len(docs) <= 1:
        return [_run_worker(d) for d in docs]
    logger.info("running %d configurations on %d workers", len(docs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_worker, docs))


def ablate(cfg: RunConfig, drop: str, cap: int = 40, extend: float = 2.0) -> ExperimentResult:
    """Full model against the model without one energy term, with an early-stopping iteration cap.

    Dropping ``center`` runs both variants on the domain scaled by ``extend``
    with the fill fraction reduced by the same factor, so the pattern keeps its size.
    """
    if drop not in ABLATION_TERMS:
        raise ValueError(f"drop must be one of {ABLATION_TERMS}, got {drop!r}")
    out_dir = Path(cfg.output_dir) / f"{cfg.alias}_ablate_{drop}"
    updates: Dict[str, Any] = {"solver__max_iters": cap}
    if drop == "center":
        domain = build_surface(cfg.surface).domain.scaled(extend)
        updates["surface__domain"] = [[domain.x0, domain.x1], [domain.y0, domain.y1]]
        updates["pattern__fill"] = cfg.pattern.fill / extend
    full = _variant(cfg, "full", out_dir, **updates)
    dropped = _variant(cfg, f"no_{drop}", out_dir, **updates, **{f"weights__{drop}": 0.0})
    rows = run_many([full, dropped], cfg.workers, cfg.reproducible)
    for row, variant in zip(rows, ("full", "dropped")):
        row["variant"] = variant
        row["drop"] = drop
    table = pd.DataFrame(rows, columns=list(ABLATION_COLUMNS))
    f, d = rows
    summary = {
        "drop": drop,
        "cap": cap,
        "shrinkage": bool(d["mean_edge_length"] < f["mean_edge_length"]),
        "foldover": bool(d["max_mu"] > f["max_mu"]),
        "off_centering": bool(d["centroid_drift"] > f["centroid_drift"]),
        "full": {k: f[k] for k in ABLATION_COLUMNS[2:]},
        "dropped": {k: d[k] for k in ABLATION_COLUMNS[2:]},
    }
    expected = {"length": "shrinkage", "mu": "foldover", "center": "off_centering"}[drop]
    summary["expected_effect"] = expected
    summary["effect_observed"] = summary[expected]
    # the dropped model may stall or leave the domain; only the full model has to finish cleanly
    summary["full_status"], summary["dropped_status"] = f["status"], d["status"]
    logger.info("ablation drop=%s: %s %s (full %s, dropped %s)", drop, expected,
                "observed" if summary[expected] else "not observed", f["status"], d["status"])
    return _finish(out_dir, "ablation", table, summary, [r["status"] for r in rows], gating=[f["status"]])


def sweep_epsilon(cfg: RunConfig, values: Iterable[float] = DEFAULT_EPSILONS) -> ExperimentResult:
    values = list(values)
    out_dir = Path(cfg.output_dir) / f"{cfg.alias}_sweep_epsilon"
    configs = [_variant(cfg, f"eps_{v:g}", out_dir, epsilon=float(v)) for v in values]
    rows = run_many(configs, cfg.workers, cfg.reproducible)
    table = pd.DataFrame(rows, columns=list(METRIC_COLUMNS)).sort_values("epsilon", kind="stable")
    table = table.reset_index(drop=True)
    mu = table["mean_mu"].tolist()
    summary: Dict[str, Any] = {"epsilons": table["epsilon"].tolist(), "mean_mu": mu}
    if len(mu) > 1:
        summary["deformation_decreases_from_first"] = bool(mu[0] > min(mu[1:]))
        summary["argmin_epsilon"] = float(table["epsilon"].iloc[int(pd.Series(mu).idxmin())])
    if 0.01 in summary["epsilons"] and 0.05 in summary["epsilons"]:
        at = dict(zip(summary["epsilons"], mu))
        summary["mean_mu_0.01_gt_0.05"] = bool(at[0.01] > at[0.05])
    return _finish(out_dir, "sweep_epsilon", table, summary, table["status"].tolist())


def sweep_resolution(cfg: RunConfig, quad_counts: Iterable[int] = DEFAULT_QUAD_COUNTS) -> ExperimentResult:
    quad_counts = list(quad_counts)
    out_dir = Path(cfg.output_dir) / f"{cfg.alias}_sweep_resolution"
    configs = [_variant(cfg, f"q_{q}", out_dir, pattern__quads=int(q)) for q in quad_counts]
    rows = run_many(configs, cfg.workers, cfg.reproducible)
    table = pd.DataFrame(rows, columns=list(METRIC_COLUMNS)).sort_values("quads", kind="stable")
    table = table.reset_index(drop=True)
    mu = table["mean_mu"].tolist()
    summary: Dict[str, Any] = {"quads": table["quads"].tolist(), "mean_mu": mu}
    if len(mu) > 1:
        summary["deformation_decreases"] = bool(mu[0] > mu[-1])
    return _finish(out_dir, "sweep_resolution", table, summary, table["status"].tolist())


def _finish(out_dir: Path, name: str, table: pd.DataFrame, summary: Dict[str, Any],
            statuses: List[str], gating: Optional[List[str]] = None) -> ExperimentResult:
    repo = FileArtifactRepository(out_dir)
    repo.save_table(f"{name}.csv", table)
    repo.save_manifest(f"{name}_summary.yaml", {"experiment": name, "statuses": statuses, **summary})
    return ExperimentResult(table=table, summary=summary, out_dir=out_dir, statuses=statuses, gating=gating)
