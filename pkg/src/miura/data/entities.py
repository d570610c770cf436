from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, Optional


@dataclass(frozen=True)
class RunMetrics:
    """One CSV row per run; column order is the field order."""
    epsilon: float
    E_l: float
    mean_mu: float
    max_mu: float
    feas_planarity: float
    feas_develop: float
    iterations: int
    surface: str
    m: int
    n: int
    quads: int
    status: str
    E_mu: float
    E_c: float
    energy: float
    dilation: float
    foldover_count: int
    feas_planarity_normalized: float
    stationarity: float
    mean_edge_length: float
    edge_length_ratio: float
    centroid_drift: float
    consistency_error: float
    n_mountain: int
    n_valley: int
    n_flat: int

    def as_row(self) -> Dict[str, Any]:
        return asdict(self)


METRIC_COLUMNS = tuple(f.name for f in fields(RunMetrics))
TRACE_COLUMNS = ("iteration", "E_l", "E_mu", "E_c", "energy", "max_g_planarity", "max_g_develop",
                 "stationarity", "merit", "step", "tau", "backtracks")


@dataclass
class RunManifest:
    config: Dict[str, Any]
    version: str
    status: str
    artifacts: Dict[str, str] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    solver_message: str = ""
    started_at: Optional[str] = None
    finished_at: Optional[str] = None
    duration_sec: Optional[float] = None
    resources: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        """Plain mapping for YAML; unset timing and resource entries are left out."""
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "RunManifest":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})
