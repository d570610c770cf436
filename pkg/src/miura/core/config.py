import math
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError

SCHEMA_VERSION = 1
OUTPUT_DIR_ENV = "MIURA_OUTPUT_DIR"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", protected_namespaces=())


class SurfaceConfig(_Strict):
    kind: str = "saddle"
    params: Dict[str, float] = Field(default_factory=dict)
    domain: Optional[tuple[tuple[float, float], tuple[float, float]]] = None

    @field_validator("domain")
    @classmethod
    def _ordered(cls, v):
        if v is not None:
            (x0, x1), (y0, y1) = v
            if not (x0 < x1 and y0 < y1):
                raise ValueError(f"domain ranges must be increasing: {v}")
        return v


class PatternConfig(_Strict):
    m: int = 24
    n: int = 12
    quads: Optional[int] = None
    skew: Optional[float] = None
    fill: float = Field(0.9, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _resolve_quads(self):
        if self.quads is not None:
            self.m, self.n = dims_for_quads(self.quads)
        if self.m < 2 or self.n < 2:
            raise ValueError(f"pattern needs at least 2x2 quads, got ({self.m}, {self.n})")
        return self


class EnergyWeights(_Strict):
    length: float = Field(1.0, ge=0.0)
    mu: float = Field(0.1, ge=0.0)
    center: float = Field(0.01, ge=0.0)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.length, self.mu, self.center)


class SolverConfig(_Strict):
    max_iters: int = Field(100, ge=1)
    tol_feas: float = Field(1e-12, gt=0.0)
    tol_stat: float = Field(1e-8, gt=0.0)
    tau0: float = Field(0.0, ge=0.0)
    tau_growth: float = Field(10.0, gt=1.0)
    tau_min: float = Field(1e-8, gt=0.0)
    max_regularizations: int = Field(8, ge=0)
    dual_regularization: float = Field(1e-12, ge=0.0)
    damping: bool = True
    backtrack_factor: float = Field(0.5, gt=0.0, lt=1.0)
    armijo: float = Field(1e-4, ge=0.0, lt=0.5)
    max_backtracks: int = Field(30, ge=0)
    # initial trust radius, in shortest initial edge lengths
    max_step: float = Field(0.25, gt=0.0)
    # fraction of each domain side kept clear by projected trial steps
    boundary_margin: float = Field(1e-3, ge=0.0, lt=0.5)
    debug_residual: bool = False


class RunConfig(_Strict):
    schema_version: int = SCHEMA_VERSION
    alias: str = "run"
    surface: SurfaceConfig = Field(default_factory=SurfaceConfig)
    pattern: PatternConfig = Field(default_factory=PatternConfig)
    epsilon: float = Field(0.05, ge=0.0)
    weights: EnergyWeights = Field(default_factory=EnergyWeights)
    center: Optional[tuple[float, float]] = None
    solver: SolverConfig = Field(default_factory=SolverConfig)
    develop_gate: float = Field(1e-6, gt=0.0)
    seed_quad: int = Field(0, ge=0)
    output_dir: str = "outputs"
    reproducible: bool = False
    workers: int = Field(1, ge=1)
    log_level: str = "INFO"

    @field_validator("schema_version")
    @classmethod
    def _known_schema(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {v}; expected {SCHEMA_VERSION}")
        return v


def dims_for_quads(quads: int) -> tuple[int, int]:
    """Pattern dims (m, n) for a total quad count.

    Counts of the form 2k^2 give (2k, k), twice as many rows as columns;
    anything else gets the most square factorization with m >= n.
    """
    if quads < 4:
        raise ValueError(f"quad count too small: {quads}")
    k = math.isqrt(quads // 2)
    if 2 * k * k == quads:
        return 2 * k, k
    n = math.isqrt(quads)
    while quads % n:
        n -= 1
    return quads // n, n


def load_run_config(path: str | Path | None, overrides: Dict[str, Any] | None = None) -> RunConfig:
    """Read a YAML run config, merge dotted-key overrides, validate."""
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigError(f"malformed YAML in {path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must be a mapping")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        _set_dotted(raw, key, value)
    env_out = os.getenv(OUTPUT_DIR_ENV)
    if env_out:
        raw["output_dir"] = env_out
    return validate_run_config(raw)


def validate_run_config(raw: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig(**raw)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def dump_run_config(cfg: RunConfig) -> Dict[str, Any]:
    return cfg.model_dump(mode="json")


def _set_dotted(doc: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    node = doc
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override {key}: {p} is not a mapping")
    node[parts[-1]] = value
