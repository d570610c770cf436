"""Command-line front end.

Every subcommand prints one JSON document on stdout; logs go to stderr.
Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 I/O failure.
"""
import argparse
import json
import logging
import math
import sys
from typing import Any, Dict, List, Optional

import yaml

from .core.config import RunConfig, load_run_config
from .core.errors import (ArtifactError, ConfigError, InvalidPatternError, MiuraError, PlanarityGateError,
                          SingularChartError)
from .core.logging import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _emit(doc: Dict[str, Any]) -> None:
    print(json.dumps(_jsonable(doc), ensure_ascii=False))


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="YAML run config; flags override its keys")
    p.add_argument("--alias", default=None)
    p.add_argument("--surface", default=None, help="surface family (flat, saddle, bowl, wave, tunnel, helicoid)")
    p.add_argument("--quads", type=int, default=None, help="total quad count; wins over --m/--n")
    p.add_argument("--m", type=int, default=None, help="quad rows")
    p.add_argument("--n", type=int, default=None, help="quad columns")
    p.add_argument("--skew", type=float, default=None, help="signed row shift of odd rows")
    p.add_argument("--epsilon", type=float, default=None, help="offset half-thickness")
    p.add_argument("--w-length", type=float, default=None, dest="w_length")
    p.add_argument("--w-mu", type=float, default=None, dest="w_mu")
    p.add_argument("--w-center", type=float, default=None, dest="w_center")
    p.add_argument("--max-iters", type=int, default=None, dest="max_iters")
    p.add_argument("--pure-newton", action="store_true", help="take full Newton steps (domain damping only)")
    p.add_argument("--output-dir", default=None, dest="output_dir")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--reproducible", action="store_true", help="sequential runs, no timestamps in manifests")
    p.add_argument("--log-level", default=None, dest="log_level")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted config override, e.g. solver.tol_stat=1e-9")


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "alias": args.alias,
        "surface.kind": args.surface,
        "pattern.quads": args.quads,
        "pattern.m": args.m,
        "pattern.n": args.n,
        "pattern.skew": args.skew,
        "epsilon": args.epsilon,
        "weights.length": args.w_length,
        "weights.mu": args.w_mu,
        "weights.center": args.w_center,
        "solver.max_iters": args.max_iters,
        "output_dir": args.output_dir,
        "workers": args.workers,
        "log_level": args.log_level,
    }
    if args.pure_newton:
        out["solver.damping"] = False
    if args.reproducible:
        out["reproducible"] = True
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out[key] = yaml.safe_load(raw)
    return out


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(args.config, _overrides(args))
    setup_logging(cfg.log_level)
    return cfg


def cmd_run(args: argparse.Namespace) -> int:
    from .orchestration.pipeline import Pipeline

    cfg = _config(args)
    result = Pipeline().run(cfg)
    if args.with_mlflow:
        from .tracking.mlflow_tracker import track_run

        track_run(result.manifest.to_dict(), str(result.run_dir))
    _emit({"run_dir": str(result.run_dir), "status": result.report.status.value,
           "metrics": result.metrics.as_row()})
    return EXIT_OK if result.converged else EXIT_SOLVER


def cmd_ablate(args: argparse.Namespace) -> int:
    from .orchestration.experiments import ABLATION_TERMS, ablate

    cfg = _config(args)
    drops = ABLATION_TERMS if args.drop == "all" else (args.drop,)
    summaries, failed = [], False
    for drop in drops:
        result = ablate(cfg, drop, cap=args.cap, extend=args.extend)
        summaries.append({"out_dir": str(result.out_dir), **result.summary})
        failed = failed or result.failed
    _emit({"ablations": summaries})
    return EXIT_SOLVER if failed else EXIT_OK


def cmd_sweep_epsilon(args: argparse.Namespace) -> int:
    from .orchestration.experiments import DEFAULT_EPSILONS, sweep_epsilon

    cfg = _config(args)
    result = sweep_epsilon(cfg, args.values or DEFAULT_EPSILONS)
    _emit({"out_dir": str(result.out_dir), **result.summary})
    return EXIT_SOLVER if result.failed else EXIT_OK


def cmd_sweep_resolution(args: argparse.Namespace) -> int:
    from .orchestration.experiments import DEFAULT_QUAD_COUNTS, sweep_resolution

    cfg = _config(args)
    result = sweep_resolution(cfg, args.quad_counts or DEFAULT_QUAD_COUNTS)
    _emit({"out_dir": str(result.out_dir), **result.summary})
    return EXIT_SOLVER if result.failed else EXIT_OK


def cmd_develop(args: argparse.Namespace) -> int:
    from .orchestration.report import develop_mesh

    setup_logging(args.log_level)
    dev = develop_mesh(args.mesh, args.out_dir, gate=args.gate, seed=args.seed)
    _emit({"out_dir": args.out_dir, "consistency_error": dev.consistency_error, "diameter": dev.diameter,
           "creases": dev.counts()})
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    from .orchestration.report import rederive

    setup_logging(args.log_level)
    result = rederive(args.run_dir, tolerance=args.tolerance)
    _emit({"run_dir": args.run_dir, "consistent": result.consistent, "max_deviation": result.max_deviation,
           "metrics": result.metrics.as_row()})
    if not result.consistent:
        logger.error("metrics re-derived from %s differ from its manifest", args.run_dir)
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="miura", description="Surface-aligned Miura-ori inverse design")
    sub = ap.add_subparsers(dest="cmd", required=True)

    spr = sub.add_parser("run", help="optimize one pattern and write its artifacts")
    _add_config_args(spr)
    spr.add_argument("--with-mlflow", action="store_true",
                     help="log params and metrics to MLflow (MLFLOW_TRACKING_URI)")
    spr.set_defaults(func=cmd_run)

    spa = sub.add_parser("ablate", help="full model against one dropped energy term")
    _add_config_args(spa)
    spa.add_argument("--drop", choices=["length", "mu", "center", "all"], default="all")
    spa.add_argument("--cap", type=int, default=40, help="early-stopping iteration cap")
    spa.add_argument("--extend", type=float, default=2.0, help="domain scale factor for the centering ablation")
    spa.set_defaults(func=cmd_ablate)

    spe = sub.add_parser("sweep-epsilon", help="one run per offset half-thickness")
    _add_config_args(spe)
    spe.add_argument("--values", type=float, nargs="+", default=None)
    spe.set_defaults(func=cmd_sweep_epsilon)

    sps = sub.add_parser("sweep-resolution", help="one run per total quad count")
    _add_config_args(sps)
    sps.add_argument("--quad-counts", type=int, nargs="+", default=None, dest="quad_counts")
    sps.set_defaults(func=cmd_sweep_resolution)

    spd = sub.add_parser("develop", help="unfold a saved folded OBJ")
    spd.add_argument("mesh")
    spd.add_argument("--out-dir", default=".", dest="out_dir")
    spd.add_argument("--gate", type=float, default=1e-6, help="planarity gate")
    spd.add_argument("--seed", type=int, default=0, help="seed quad")
    spd.add_argument("--log-level", default="INFO", dest="log_level")
    spd.set_defaults(func=cmd_develop)

    spr2 = sub.add_parser("report", help="re-derive metrics of a run directory from its artifacts")
    spr2.add_argument("run_dir")
    spr2.add_argument("--tolerance", type=float, default=1e-12)
    spr2.add_argument("--log-level", default="INFO", dest="log_level")
    spr2.set_defaults(func=cmd_report)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArtifactError, OSError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (InvalidPatternError, PlanarityGateError, SingularChartError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MiuraError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
