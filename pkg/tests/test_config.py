import pytest
import yaml

from miura.core.config import (OUTPUT_DIR_ENV, PatternConfig, dims_for_quads, dump_run_config, load_run_config,
                               validate_run_config)
from miura.core.errors import ConfigError


@pytest.mark.parametrize("quads,dims", [(288, (24, 12)), (392, (28, 14)), (3200, (80, 40)),
                                        (100, (10, 10)), (12, (4, 3)), (7, (7, 1))])
def test_dims_for_quads(quads, dims):
    assert dims_for_quads(quads) == dims


def test_tiny_quad_counts_are_rejected():
    with pytest.raises(ValueError):
        dims_for_quads(3)


def test_quad_count_wins_over_dims():
    p = PatternConfig(m=3, n=3, quads=512)
    assert (p.m, p.n) == (32, 16)


def test_defaults():
    cfg = validate_run_config({})
    assert cfg.surface.kind == "saddle"
    assert (cfg.pattern.m, cfg.pattern.n) == (24, 12)
    assert cfg.epsilon == 0.05
    assert cfg.weights.as_tuple() == (1.0, 0.1, 0.01)
    assert cfg.solver.tol_feas == 1e-12
    assert cfg.solver.tol_stat == 1e-8


@pytest.mark.parametrize("raw", [
    {"unknown": 1},
    {"solver": {"tolerance": 1e-3}},
    {"schema_version": 2},
    {"epsilon": -0.1},
    {"pattern": {"m": 1, "n": 8}},
    {"pattern": {"quads": 7}},
    {"surface": {"domain": [[1.0, -1.0], [-1.0, 1.0]]}},
])
def test_invalid_configs_raise_config_error(raw):
    with pytest.raises(ConfigError):
        validate_run_config(raw)


def test_dump_and_validate_round_trip():
    cfg = validate_run_config({"surface": {"kind": "wave", "params": {"A": 0.2}}, "pattern": {"quads": 392}})
    again = validate_run_config(dump_run_config(cfg))
    assert again == cfg
    assert yaml.safe_load(yaml.safe_dump(dump_run_config(cfg))) == dump_run_config(cfg)


def test_load_with_dotted_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    path = tmp_path / "run.yaml"
    path.write_text("alias: base\nsurface:\n  kind: bowl\nsolver:\n  max_iters: 20\n", encoding="utf-8")
    cfg = load_run_config(path, {"solver.max_iters": 5, "epsilon": None, "pattern.quads": 288,
                                 "surface.params.k": 0.25})
    assert cfg.alias == "base"
    assert cfg.surface.kind == "bowl"
    assert cfg.surface.params == {"k": 0.25}
    assert cfg.solver.max_iters == 5
    assert cfg.epsilon == 0.05
    assert (cfg.pattern.m, cfg.pattern.n) == (24, 12)


def test_environment_sets_the_output_directory(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env_out"))
    cfg = load_run_config(None, {"output_dir": "flag_out"})
    assert cfg.output_dir == str(tmp_path / "env_out")


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("alias: [unclosed\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(bad)
    scalar = tmp_path / "scalar.yaml"
    scalar.write_text("42\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(scalar)
