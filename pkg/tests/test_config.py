"""Layered run configuration."""

import json

import pytest

from entropica.config import ConfigError, RunConfig, resolve_config


def test_defaults():
    cfg = resolve_config(environ={})
    assert cfg == RunConfig()
    assert cfg.grid_points == 2**14 and cfg.tolerance_nats == 1e-3 and cfg.output_format == "text"


def test_precedence(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"grid_points": 4096, "seed": 5, "tolerance_nats": 0.01}))
    env = {"ENTROPICA_SEED": "9", "ENTROPICA_TOL": "0.002"}
    cfg = resolve_config({"tolerance_nats": 0.005, "seed": None}, path, env)
    assert cfg.grid_points == 4096  # file
    assert cfg.seed == 9  # environment beats file
    assert cfg.tolerance_nats == 0.005  # flag beats environment


def test_env_names():
    env = {
        "ENTROPICA_GRID_POINTS": "2048",
        "ENTROPICA_TRUNCATION_SIGMAS": "8",
        "ENTROPICA_BA_GAP": "1e-7",
        "ENTROPICA_BA_MAX_ITERATIONS": "1e4",
        "ENTROPICA_FORMAT": "json",
    }
    cfg = resolve_config(environ=env)
    assert (cfg.grid_points, cfg.truncation_sigmas, cfg.ba_gap_threshold) == (2048, 8.0, 1e-7)
    assert cfg.ba_max_iterations == 10_000 and cfg.output_format == "json"


@pytest.mark.parametrize(
    "kwargs",
    [
        {"grid_points": 1000},
        {"grid_points": 512},
        {"truncation_sigmas": 3.0},
        {"tolerance_nats": 0.0},
        {"ba_gap_threshold": -1.0},
        {"seed": -1},
        {"output_format": "xml"},
    ],
)
def test_invariants(kwargs):
    with pytest.raises(ConfigError):
        RunConfig(**kwargs)


def test_bad_sources(tmp_path):
    with pytest.raises(ConfigError):
        resolve_config(environ={"ENTROPICA_GRID_POINTS": "lots"})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        resolve_config(config_file=bad, environ={})
    with pytest.raises(ConfigError):
        resolve_config(config_file=tmp_path / "missing.json", environ={})
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"colour": "blue"}')
    with pytest.raises(ConfigError):
        resolve_config(config_file=unknown, environ={})
    listy = tmp_path / "list.json"
    listy.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        resolve_config(config_file=listy, environ={})


def test_fractional_int_rejected():
    with pytest.raises(ConfigError):
        resolve_config({"grid_points": 2048.5}, environ={})


def test_dict_round_trip():
    cfg = RunConfig(grid_points=4096, seed=3, output_format="csv")
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
