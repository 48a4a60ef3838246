"""Test configuration loading"""

import json

import pytest

from config import DEFAULTS, Config, config, get_config


def test_defaults(clean_env):
    cfg = Config()
    assert cfg.n_points == DEFAULTS["N_POINTS"]
    assert cfg.checkpoints == [0.0, 25.0, 50.0, 75.0, 95.0]
    assert cfg.budget_seconds is None and cfg.budget_queries is None
    assert cfg.validate()


def test_file_then_env_then_override(clean_env, tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"seed": 9, "ISO3D_SAMPLE_SIZE": 50, "checkpoints": [0, 50]}))
    cfg = Config(str(path))
    assert cfg.seed == 9
    assert cfg.sample_size == 50
    assert cfg.checkpoints == [0.0, 50.0]

    clean_env.setenv("ISO3D_SEED", "5")
    assert Config(str(path)).seed == 5
    assert Config(str(path), {"seed": 1}).seed == 1


def test_missing_file_falls_back(clean_env, tmp_path):
    cfg = Config(str(tmp_path / "absent.json"))
    assert cfg.seed == 0


def test_invalid_values_are_reported(clean_env, capsys):
    clean_env.setenv("ISO3D_WORKERS", "0")
    clean_env.setenv("ISO3D_RESOLUTION", "many")
    cfg = Config()
    problems = cfg.problems()
    assert any("WORKERS" in p for p in problems)
    assert any("RESOLUTION" in p for p in problems)
    assert not cfg.validate()
    assert "Invalid configuration" in capsys.readouterr().out


def test_budget_for(clean_env):
    assert Config().budget_for(5) == 2.0
    assert Config().budget_for(40) == 5.0
    assert Config(overrides={"budget_seconds": 1.5}).budget_for(40) == 1.5


def test_get_config(clean_env):
    assert get_config() is config
    assert get_config(overrides={"seed": 3}).seed == 3


def test_print_status(clean_env, capsys):
    Config().print_status()
    out = capsys.readouterr().out
    assert "Configuration Status" in out
    assert "sample_size: 200" in out


def test_bad_env_type_raises(clean_env):
    clean_env.setenv("ISO3D_SEED", "x")
    with pytest.raises(ValueError):
        Config().seed
