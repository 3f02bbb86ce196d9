"""Config defaults, TOML overlay, and strict unknown-field rejection."""

import os

import pytest

from eventshap.config import ConfigError, default_config, load_config

REPO_DEFAULT = os.path.join(os.path.dirname(__file__), "..", "configs",
                            "default.toml")


def write(tmp_path, text):
    path = os.path.join(tmp_path, "cfg.toml")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def test_defaults_have_every_section():
    cfg = default_config()
    assert set(cfg) == {"run", "attribution", "evaluation",
                       "econ", "market", "social"}
    assert cfg["run"]["scenario"] == "social"
    assert cfg["attribution"]["method"] == "mc"
    assert cfg["econ"]["lam"] == 0.94
    assert cfg["social"]["n_agents"] == 20


def test_no_path_returns_defaults():
    assert load_config(None) == default_config()


def test_shipped_default_file_is_a_no_op():
    assert load_config(REPO_DEFAULT) == default_config()


def test_overrides_merge_over_defaults(tmp_path):
    path = write(tmp_path, """
[run]
scenario = "econ"
seed = 12

[econ]
kappa = 0.5
""")
    cfg = load_config(path)
    assert cfg["run"]["scenario"] == "econ"
    assert cfg["run"]["seed"] == 12
    assert cfg["run"]["max_steps"] == 40  # untouched default
    assert cfg["econ"]["kappa"] == 0.5
    assert cfg["econ"]["lam"] == 0.94


def test_unknown_section_is_named(tmp_path):
    path = write(tmp_path, "[typo_section]\nx = 1\n")
    with pytest.raises(ConfigError, match="typo_section"):
        load_config(path)


def test_unknown_key_is_named(tmp_path):
    path = write(tmp_path, "[run]\nscenarioo = \"econ\"\n")
    with pytest.raises(ConfigError, match="run.scenarioo"):
        load_config(path)


def test_bad_scenario_name_rejected(tmp_path):
    path = write(tmp_path, "[run]\nscenario = \"weather\"\n")
    with pytest.raises(ConfigError, match="weather"):
        load_config(path)


def test_parse_errors_carry_the_path(tmp_path):
    path = write(tmp_path, "[run\n")
    with pytest.raises(ConfigError, match="cfg.toml"):
        load_config(path)


def test_non_table_section_rejected(tmp_path):
    path = write(tmp_path, "run = 5\n")
    with pytest.raises(ConfigError, match="table"):
        load_config(path)
