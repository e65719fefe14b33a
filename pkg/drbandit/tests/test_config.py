import json
import logging

import pytest

import drbandit.config as config
from drbandit.errors import ConfigurationError


def test_get_max_workers_requested(monkeypatch):
    monkeypatch.delenv(config.THREADS_ENV_VAR, raising=False)
    assert config.get_max_workers(3) == 3


def test_get_max_workers_defaults_to_cpu_count(monkeypatch):
    monkeypatch.delenv(config.THREADS_ENV_VAR, raising=False)
    monkeypatch.setattr(config.os, "cpu_count", lambda: 6)
    assert config.get_max_workers() == 6
    assert config.get_max_workers(0) == 6


def test_get_max_workers_env_cap(monkeypatch):
    """The environment variable caps the worker count."""
    monkeypatch.setenv(config.THREADS_ENV_VAR, "2")
    assert config.get_max_workers(8) == 2
    assert config.get_max_workers(1) == 1


@pytest.mark.parametrize("raw", ["zero", "0", "-3"])
def test_get_max_workers_invalid_env(monkeypatch, caplog, raw):
    monkeypatch.setenv(config.THREADS_ENV_VAR, raw)
    with caplog.at_level(logging.WARNING):
        assert config.get_max_workers(4) == 4
    assert config.THREADS_ENV_VAR in caplog.text


def test_load_config_file(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"riskmetric": "cvar:0.75", "etc-explore": "T/20", "trials": 5}))
    values = config.load_config_file(path)
    assert values == {"riskmetric": "cvar:0.75", "etc_explore": "T/20", "trials": 5}


@pytest.mark.parametrize(
    "content",
    ["{not json", json.dumps([1, 2]), json.dumps({"horizons": [1000]})],
    ids=["invalid-json", "not-an-object", "unknown-key"],
)
def test_load_config_file_rejects(tmp_path, content):
    path = tmp_path / "exp.json"
    path.write_text(content)
    with pytest.raises(ConfigurationError):
        config.load_config_file(path)


def test_load_config_file_missing(tmp_path):
    with pytest.raises(ConfigurationError):
        config.load_config_file(tmp_path / "absent.json")


def test_merge_config_skips_none():
    merged = config.merge_config({"trials": 5, "seed": 1}, {"trials": None, "seed": 2})
    assert merged == {"trials": 5, "seed": 2}, "CLI None must not override file values"
