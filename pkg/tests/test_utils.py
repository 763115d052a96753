import argparse

import numpy as np
import pytest
import torch
import yaml

from errors import ConfigError
from utils import DEFAULTS, check_resolution, config_hash, load_config, none_or_str, seed_all, threads, write_report


def _write(path, config):
    with open(path, "w") as f:
        yaml.safe_dump(config, f)
    return path


def test_defaults_are_valid():
    config = load_config()
    assert config == DEFAULTS
    assert config is not DEFAULTS


def test_file_values_override_defaults(tmp_path):
    path = _write(tmp_path / "run.yaml", {"resolution": 64, "pinning": {"b": 0.3}, "domain": {"shape": "rectangle",
                                                                                             "width": 2, "height": 1}})
    config = load_config(path, overrides={"resolution": 32, "h_ex": None})
    assert config["resolution"] == 32
    assert config["pinning"]["b"] == 0.3
    assert config["pinning"]["lambda"] == DEFAULTS["pinning"]["lambda"]
    assert config["domain"] == {"shape": "rectangle", "width": 2, "height": 1}
    assert "h_ex" not in config


def test_low_resolution_is_rejected(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(_write(tmp_path / "run.yaml", {"resolution": 8}))
    assert e.value.field == "resolution"


def test_contrast_out_of_range(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(_write(tmp_path / "run.yaml", {"pinning": {"b": 1.5}}))
    assert e.value.field == "pinning.b"


def test_unknown_key_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path / "run.yaml", {"resolutoin": 64}))
    with pytest.raises(ConfigError) as e:
        load_config(tmp_path / "missing.yaml")
    assert e.value.field == "config"


def test_yaml_syntax_error_names_the_line(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("resolution: 64\npinning: [b: 0.5\n")
    with pytest.raises(ConfigError) as e:
        load_config(path)
    assert e.value.field.startswith("line ")


def test_config_hash_is_stable():
    a = load_config()
    b = load_config()
    assert config_hash(a) == config_hash(b)
    b["resolution"] = 128
    assert config_hash(a) != config_hash(b)


def test_write_report_is_reproducible(tmp_path):
    payload = {"values": np.arange(3), "scalar": np.float64(0.5), "nested": {"z": 1, "a": [1.0, 2.0]}}
    first = tmp_path / "a" / "report.json"
    second = tmp_path / "b" / "report.json"
    report = write_report(first, payload, DEFAULTS)
    write_report(second, payload, DEFAULTS)
    assert first.read_bytes() == second.read_bytes()
    assert report["config_hash"] == config_hash(DEFAULTS)
    assert "version" in report


def test_none_or_str():
    assert none_or_str("None") is None
    assert none_or_str("run.yaml") == "run.yaml"


def test_check_resolution():
    assert check_resolution("32") == 32
    with pytest.raises(argparse.ArgumentTypeError):
        check_resolution("8")


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("GLPIN_THREADS", "3")
    assert threads() == 3
    monkeypatch.setenv("GLPIN_THREADS", "zero")
    with pytest.raises(ConfigError):
        threads()
    monkeypatch.setenv("GLPIN_THREADS", "0")
    with pytest.raises(ConfigError):
        threads()
    monkeypatch.delenv("GLPIN_THREADS")
    assert threads() >= 1


def test_seed_all_is_reproducible():
    first = seed_all(7)
    a = (first.random(3), torch.rand(3))
    second = seed_all(7)
    b = (second.random(3), torch.rand(3))
    assert np.array_equal(a[0], b[0])
    assert torch.equal(a[1], b[1])
