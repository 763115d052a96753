import argparse
import copy
import hashlib
import json
import logging
import os
from pathlib import Path

import jsonschema
import numpy as np
import torch
import yaml
from pytorch_lightning import seed_everything
from rich.console import Console
from rich.logging import RichHandler

from errors import ConfigError

VERSION = "0.3.0"

SCHEMA_PATH = Path(__file__).resolve().parent / "docs" / "config.schema.json"

DEFAULTS = {
    "domain": {"shape": "disk", "radius": 1.0},
    "resolution": 256,
    "pinning": {"b": 0.5, "lambda": 0.4, "delta": 0.25, "epsilon": 0.01, "omega": {"shape": "disk", "radius": 0.25}},
    "seeds": [0],
    "output_dir": "./output",
    "solver": "direct",
    "renorm": {"d_max": 4, "multistart": None, "micro_search": 9, "n_theta": 128, "Rhat": 8.0, "rhat": 0.02,
               "levels": 3, "bbh_radii": [50.0, 100.0, 200.0]},
    "flow": {"max_sweeps": 2000, "tol": 1e-9, "dt": None, "dt_min": None, "warmup": 20, "reproject_every": 10},
    "window": 0.0,
}


def none_or_str(value):
    if value == 'None':
        return None
    return value


def check_positive(value):
    fvalue = float(value)
    if not fvalue > 0:
        raise argparse.ArgumentTypeError(f"{value} is an invalid value. Value has to be positive")
    return fvalue


def check_resolution(value):
    ivalue = int(value)
    if ivalue < 16:
        raise argparse.ArgumentTypeError(f"{value} is an invalid resolution. Value has to be at least 16")
    return ivalue


def setup_logging(verbose=False):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format="%(message)s", datefmt="[%X]",
                        handlers=[RichHandler(console=Console(stderr=True), show_path=verbose)], force=True)


def threads():
    """Worker cap from GLPIN_THREADS, else the CPU count."""
    value = os.environ.get("GLPIN_THREADS")
    if value is None:
        return os.cpu_count() or 1
    try:
        n = int(value)
    except ValueError:
        raise ConfigError("GLPIN_THREADS", f"expected an integer, got {value!r}")
    if n < 1:
        raise ConfigError("GLPIN_THREADS", f"must be at least 1, got {n}")
    return n


def apply_threads():
    n = threads()
    torch.set_num_threads(n)
    return n


def _merge(base, overlay):
    out = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key not in ("domain", "omega"):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _field_of(error):
    path = ".".join(str(p) for p in error.absolute_path)
    return path or "<root>"


def validate_config(config, schema_path=SCHEMA_PATH):
    with open(schema_path, "r") as f:
        schema = json.load(f)
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError(_field_of(errors[0]), errors[0].message)
    return config


def load_config(path=None, overrides=None):
    """Read a JSON or YAML config, fill defaults, apply overrides and validate against the shipped schema."""
    config = {}
    if path is not None:
        try:
            with open(path, "r") as f:
                config = yaml.safe_load(f) or {}
        except FileNotFoundError:
            raise ConfigError("config", f"no such file {path}")
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = f"line {mark.line + 1}" if mark is not None else "config"
            raise ConfigError(where, str(getattr(e, "problem", e)))
        if not isinstance(config, dict):
            raise ConfigError("<root>", "config must be a mapping")
    config = _merge(DEFAULTS, config)
    if overrides:
        config = _merge(config, {k: v for k, v in overrides.items() if v is not None})
    return validate_config(config)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_to_builtin)


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def seed_all(seed):
    """Seed python, numpy and torch, and return the generator randomized routines take explicitly."""
    seed_everything(int(seed))
    return np.random.default_rng(int(seed))


def _to_builtin(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def write_report(path, payload, config):
    """JSON report with sorted keys, stamped with the config hash and version."""
    report = dict(payload)
    report["config_hash"] = config_hash(config)
    report["version"] = VERSION
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(report, f, sort_keys=True, indent=2, default=_to_builtin)
        f.write("\n")
    return report
