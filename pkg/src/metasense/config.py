"""Run configuration: per-command defaults, JSON schemas and merging.

Precedence, lowest first: built-in defaults, the config file (YAML, or a
run manifest whose "config" block is used), then ``--set key=value`` flags.
"""

import copy
import json

import jsonschema
import numpy as np
import yaml

from .exceptions import MetasenseError


class ConfigError(MetasenseError):
    """Configuration does not parse or does not match the schema."""


def _num(minimum=None, maximum=None, exclusive_min=None):
    s = {"type": "number"}
    if minimum is not None:
        s["minimum"] = minimum
    if maximum is not None:
        s["maximum"] = maximum
    if exclusive_min is not None:
        s["exclusiveMinimum"] = exclusive_min
    return s


def _int(minimum=None):
    s = {"type": "integer"}
    if minimum is not None:
        s["minimum"] = minimum
    return s


def _obj(props, required=None):
    return {"type": "object", "properties": props,
            "required": list(required if required is not None else props),
            "additionalProperties": False}


GEOMETRY = _obj({
    "a": _num(exclusive_min=0), "w": _num(exclusive_min=0),
    "phi": _num(exclusive_min=0),
    "h": _num(5, 20), "r": _num(1, 5), "e": _num(2, 5), "mu": _num(0.5, 2),
})
GRID = _obj({"start": _num(exclusive_min=0), "stop": _num(exclusive_min=0),
             "points": _int(2)})
INTEGRATOR = _obj({"rtol": _num(exclusive_min=0), "atol": _num(exclusive_min=0)})
FIXED = {"type": "object", "additionalProperties": False,
         "properties": {"h": _num(5, 20), "r": _num(1, 5), "e": _num(2, 5),
                        "mu": _num(0.5, 2)}}
SENSOR = {"geometry": GEOMETRY, "n_cells": _int(2),
          "zeta": _num(0, exclusive_min=None, maximum=0.999)}
STRUCTURE = _obj({"n_floors": _int(1), "mass": _num(exclusive_min=0),
                  "stiffness": _num(exclusive_min=0), "damper": _num(0)})
NULLABLE_STR = {"type": ["string", "null"]}

SCHEMAS = {
    "band": _obj({**SENSOR, "n_q": _int(16)}),
    "transmit": _obj({**SENSOR, "grid": GRID,
                      "probe": {"type": ["integer", "string", "null"]}}),
    "dataset": _obj({**SENSOR, "grid": GRID, "n_samples": _int(0),
                     "seed": _int(0), "fixed": FIXED}),
    "train": _obj({"dataset": {"type": "string"}, "seed": _int(0),
                   "epochs": _int(1), "batch_size": _int(1),
                   "learning_rate": _num(exclusive_min=0),
                   "l2_lambda": _num(0), "noise_std": _num(0),
                   "plateau_factor": _num(exclusive_min=0, maximum=1),
                   "plateau_patience": _int(0),
                   "val_fraction": _num(exclusive_min=0, maximum=0.9),
                   "width": _int(1), "n_blocks": _int(0)}),
    "inverse": _obj({**SENSOR, "grid": GRID, "model": {"type": "string"},
                     "target_bdp": _num(exclusive_min=0), "trials": _int(1),
                     "iterations": _int(1),
                     "learning_rate": _num(exclusive_min=0), "fixed": FIXED,
                     "threshold": _num(exclusive_min=0), "seed": _int(0),
                     "verify": {"type": "boolean"}}),
    "simulate": _obj({**SENSOR, "mode": {"enum": ["structure", "coupled"]},
                      "structure": STRUCTURE, "model_file": NULLABLE_STR,
                      "damage": _num(0, 0.5),
                      "abrupt": {"oneOf": [{"type": "null"}, _obj({
                          "time": _num(0), "fraction": _num(0, 0.5)})]},
                      "noise_std": _num(0), "rate": _num(exclusive_min=0),
                      "duration": _num(exclusive_min=0), "seed": _int(0),
                      "window": _num(exclusive_min=0),
                      "piezo_coupling": _num(exclusive_min=0),
                      "integrator": INTEGRATOR}),
    "classify": _obj({**SENSOR, "source": {"enum": ["case", "files"]},
                      "case": {"enum": [1, 2, 3]},
                      "healthy": NULLABLE_STR, "damaged": NULLABLE_STR,
                      "measure": {"enum": ["steady-amplitude", "rmsd"]},
                      "window": {"oneOf": [{"type": "null"}, {
                          "type": "array", "items": {"type": "number"},
                          "minItems": 2, "maxItems": 2}]},
                      "duration": _num(exclusive_min=0),
                      "sample_rate": _num(exclusive_min=0),
                      "integrator": INTEGRATOR}),
    "sweep": _obj({**SENSOR, "kind": {"enum": ["sensitivity", "bdp_grid"]},
                   "structure": STRUCTURE,
                   "damage_levels": {"type": "array",
                                     "items": _num(0, 0.5), "minItems": 1},
                   "seed": _int(0), "duration": _num(exclusive_min=0),
                   "noise_std": _num(0), "rate": _num(exclusive_min=0),
                   "integrator": INTEGRATOR, "grid": GRID,
                   "r_values": {"type": "array", "items": _num(1, 5),
                                "minItems": 1},
                   "h_values": {"type": "array", "items": _num(5, 20),
                                "minItems": 1}}),
}

_GEOM_DEFAULT = {"a": 30.0, "w": 1.51, "phi": float(4 * np.pi), "h": 10.0,
                 "r": 5.0, "e": 2.0, "mu": 1.5}
_SENSOR_DEFAULT = {"geometry": _GEOM_DEFAULT, "n_cells": 5, "zeta": 0.01}
_GRID_DEFAULT = {"start": 1.0, "stop": 200.0, "points": 3981}
_INTEGRATOR_DEFAULT = {"rtol": 1e-8, "atol": 1e-10}
_STRUCTURE_DEFAULT = {"n_floors": 6, "mass": 50.0, "stiffness": 1.89e7,
                      "damper": 10.0}

DEFAULTS = {
    "band": {**_SENSOR_DEFAULT, "n_q": 201},
    "transmit": {**_SENSOR_DEFAULT, "grid": _GRID_DEFAULT, "probe": None},
    "dataset": {**_SENSOR_DEFAULT, "grid": _GRID_DEFAULT, "n_samples": 300,
                "seed": 0, "fixed": {}},
    "train": {"dataset": "dataset.csv", "seed": 0, "epochs": 5000,
              "batch_size": 32, "learning_rate": 1e-3, "l2_lambda": 1e-3,
              "noise_std": 0.01, "plateau_factor": 0.5,
              "plateau_patience": 50, "val_fraction": 0.2, "width": 64,
              "n_blocks": 2},
    "inverse": {**_SENSOR_DEFAULT, "grid": _GRID_DEFAULT,
                "model": "model.json", "target_bdp": 23.3, "trials": 5,
                "iterations": 2000, "learning_rate": 1e-3,
                "fixed": {"r": 5.0, "e": 2.0, "mu": 1.5}, "threshold": 1e-3,
                "seed": 0, "verify": True},
    "simulate": {**_SENSOR_DEFAULT, "mode": "coupled",
                 "structure": _STRUCTURE_DEFAULT, "model_file": None,
                 "damage": 0.0, "abrupt": None, "noise_std": 1000.0,
                 "rate": 1000.0, "duration": 20.0, "seed": 0, "window": 0.1,
                 "piezo_coupling": 60.0, "integrator": _INTEGRATOR_DEFAULT},
    "classify": {**_SENSOR_DEFAULT, "source": "case", "case": 1,
                 "healthy": None, "damaged": None,
                 "measure": "steady-amplitude", "window": None,
                 "duration": 10.0, "sample_rate": 2000.0,
                 "integrator": _INTEGRATOR_DEFAULT},
    "sweep": {**_SENSOR_DEFAULT, "kind": "sensitivity",
              "structure": _STRUCTURE_DEFAULT,
              "damage_levels": [0.0, 0.02, 0.04, 0.06, 0.08, 0.10],
              "seed": 0, "duration": 20.0, "noise_std": 1000.0,
              "rate": 1000.0, "integrator": _INTEGRATOR_DEFAULT,
              "grid": _GRID_DEFAULT,
              "r_values": [1.0, 2.0, 3.0, 4.0, 5.0],
              "h_values": [5.0, 8.75, 12.5, 16.25, 20.0]},
}


# mappings replaced wholesale instead of merged key by key
_REPLACE = {"fixed"}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if (isinstance(v, dict) and isinstance(out.get(k), dict)
                and k not in _REPLACE):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_file(path, command):
    """Read a YAML config or a run manifest for ``command``."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    if "config" in data and "command" in data:
        if data["command"] != command:
            raise ConfigError(f"manifest is for '{data['command']}', "
                              f"not '{command}'")
        data = data["config"]
    return data


def parse_override(item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value in {item!r}") from exc
    out = cur = {}
    parts = key.strip().split(".")
    for p in parts[:-1]:
        cur[p] = {}
        cur = cur[p]
    cur[parts[-1]] = value
    return out


def _coerce(cfg):
    """YAML 1.1 reads "1e-3" as a string; turn numeric strings into numbers."""
    if isinstance(cfg, dict):
        return {k: _coerce(v) for k, v in cfg.items()}
    if isinstance(cfg, list):
        return [_coerce(v) for v in cfg]
    if isinstance(cfg, str):
        text = cfg.strip()
        if text.lstrip("+-").isdigit():
            return int(text)
        try:
            return float(text)
        except ValueError:
            return cfg
    return cfg


def resolve(command, path=None, overrides=()):
    cfg = DEFAULTS[command]
    if path is not None:
        cfg = _merge(cfg, _coerce(load_file(path, command)))
    for item in overrides:
        cfg = _merge(cfg, _coerce(parse_override(item)))
    try:
        jsonschema.validate(cfg, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        loc = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {loc}: {exc.message}") from exc
    # round-trip through JSON so the manifest and the run see the same values
    return json.loads(json.dumps(cfg))


def schema_document():
    return {"defaults": DEFAULTS, "schemas": SCHEMAS}
