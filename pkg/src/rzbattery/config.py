"""Run configuration: defaults, JSON loading with diagnostics, overrides, validation.

Precedence, lowest to highest: built-in defaults for the command, the JSON
config file, ``--set path=value`` overrides, dedicated CLI flags
(``--backend``).  The resolved document is embedded in every output header
under the ``config`` key; pointing ``--config`` at such an output file reruns
it.  Worker count and output path are deliberately not part of it.
"""

from __future__ import annotations

import copy
import json
import math

COMMANDS = ("evolve", "compare", "sweep2d", "spectrum", "scaling")
BACKENDS = ("numeric", "analytic", "both")
CONFIG_SCHEMA = "rzbattery.config/1"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field or file position."""


_T_DEFAULT = 0.1 * math.pi

_MODEL = {"n_atoms": 10, "t_period": _T_DEFAULT, "v0": 20.0, "lambda": 2.0, "delta": 1.0, "tau": None}

DEFAULTS = {
    "evolve": {
        "model": dict(_MODEL),
        "backend": "both",
        "v0_values": [10.0, 20.0, 40.0, 60.0],
        "integrator": {"method": "exact", "tol": 1e-8, "steps": 4096, "store_every": 16},
    },
    "sweep2d": {
        "model": dict(_MODEL),
        "backend": "analytic",
        "grid": {
            "v0": {"min": 1.0, "max": 60.0, "steps": 50},
            "t_period": {"min": 0.01 * math.pi, "max": 0.3 * math.pi, "steps": 50},
        },
        "integrator": {"method": "split", "tol": 1e-6, "steps": 4096, "store_every": 1},
    },
    "spectrum": {
        "model": dict(_MODEL, n_atoms=100, **{"lambda": 0.0}),
        "backend": "numeric",
        "lambda_grid": {"min": 0.0, "max": 3.0, "steps": 61},
        "transverse": 0.0,
        "dynamic": False,
        "integrator": {"method": "split", "tol": 1e-8, "steps": 4096, "store_every": 1},
    },
    "scaling": {
        "model": dict(_MODEL),
        "backend": "numeric",
        "n_values": {"min": 1, "max": 100, "steps": 100},
        "lambdas": [-30.0, -15.0, 1.0, 15.0, 30.0],
        "integrator": {"method": "split", "tol": 1e-6, "steps": 4096, "store_every": 1},
    },
}
DEFAULTS["compare"] = copy.deepcopy(DEFAULTS["evolve"])


def defaults_for(command: str) -> dict:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    return copy.deepcopy(DEFAULTS[command])


def parse_json_text(text: str, source: str = "<config>") -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return doc


def load_config_file(path) -> dict:
    """Read a JSON config, or the ``config`` header of a previously written output table."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    if text.startswith("# "):
        for n, line in enumerate(text.splitlines(), 1):
            if not line.startswith("# "):
                break
            key, _, value = line[2:].partition(": ")
            if key == "config":
                doc = parse_json_text(value, f"{path} (header line {n})")
                doc.pop("schema", None)
                return doc
        raise ConfigError(f"{path}: output header has no config line")
    doc = parse_json_text(text, str(path))
    doc.pop("schema", None)
    return doc


def _merge(base: dict, update: dict, path: str = "") -> dict:
    for key, value in update.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown field '{where}'")
        if isinstance(base[key], dict) and isinstance(value, dict) and not _is_axis(base[key]):
            _merge(base[key], value, where)
        else:
            base[key] = value
    return base


def _is_axis(d: dict) -> bool:
    return set(d) == {"min", "max", "steps"}


def parse_override(item: str) -> tuple[list[str], object]:
    """``a.b=value``; the value is parsed as JSON and falls back to a bare string."""
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects path=value, got {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_override(doc: dict, path: list[str], value) -> None:
    node = doc
    for i, key in enumerate(path[:-1]):
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"unknown field '{'.'.join(path[:i + 1])}'")
        node = node[key]
    if not isinstance(node, dict) or path[-1] not in node:
        raise ConfigError(f"unknown field '{'.'.join(path)}'")
    node[path[-1]] = value


def resolve(command: str, file_doc: dict | None = None, overrides=(), backend: str | None = None) -> dict:
    """Combine the layers in precedence order and validate the result."""
    doc = defaults_for(command)
    if file_doc:
        file_doc = dict(file_doc)
        declared = file_doc.pop("command", command)
        if declared != command:
            raise ConfigError(f"config was written for '{declared}', not '{command}'")
        _merge(doc, file_doc)
    for item in overrides:
        apply_override(doc, *parse_override(item))
    if backend is not None:
        doc["backend"] = backend
    doc["command"] = command
    validate(doc)
    return doc


def _number(doc, path, *, positive=False, nonneg=False, integer=False, allow_none=False):
    node = doc
    for key in path:
        node = node[key]
    where = ".".join(str(k) for k in path)
    if node is None and allow_none:
        return
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(f"field '{where}' must be a number, got {node!r}")
    if not math.isfinite(node):
        raise ConfigError(f"field '{where}' must be finite")
    if integer and int(node) != node:
        raise ConfigError(f"field '{where}' must be an integer, got {node!r}")
    if positive and node <= 0:
        raise ConfigError(f"field '{where}' must be > 0, got {node!r}")
    if nonneg and node < 0:
        raise ConfigError(f"field '{where}' must be >= 0, got {node!r}")


def _axis(doc, path, *, integer=False, positive=False):
    node = doc
    for key in path:
        node = node[key]
    where = ".".join(str(k) for k in path)
    if isinstance(node, dict):
        if not _is_axis(node):
            raise ConfigError(f"field '{where}' must have exactly min, max, steps")
        for k in ("min", "max"):
            _number(doc, [*path, k], integer=integer, positive=positive)
        _number(doc, [*path, "steps"], integer=True, positive=True)
        if node["max"] < node["min"]:
            raise ConfigError(f"field '{where}': max < min")
    elif isinstance(node, list):
        if not node:
            raise ConfigError(f"field '{where}' is empty")
        for i in range(len(node)):
            _number(doc, [*path, i], integer=integer, positive=positive)
    else:
        raise ConfigError(f"field '{where}' must be a list or a {{min, max, steps}} object")


def validate(doc: dict) -> None:
    cmd = doc["command"]
    if doc["backend"] not in BACKENDS:
        raise ConfigError(f"field 'backend' must be one of {BACKENDS}, got {doc['backend']!r}")
    if cmd in ("sweep2d",) and doc["backend"] == "both":
        raise ConfigError("field 'backend': sweep2d needs numeric or analytic")
    if cmd in ("spectrum", "scaling") and doc["backend"] != "numeric":
        raise ConfigError(f"field 'backend': {cmd} is numeric only")
    _number(doc, ["model", "n_atoms"], integer=True, positive=True)
    _number(doc, ["model", "t_period"], positive=True)
    _number(doc, ["model", "v0"], nonneg=True)
    _number(doc, ["model", "lambda"])
    _number(doc, ["model", "delta"], positive=True)
    _number(doc, ["model", "tau"], positive=True, allow_none=True)
    integ = doc["integrator"]
    if integ["method"] not in ("exact", "split"):
        raise ConfigError(f"field 'integrator.method' must be exact or split, got {integ['method']!r}")
    _number(doc, ["integrator", "tol"], positive=True)
    _number(doc, ["integrator", "steps"], integer=True, positive=True)
    _number(doc, ["integrator", "store_every"], integer=True, positive=True)
    if cmd in ("evolve", "compare"):
        _axis(doc, ["v0_values"])
        if any(v < 0 for v in doc["v0_values"]):
            raise ConfigError("field 'v0_values' must be >= 0")
    elif cmd == "sweep2d":
        _axis(doc, ["grid", "v0"], positive=True)
        _axis(doc, ["grid", "t_period"], positive=True)
    elif cmd == "spectrum":
        _axis(doc, ["lambda_grid"])
        _number(doc, ["transverse"])
        if not isinstance(doc["dynamic"], bool):
            raise ConfigError("field 'dynamic' must be true or false")
        if doc["model"]["n_atoms"] < 2:
            raise ConfigError("field 'model.n_atoms' must be >= 2 for spectrum")
    elif cmd == "scaling":
        _axis(doc, ["n_values"], integer=True, positive=True)
        _axis(doc, ["lambdas"])
