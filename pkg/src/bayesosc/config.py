"""
Experiment configuration files.

A config is a JSON object with a mandatory integer ``seed``, an optional
``output_path`` and exactly one command block (``search``, ``tsp``,
``qsim`` or ``noise``)::

    {
      "seed": 1,
      "output_path": "runs/search",
      "search": {"n_cells": 3, "p_detect": 0.9, "p_false": 0.1}
    }

:func:`parse_config` validates everything up front and reports every
problem it finds, each prefixed by its dotted field path. Optional fields
are filled with their defaults, so :func:`canonical_text` of a parsed config
is a fixed point of parsing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

COMMANDS = ("search", "tsp", "qsim", "noise")


class ConfigValidationError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    command: str
    params: dict
    seed: int
    output_path: str = "."

    def to_dict(self) -> dict:
        return {"seed": self.seed, "output_path": self.output_path, self.command: self.params}


REQUIRED = object()


def _num(lo=-math.inf, hi=math.inf, lo_open=False, hi_open=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            return "must be a finite number"
        if v < lo or v > hi or (lo_open and v == lo) or (hi_open and v == hi):
            left = "(" if lo_open else "["
            right = ")" if hi_open else "]"
            return f"{v!r} outside {left}{lo:g}, {hi:g}{right}"
        return None

    return check


def _int(lo=-math.inf, hi=math.inf):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            return "must be an integer"
        if v < lo or v > hi:
            return f"{v!r} outside [{lo:g}, {hi:g}]"
        return None

    return check


def _choice(*options):
    def check(v):
        return None if v in options else f"{v!r} not one of {list(options)}"

    return check


def _optional(check):
    return lambda v: None if v is None else check(v)


def _str(v):
    return None if isinstance(v, str) else "must be a string"


def _list_of(check, min_len=0):
    def run(v):
        if not isinstance(v, list):
            return "must be a list"
        if len(v) < min_len:
            return f"needs at least {min_len} entries"
        for i, item in enumerate(v):
            msg = check(item)
            if msg:
                return f"entry {i}: {msg}"
        return None

    return run


def _prob_vector(v):
    if not isinstance(v, list) or not v:
        return "must be a non-empty list of probabilities"
    for x in v:
        if _num(0, 1)(x):
            return "entries must lie in [0, 1]"
    if abs(sum(v) - 1) > 1e-9:
        return f"entries sum to {sum(v)!r}, not 1"
    return None


# field -> (check, default); nested blocks are schemas themselves
SCHEMAS: dict[str, dict[str, Any]] = {
    "search": {
        "n_cells": (_int(1, 10**6), REQUIRED),
        "p_detect": (_num(0, 1), REQUIRED),
        "p_false": (_num(0, 1), REQUIRED),
        "true_cell": (_int(0), 0),
        "policy": (_choice("greedy", "brute_force"), "greedy"),
        "horizon": (_int(1, 10), 2),
        "max_steps": (_int(0), 100),
        "stop_threshold": (_num(0, 1, lo_open=True), 0.99),
        "prior": (_optional(_prob_vector), None),
    },
    "tsp": {
        "instance": (_optional(_str), None),
        "n_cities": (_optional(_int(3)), None),
        "alpha": (_num(0, lo_open=True), 0.2),
        "beta": (_num(0, lo_open=True), 1.0),
        "node_ratio": (_num(1), 2.5),
        "k_start": (_num(0, lo_open=True), 0.2),
        "k_decay": (_num(0, 1, lo_open=True, hi_open=True), 0.99),
        "k_min": (_num(0, lo_open=True), 0.01),
        "iters_per_stage": (_int(1), 3),
        "step_size": (_num(0, lo_open=True), 1.0),
    },
    "qsim": {
        "d": (_int(2), REQUIRED),
        "omega_r": (_num(), REQUIRED),
        "qubits": (
            _list_of(
                lambda q: None
                if isinstance(q, dict)
                and set(q) == {"delta", "g"}
                and not _num()(q["delta"])
                and not _num(0)(q["g"])
                else "must be {\"delta\": number, \"g\": number >= 0}"
            ),
            REQUIRED,
        ),
        "hbar": (_num(0, lo_open=True), 1.0),
        "rates": (_list_of(_num(0), min_len=1), REQUIRED),
        "targets": (_list_of(_int(0)), [0]),
        "dt": (_num(0, lo_open=True), REQUIRED),
        "t_max": (_num(0, lo_open=True), REQUIRED),
        "record_stride": (_int(1), 1),
        "mode": (_choice("mean", "trajectory"), "mean"),
        "n_trajectories": (_int(1), 1),
        "cavity_level": (_int(0), 1),
        "qubit_levels": (_optional(_list_of(_choice(0, 1))), None),
        "max_top_population": (_optional(_num(0, 1)), 1e-3),
    },
    "noise": {
        "kind": (_choice("white", "ornstein_uhlenbeck", "squared_exponential"), REQUIRED),
        "variance": (_num(0, lo_open=True), REQUIRED),
        "correlation_time": (_num(0, lo_open=True), 1.0),
        "mean": (_num(), 0.0),
        "t0": (_num(), 0.0),
        "dt": (_num(0, lo_open=True), REQUIRED),
        "n": (_int(1, 4096), REQUIRED),
        "count": (_int(2), 1000),
        "oscillator": (_optional(lambda v: None), None),
    },
}

OSCILLATOR_SCHEMA = {
    "omega0": (_num(0, lo_open=True), REQUIRED),
    "mass": (_num(0, lo_open=True), 1.0),
}


def _validate_block(block, schema, path, errors):
    if not isinstance(block, dict):
        errors.append(f"{path}: must be an object")
        return None
    out = {}
    for key in block:
        if key not in schema:
            errors.append(f"{path}.{key}: unknown key (allowed: {', '.join(sorted(schema))})")
    for key, (check, default) in schema.items():
        if key not in block:
            if default is REQUIRED:
                errors.append(f"{path}.{key}: missing required key")
            else:
                out[key] = default
            continue
        msg = check(block[key])
        if msg:
            errors.append(f"{path}.{key}: {msg}")
        out[key] = block[key]
    return out


def _cross_checks(command, p, errors):
    if command == "search" and isinstance(p.get("true_cell"), int) and isinstance(p.get("n_cells"), int):
        if p["true_cell"] >= p["n_cells"]:
            errors.append(f"search.true_cell: {p['true_cell']} outside [0, {p['n_cells']})")
        if isinstance(p.get("prior"), list) and len(p["prior"]) != p["n_cells"]:
            errors.append("search.prior: length must equal n_cells")
    if command == "tsp":
        if (p.get("instance") is None) == (p.get("n_cities") is None):
            errors.append("tsp: give exactly one of 'instance' (TSPLIB path) or 'n_cities' (random instance)")
        if isinstance(p.get("k_min"), (int, float)) and isinstance(p.get("k_start"), (int, float)):
            if p["k_min"] >= p["k_start"]:
                errors.append("tsp.k_min: must be below k_start")
    if command == "qsim":
        qubits = p.get("qubits") if isinstance(p.get("qubits"), list) else []
        for t in p.get("targets") or []:
            if isinstance(t, int) and t >= len(qubits):
                errors.append(f"qsim.targets: qubit {t} does not exist")
        levels = p.get("qubit_levels")
        if isinstance(levels, list) and len(levels) != len(qubits):
            errors.append("qsim.qubit_levels: length must equal number of qubits")
        if isinstance(p.get("cavity_level"), int) and isinstance(p.get("d"), int) and p["cavity_level"] >= p["d"]:
            errors.append(f"qsim.cavity_level: {p['cavity_level']} outside [0, {p['d']})")
        if isinstance(p.get("dt"), (int, float)) and isinstance(p.get("t_max"), (int, float)) and p["dt"] > p["t_max"]:
            errors.append("qsim.dt: must not exceed t_max")
        for r in p.get("rates") or []:
            if isinstance(r, (int, float)) and isinstance(p.get("dt"), (int, float)) and r * p["dt"] > 1:
                errors.append(f"qsim.rates: rate*dt = {r * p['dt']:g} exceeds 1")
    if command == "noise" and p.get("oscillator") is not None:
        osc = _validate_block(p["oscillator"], OSCILLATOR_SCHEMA, "noise.oscillator", errors)
        if osc is not None:
            p["oscillator"] = osc


def parse_config_dict(raw) -> ExperimentConfig:
    errors = []
    if not isinstance(raw, dict):
        raise ConfigValidationError(["<root>: config must be a JSON object"])
    blocks = [k for k in raw if k in COMMANDS]
    for key in raw:
        if key not in COMMANDS and key not in ("seed", "output_path"):
            errors.append(f"{key}: unknown key (allowed: seed, output_path, {', '.join(COMMANDS)})")
    if "seed" not in raw:
        errors.append("seed: missing required key")
    elif _int(0, 2**63 - 1)(raw["seed"]):
        errors.append(f"seed: {_int(0, 2**63 - 1)(raw['seed'])}")
    output_path = raw.get("output_path", ".")
    if _str(output_path):
        errors.append("output_path: must be a string")
    if len(blocks) != 1:
        errors.append(
            f"<root>: exactly one command block required, found {len(blocks)} ({', '.join(blocks) or 'none'})"
        )
        raise ConfigValidationError(errors)
    command = blocks[0]
    params = _validate_block(raw[command], SCHEMAS[command], command, errors)
    if params is not None:
        _cross_checks(command, params, errors)
    if errors:
        raise ConfigValidationError(errors)
    return ExperimentConfig(command, params, raw["seed"], output_path)


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([f"line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    return parse_config_dict(raw)


def canonical_text(config: ExperimentConfig) -> str:
    return json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
