"""Scenario files: JSON documents describing one network and optional sweeps."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

from .core import DerivedConstants, NetworkParams, derive_constants, parse_strategy
from .errors import InvalidParameterError
from .game import CostPolicy, MixedStrategy

_num = {"type": "number"}
_sweep = {
    "type": "object",
    "properties": {"start": _num, "stop": _num, "step": {"type": "number", "exclusiveMinimum": 0}},
    "required": ["start", "stop", "step"],
    "additionalProperties": False,
}
_pmf = {
    "type": "object",
    "properties": {k: {"type": "number", "minimum": 0, "maximum": 1}
                   for k in ("pi_w", "pi_tA", "pi_tB", "pi_tfd")},
    "required": ["pi_w", "pi_tA", "pi_tB", "pi_tfd"],
    "additionalProperties": False,
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "network": {
            "type": "object",
            "properties": {k: _num for k in
                           ("alpha", "theta", "kappa", "snr_ref", "beta", "eta", "power", "noise", "r")},
            "required": ["alpha", "theta", "kappa"],
            "additionalProperties": False,
        },
        "constants": {
            "type": "object",
            "properties": {k: _num for k in ("beta", "phi", "iota_c", "iota_f")},
            "required": ["beta", "iota_c", "iota_f"],
            "additionalProperties": False,
        },
        "costs": {
            "type": "object",
            "properties": {"c_hd": {"type": "number", "minimum": 0},
                           "c_fd": {"type": "number", "minimum": 0}},
            "required": ["c_hd"],
            "additionalProperties": False,
        },
        "sweeps": {
            "type": "object",
            "properties": {
                "c_hd": _sweep,
                "pi_tfd": _sweep,
                "iota_grid": {
                    "type": "object",
                    "properties": {"n": {"type": "integer", "minimum": 2}},
                    "required": ["n"],
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "simulation": {
            "type": "object",
            "properties": {
                "profile": {"type": "array", "items": {"type": "string"},
                            "minItems": 2, "maxItems": 2},
                "pi1": _pmf,
                "pi2": _pmf,
                "n_slots": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
            },
            "additionalProperties": False,
        },
    },
    "oneOf": [{"required": ["network"], "not": {"required": ["constants"]}},
              {"required": ["constants"], "not": {"required": ["network"]}}],
    "additionalProperties": False,
}


class ScenarioError(InvalidParameterError):
    """Malformed or inconsistent scenario file."""


@dataclass(frozen=True)
class Sweep:
    start: float
    stop: float
    step: float

    def values(self) -> list[float]:
        """Inclusive grid ``start, start + step, ...`` up to ``stop`` (rounding-safe)."""
        if self.stop < self.start:
            raise ScenarioError(f"sweep stop {self.stop} is below start {self.start}")
        n = int((self.stop - self.start) / self.step + 1e-9)
        vals = [self.start + i * self.step for i in range(n + 1)]
        return [round(v, 12) for v in vals]


@dataclass(frozen=True)
class Scenario:
    name: str
    model: NetworkParams | DerivedConstants
    costs: CostPolicy | None = None
    sweeps: dict[str, Any] = field(default_factory=dict)
    simulation: dict[str, Any] = field(default_factory=dict)

    @property
    def constants(self) -> DerivedConstants:
        if isinstance(self.model, NetworkParams):
            return derive_constants(self.model)
        return self.model

    @property
    def is_physical(self) -> bool:
        return isinstance(self.model, NetworkParams)

    def sweep(self, key: str) -> Sweep | None:
        s = self.sweeps.get(key)
        return None if s is None else Sweep(s["start"], s["stop"], s["step"])


def _field_error(where: str, exc: Exception) -> ScenarioError:
    return ScenarioError(f"{where}: {exc}")


def scenario_from_dict(data: dict[str, Any], source: str = "<scenario>") -> Scenario:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for e in errors:
            where = ".".join(str(p) for p in e.absolute_path) or "<root>"
            msg = e.message
            if e.validator == "oneOf":
                msg = "exactly one of 'network' or 'constants' must be present"
            lines.append(f"{source}: field '{where}': {msg}")
        raise ScenarioError("\n".join(lines))

    try:
        if "network" in data:
            model = NetworkParams.from_dict(data["network"])
            derive_constants(model)
        else:
            model = DerivedConstants.from_dict(data["constants"])
    except InvalidParameterError as exc:
        raise _field_error(f"{source}: field '{'network' if 'network' in data else 'constants'}'", exc)

    costs = None
    if "costs" in data:
        c_hd = data["costs"]["c_hd"]
        beta = model.resolved_beta if isinstance(model, NetworkParams) else model.beta
        costs = CostPolicy(c_hd, data["costs"].get("c_fd", 2.0 * beta * c_hd))

    sim = dict(data.get("simulation", {}))
    try:
        if "profile" in sim:
            sim["profile"] = tuple(parse_strategy(s) for s in sim["profile"])
        for key in ("pi1", "pi2"):
            if key in sim:
                sim[key] = MixedStrategy.from_mapping(sim[key])
    except InvalidParameterError as exc:
        raise _field_error(f"{source}: field 'simulation'", exc)
    if "profile" in sim and ("pi1" in sim or "pi2" in sim):
        raise ScenarioError(f"{source}: field 'simulation': give either profile or pi1/pi2")

    return Scenario(data.get("name", Path(source).stem), model, costs,
                    dict(data.get("sweeps", {})), sim)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: top level must be a JSON object")
    return scenario_from_dict(data, str(path))
