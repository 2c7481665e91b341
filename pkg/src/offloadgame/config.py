"""JSON experiment configs: schema validation and conversion to scenarios."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import jsonschema

from .model import FlowSpec, Linear, Logarithmic, PowerLaw, ScenarioSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

UTILITY_SCHEMA = {
    "type": "object",
    "properties": {
        "family": {"enum": ["linear", "power", "log"]},
        "weight": _POS,
        "exponent": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
    "required": ["family", "weight"],
    "additionalProperties": False,
}

FLOW_SCHEMA = {
    "type": "object",
    "properties": {
        "utility": UTILITY_SCHEMA,
        "costs": {"type": "array", "items": _POS, "minItems": 2},
        "cost": _POS,
        "cost_step": _NONNEG,
    },
    "required": ["utility"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "num_aps": {"type": "integer", "minimum": 2},
        "capacity": {"oneOf": [_NONNEG, {"const": "unbounded"}]},
        "flows": {"type": "array", "items": FLOW_SCHEMA, "minItems": 1},
    },
    "required": ["num_aps", "capacity", "flows"],
    "additionalProperties": False,
}

PRICES = {"type": "array", "items": _NONNEG, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "scenario": SCENARIO_SCHEMA,
        "dynamics": {
            "type": "object",
            "properties": {
                "initial_prices": {"oneOf": [PRICES, {"enum": ["lower", "upper"]}]},
                "starts": {"type": "array", "items": {"oneOf": [PRICES, {"enum": ["lower", "upper"]}]}, "minItems": 1},
                "schedule": {"enum": ["roundrobin", "jacobi"]},
                "rule": {"enum": ["best_response", "closed_form"]},
                "tol": _POS,
                "max_iters": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "certify": {
            "type": "object",
            "properties": {
                "follower_grid": {"type": "integer", "minimum": 100},
                "leader_grid": {"type": "integer", "minimum": 100},
                "radius": {"type": "number", "exclusiveMinimum": 1},
                "tol": _POS,
            },
            "additionalProperties": False,
        },
        "sweep": {
            "type": "object",
            "properties": {
                "axis": {"enum": ["cost", "weight", "exponent", "num_aps", "num_flows", "capacity"]},
                "values": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "flow": {"type": "integer", "minimum": 1},
                "ap": {"type": "integer", "minimum": 1},
            },
            "required": ["axis", "values"],
            "additionalProperties": False,
        },
    },
    "required": ["schema_version", "scenario"],
    "additionalProperties": False,
}


def _field(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def validate(cfg: Any) -> None:
    """Schema check plus the cross-field rules JSON Schema cannot express."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda err: list(err.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _field(err.absolute_path))
    sc = cfg["scenario"]
    R = sc["num_aps"]
    for f, flow in enumerate(sc["flows"]):
        where = f"scenario.flows.{f}"
        if ("costs" in flow) == ("cost" in flow):
            raise ConfigError("exactly one of 'costs' or 'cost' is required", where)
        if "costs" in flow and "cost_step" in flow:
            raise ConfigError("'cost_step' only applies with a scalar 'cost'", where)
        if "costs" in flow and len(flow["costs"]) != R:
            raise ConfigError(f"expected {R} costs, got {len(flow['costs'])}", where + ".costs")
        u = flow["utility"]
        if (u["family"] == "power") != ("exponent" in u):
            raise ConfigError("'exponent' is required for, and only for, the power family", where + ".utility")
    F = len(sc["flows"])
    dyn = cfg.get("dynamics", {})
    for key, vecs in (("initial_prices", [dyn.get("initial_prices")]), ("starts", dyn.get("starts", []))):
        for v in vecs:
            if isinstance(v, list) and len(v) != F:
                raise ConfigError(f"price vector needs {F} entries, got {len(v)}", f"dynamics.{key}")
    sw = cfg.get("sweep")
    if sw:
        axis = sw["axis"]
        if axis in ("cost", "weight", "exponent"):
            if "flow" not in sw:
                raise ConfigError(f"axis '{axis}' needs a 'flow' index", "sweep.flow")
            if sw["flow"] > F:
                raise ConfigError(f"flow index {sw['flow']} exceeds {F} flows", "sweep.flow")
        if "ap" in sw and (axis != "cost" or sw["ap"] > R):
            raise ConfigError("'ap' is only valid for axis 'cost' and must be <= num_aps", "sweep.ap")
        if axis == "num_aps":
            if any(v != int(v) or v < 2 for v in sw["values"]):
                raise ConfigError("num_aps values must be integers >= 2", "sweep.values")
            if any("costs" in fl for fl in sc["flows"]):
                raise ConfigError("num_aps sweeps need scalar 'cost' per flow", "scenario.flows")
        if axis == "num_flows" and any(v != int(v) or not 1 <= v <= F for v in sw["values"]):
            raise ConfigError(f"num_flows values must be integers in 1..{F}", "sweep.values")
        if axis in ("cost", "weight", "capacity") and any(not v > 0 for v in sw["values"]):
            raise ConfigError("values must be positive", "sweep.values")
        if axis == "exponent" and any(not 0 < v < 1 for v in sw["values"]):
            raise ConfigError("exponents must lie in (0, 1)", "sweep.values")


def load(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    validate(cfg)
    return cfg


def utility_from_dict(d: dict):
    family = d["family"]
    if family == "linear":
        return Linear(d["weight"])
    if family == "power":
        return PowerLaw(d["weight"], d["exponent"])
    if family == "log":
        return Logarithmic(d["weight"])
    raise ConfigError(f"unknown utility family {family!r}")


def utility_to_dict(u) -> dict:
    if isinstance(u, Linear):
        return {"family": "linear", "weight": u.weight}
    if isinstance(u, PowerLaw):
        return {"family": "power", "weight": u.weight, "exponent": u.exponent}
    return {"family": "log", "weight": u.weight}


def scenario_from_dict(sc: dict) -> ScenarioSpec:
    R = sc["num_aps"]
    flows = []
    for flow in sc["flows"]:
        if "costs" in flow:
            costs = flow["costs"]
        else:
            step = flow.get("cost_step", 0.0)
            costs = [flow["cost"] + step * j for j in range(R)]
        flows.append(FlowSpec(utility_from_dict(flow["utility"]), tuple(costs)))
    cap = sc["capacity"]
    return ScenarioSpec(R, tuple(flows), None if cap == "unbounded" else float(cap))


def scenario_to_dict(s: ScenarioSpec) -> dict:
    return {
        "num_aps": s.num_aps,
        "capacity": "unbounded" if s.capacity is None else s.capacity,
        "flows": [{"utility": utility_to_dict(fl.utility), "costs": list(fl.costs)} for fl in s.flows],
    }


def apply_sweep_value(sc: dict, sweep: dict, value: float) -> dict:
    """Scenario dict with the sweep axis set to ``value``."""
    sc = json.loads(json.dumps(sc))
    axis = sweep["axis"]
    if axis == "num_aps":
        sc["num_aps"] = int(value)
    elif axis == "num_flows":
        sc["flows"] = sc["flows"][: int(value)]
    elif axis == "capacity":
        sc["capacity"] = value
    else:
        flow = sc["flows"][sweep["flow"] - 1]
        if axis == "weight":
            flow["utility"]["weight"] = value
        elif axis == "exponent":
            flow["utility"]["exponent"] = value
        elif "ap" in sweep:
            if "costs" not in flow:
                step = flow.pop("cost_step", 0.0)
                flow["costs"] = [flow.pop("cost") + step * j for j in range(sc["num_aps"])]
            flow["costs"][sweep["ap"] - 1] = value
        else:
            flow.pop("costs", None)
            flow.pop("cost_step", None)
            flow["cost"] = value
    return sc
