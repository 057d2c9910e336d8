"""Run configuration: a versioned YAML (or JSON) document, validated fail-closed.

Unknown keys anywhere in the document are rejected, and every descriptor is
passed through its constructor before anything is computed, so a bad config
never produces partial output.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .functionals import ConvexFunctional, functional_from_descriptor
from .reports import DomainError
from .spaces import GeodesicSpace, space_from_descriptor
from .weak import ConvexSetDescriptor

SCHEMA_VERSION = 1

TOP_KEYS = {"schema_version", "name", "seed", "space", "functional", "initial",
            "initial_pair", "flow", "checks", "output_dir"}
FLOW_KEYS = {"T", "n_per_unit", "tau", "samples", "method"}
FLOW_DEFAULTS = {"T": 1.0, "n_per_unit": 256, "samples": None, "method": "auto"}

# option name -> default; ``None`` marks an optional value without default
CHECK_OPTIONS: dict[str, dict] = {
    "npc_certify": {"trials": 1000, "tolerance": None},
    "convexity": {"trials": 1000},
    "chen": {"trials": 500},
    "slope_estimate": {"trials": 50, "rtol": 0.01},
    "resolvent_optimality": {"probes": 1000, "tau": 1.0},
    "resolvent_contraction": {"trials": 200, "tau": 0.5},
    "slope_monotone": {"trials": 200, "tau": 1.0},
    "closed_form_point": {"t": 1.0, "n": 64, "expected": None, "tol": 1e-12},
    "consistency": {"n_list": [16, 32, 64], "samples": 17, "order_min": 0.9,
                    "order_max": 1.1, "final_rel_tol": None, "expected_errors": None,
                    "expected_rtol": 0.05},
    "evi": {"triples": 100},
    "contraction": {"pairs": 50, "analytic_tol": 1e-9},
    "speed_slope": {"rtol": 0.05, "min_slope": 0.1},
    "dissipation": {"rtol": 0.02, "expected_drop": None, "drop_rtol": 0.01},
    "half_order": {"samples": 65},
    "invariants": {},
    "refinement": {"t": 1.0, "n_list": [16, 32, 64, 128, 256]},
    "infimum": {"T_max": 50.0, "n_per_unit": 64, "eps_energy": 1e-4, "eps_slope": 1e-2,
                "slope_rtol": 0.01},
    "stationarity": {"t_values": [0.5, 2.0, 10.0], "n_values": [1, 4, 16, 64]},
    "unbounded_descent": {"T": 20.0, "n_per_unit": 64, "below": -10.0},
    "projection_obtuseness": {"set": None, "trials": 500},
    "projection_lipschitz": {"set": None, "trials": 500},
    "convex_membership": {"set": None, "trials": 500},
    "center_agreement": {"sequences": 10, "length": 40, "tol": 1e-6},
    "weak_true_negative": {"length": 100},
    "weak_lsc": {"sequences": 10, "length": 60},
    "weak_limits_in_convex": {"set": None, "sequences": 10, "length": 60},
    "bacak": {"T_max": 50.0, "n_per_unit": 64, "value_tol": 1e-6, "center_tol": 1e-3},
}

REQUIRED_OPTIONS = {"closed_form_point": ("expected",), "projection_obtuseness": ("set",),
                    "projection_lipschitz": ("set",), "convex_membership": ("set",),
                    "weak_limits_in_convex": ("set",)}

NEEDS_FUNCTIONAL = set(CHECK_OPTIONS) - {
    "npc_certify", "projection_obtuseness", "projection_lipschitz", "convex_membership",
    "center_agreement", "weak_true_negative", "weak_limits_in_convex"}
NEEDS_INITIAL = {"closed_form_point", "consistency", "evi", "contraction", "speed_slope",
                 "dissipation", "half_order", "invariants", "refinement", "infimum",
                 "bacak", "unbounded_descent"}


class ConfigError(DomainError):
    """Invalid configuration; ``errors`` lists ``{"path", "message"}`` entries."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{e['path']}: {e['message']}" for e in self.errors))

    def to_dict(self):
        return {"error": "config", "errors": self.errors}


@dataclass
class CheckSpec:
    name: str
    options: dict


@dataclass
class RunConfig:
    name: str
    seed: int
    space: GeodesicSpace
    functional: ConvexFunctional | None
    initial: object
    initial_pair: object
    flow: dict
    checks: list[CheckSpec]
    output_dir: str | None
    raw: dict = field(default_factory=dict)

    @property
    def tau(self) -> float:
        return 1.0 / self.flow["n_per_unit"]


def _number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _validate_flow(flow, errors):
    out = dict(FLOW_DEFAULTS)
    if not isinstance(flow, dict):
        errors.append({"path": "flow", "message": "must be a mapping"})
        return out
    for k in sorted(set(flow) - FLOW_KEYS):
        errors.append({"path": f"flow.{k}", "message": "unknown key"})
    if "T" in flow:
        if not _number(flow["T"]) or flow["T"] <= 0:
            errors.append({"path": "flow.T", "message": "must be a positive number"})
        else:
            out["T"] = float(flow["T"])
    if "tau" in flow and "n_per_unit" in flow:
        errors.append({"path": "flow", "message": "give either tau or n_per_unit, not both"})
    if "tau" in flow:
        tau = flow["tau"]
        if not _number(tau) or tau <= 0:
            errors.append({"path": "flow.tau", "message": f"tau must be > 0, got {tau!r}"})
        else:
            n = round(1.0 / tau)
            if n < 1 or abs(n * tau - 1.0) > 1e-9:
                errors.append({"path": "flow.tau", "message": "1/tau must be an integer"})
            else:
                out["n_per_unit"] = int(n)
    if "n_per_unit" in flow:
        n = flow["n_per_unit"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            errors.append({"path": "flow.n_per_unit", "message": "must be an integer >= 1"})
        else:
            out["n_per_unit"] = n
    if flow.get("samples") is not None:
        s = flow["samples"]
        if not isinstance(s, int) or isinstance(s, bool) or s < 2:
            errors.append({"path": "flow.samples", "message": "must be an integer >= 2 or null"})
        else:
            out["samples"] = s
    if "method" in flow:
        if flow["method"] not in ("auto", "closed_form", "generic"):
            errors.append({"path": "flow.method",
                           "message": "must be one of auto, closed_form, generic"})
        else:
            out["method"] = flow["method"]
    return out


def _validate_checks(checks, space, errors):
    out = []
    if not isinstance(checks, list):
        errors.append({"path": "checks", "message": "must be a list"})
        return out
    for i, item in enumerate(checks):
        path = f"checks[{i}]"
        if isinstance(item, str):
            item = {"name": item}
        if not isinstance(item, dict) or "name" not in item:
            errors.append({"path": path, "message": "expected a check name or a mapping with 'name'"})
            continue
        name = item["name"]
        if name not in CHECK_OPTIONS:
            errors.append({"path": f"{path}.name",
                           "message": f"unknown check {name!r}; available: {sorted(CHECK_OPTIONS)}"})
            continue
        defaults = CHECK_OPTIONS[name]
        opts = dict(defaults)
        for k, v in item.items():
            if k == "name":
                continue
            if k not in defaults:
                errors.append({"path": f"{path}.{k}", "message": f"unknown option for {name}"})
                continue
            opts[k] = v
        for k in REQUIRED_OPTIONS.get(name, ()):
            if opts.get(k) is None:
                errors.append({"path": f"{path}.{k}", "message": "required"})
        for k in ("trials", "probes", "pairs", "triples", "sequences", "length", "n", "samples"):
            if k in opts and opts[k] is not None and (
                    not isinstance(opts[k], int) or isinstance(opts[k], bool) or opts[k] < 1):
                errors.append({"path": f"{path}.{k}", "message": "must be an integer >= 1"})
        for k in ("tau", "T", "T_max", "t"):
            if k in opts and opts[k] is not None and (not _number(opts[k]) or opts[k] < 0
                                                      or (k == "tau" and opts[k] == 0)):
                errors.append({"path": f"{path}.{k}", "message": "must be a positive number"})
        if opts.get("set") is not None:
            try:
                opts["set"] = ConvexSetDescriptor.from_dict(opts["set"], space)
            except (DomainError, KeyError, TypeError, ValueError) as exc:
                errors.append({"path": f"{path}.set", "message": str(exc)})
        out.append(CheckSpec(name, opts))
    return out


def validate_config(doc: dict, default_name: str = "run") -> RunConfig:
    """Validate a parsed config document; raises :class:`ConfigError`."""
    errors = []
    if not isinstance(doc, dict):
        raise ConfigError([{"path": "", "message": "config must be a mapping"}])
    raw = copy.deepcopy(doc)
    for k in sorted(set(doc) - TOP_KEYS):
        errors.append({"path": k, "message": "unknown key"})
    if doc.get("schema_version") != SCHEMA_VERSION:
        errors.append({"path": "schema_version",
                       "message": f"must be {SCHEMA_VERSION}, got {doc.get('schema_version')!r}"})
    seed = doc.get("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors.append({"path": "seed", "message": "a non-negative integer seed is required"})
    name = doc.get("name", default_name)
    if not isinstance(name, str) or not name or "/" in name or name.startswith("."):
        errors.append({"path": "name", "message": "must be a plain non-empty name"})
    space = functional = initial = initial_pair = None
    if "space" not in doc:
        errors.append({"path": "space", "message": "required"})
    else:
        try:
            space = space_from_descriptor(doc["space"])
        except (DomainError, KeyError, TypeError, ValueError) as exc:
            errors.append({"path": "space", "message": str(exc)})
    if space is not None and doc.get("functional") is not None:
        try:
            functional = functional_from_descriptor(doc["functional"], space)
        except (DomainError, KeyError, TypeError, ValueError) as exc:
            errors.append({"path": "functional", "message": str(exc)})
    for key in ("initial", "initial_pair"):
        if space is not None and doc.get(key) is not None:
            try:
                val = space.from_coords(doc[key])
                if functional is not None:
                    functional.check_space(space)
                if key == "initial":
                    initial = val
                else:
                    initial_pair = val
            except (DomainError, KeyError, TypeError, ValueError) as exc:
                errors.append({"path": key, "message": str(exc)})
    flow = _validate_flow(doc.get("flow", {}), errors)
    checks = _validate_checks(doc.get("checks", []), space, errors) if space is not None else []
    for i, c in enumerate(checks):
        if c.name in NEEDS_FUNCTIONAL and functional is None and "functional" not in doc:
            errors.append({"path": f"checks[{i}]", "message": f"{c.name} needs a functional"})
        if c.name in NEEDS_INITIAL and initial is None and "initial" not in doc:
            errors.append({"path": f"checks[{i}]", "message": f"{c.name} needs an initial point"})
    out_dir = doc.get("output_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        errors.append({"path": "output_dir", "message": "must be a string"})
    if errors:
        raise ConfigError(errors)
    return RunConfig(name=name, seed=seed, space=space, functional=functional,
                     initial=initial, initial_pair=initial_pair, flow=flow, checks=checks,
                     output_dir=out_dir, raw=raw)


def load_config(path) -> RunConfig:
    """Read and validate a YAML/JSON config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([{"path": str(path), "message": f"cannot read config: {exc}"}])
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([{"path": str(path), "message": f"invalid YAML: {exc}"}])
    return validate_config(doc, default_name=path.stem)
