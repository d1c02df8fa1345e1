"""Instance files: strict JSON schemas and the loaders behind the CLI.

Three kinds are supported: "tower" (a module with C-bar generators and
an optional finite length), "elementary" (a summand list), and
"descent" (the full ambient-group data with inertia sections). Files
are schema-validated before any computation; unknown fields are
rejected.
"""

import json

import jsonschema

from .descent import (
    DescentInstance,
    Section,
    build_group,
    delta_preset,
)
from .errors import SchemaError
from .hmodule import make_module, span
from .iwasawa import DistinguishedPoly, LambdaElement
from .padic import RingParams
from .tower import (
    DistinguishedSummand,
    ElementaryModule,
    PPowerSummand,
    TowerInstance,
)

_INT = {"type": "integer"}
_VEC = {"type": "array", "items": _INT}
_MAT = {"type": "array", "items": _VEC}

TOWER_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "tower"},
        "p": {"type": "integer", "minimum": 2},
        "exponents": {"type": "array",
                      "items": {"type": "integer", "minimum": 1}},
        "sigma": _MAT,
        "c_bar_generators": _MAT,
        "d": {"type": ["integer", "null"], "minimum": 1},
    },
    "required": ["kind", "p", "exponents", "sigma", "c_bar_generators"],
    "additionalProperties": False,
}

ELEMENTARY_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "elementary"},
        "p": {"type": "integer", "minimum": 2},
        "precision": {"type": "integer", "minimum": 1},
        "summands": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {
                        "type": "object",
                        "properties": {
                            "type": {"const": "p-power"},
                            "mu": {"type": "integer", "minimum": 1},
                        },
                        "required": ["type", "mu"],
                        "additionalProperties": False,
                    },
                    {
                        "type": "object",
                        "properties": {
                            "type": {"const": "distinguished"},
                            "coeffs": _VEC,
                            "power": {"type": "integer", "minimum": 1},
                        },
                        "required": ["type", "coeffs"],
                        "additionalProperties": False,
                    },
                ]
            },
        },
    },
    "required": ["kind", "p", "precision", "summands"],
    "additionalProperties": False,
}

DESCENT_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"const": "descent"},
        "p": {"type": "integer", "minimum": 2},
        "d": {"type": "integer", "minimum": 1},
        "delta": {
            "oneOf": [
                {"enum": ["trivial", "z2", "z3", "s3"]},
                {
                    "type": "object",
                    "properties": {"table": _MAT},
                    "required": ["table"],
                    "additionalProperties": False,
                },
            ]
        },
        "exponents": {"type": "array",
                      "items": {"type": "integer", "minimum": 1}},
        "sigma": _MAT,
        "h_exponents": _VEC,
        "x_actions": {"type": "array", "items": _MAT},
        "sections": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "delta_indices": _VEC,
                    "a": _VEC,
                    "b": {
                        "type": "array",
                        "items": {"type": "array",
                                  "minItems": 2, "maxItems": 2},
                    },
                },
                "required": ["delta_indices", "a", "b"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["kind", "p", "d", "delta", "exponents", "sigma",
                 "h_exponents", "x_actions", "sections"],
    "additionalProperties": False,
}

_SCHEMAS = {
    "tower": TOWER_SCHEMA,
    "elementary": ELEMENTARY_SCHEMA,
    "descent": DESCENT_SCHEMA,
}


def _validate(data):
    if not isinstance(data, dict):
        raise SchemaError("instance file must hold a JSON object")
    kind = data.get("kind")
    schema = _SCHEMAS.get(kind)
    if schema is None:
        raise SchemaError(
            f'unknown instance kind {kind!r}; expected one of '
            f'{sorted(_SCHEMAS)}')
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{kind} instance: {exc.message}") from exc
    return kind


def load_instance(data: dict):
    """Build a TowerInstance, ElementaryModule, or DescentInstance."""
    kind = _validate(data)
    if kind == "tower":
        module = make_module(data["p"], data["exponents"], data["sigma"])
        c_bar = span(module, [tuple(g) for g in data["c_bar_generators"]])
        return TowerInstance(module, c_bar, data.get("d"))
    if kind == "elementary":
        params = RingParams(data["p"], data["precision"])
        summands = []
        for s in data["summands"]:
            if s["type"] == "p-power":
                summands.append(PPowerSummand(s["mu"]))
            else:
                try:
                    poly = DistinguishedPoly(
                        LambdaElement(params, s["coeffs"]))
                except ValueError as exc:
                    raise SchemaError(str(exc)) from exc
                summands.append(
                    DistinguishedSummand(poly, s.get("power", 1)))
        return ElementaryModule(params, tuple(summands))
    delta_spec = data["delta"]
    delta = (delta_preset(delta_spec) if isinstance(delta_spec, str)
             else delta_spec["table"])
    module = make_module(data["p"], data["exponents"], data["sigma"])
    group = build_group(data["p"], data["d"], delta, module,
                        data["h_exponents"], data["x_actions"])
    sections = []
    for s in data["sections"]:
        b_pairs = tuple(sorted((dd, tuple(vec)) for dd, vec in s["b"]))
        sections.append(
            Section(tuple(s["delta_indices"]), tuple(s["a"]), b_pairs))
    return DescentInstance(group, sections)


def load_instance_file(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path} is not valid JSON: {exc}") from exc
    return load_instance(data)


def dump_instance(obj) -> dict:
    """Plain-data form of an instance, suitable for re-ingestion."""
    if isinstance(obj, TowerInstance):
        return obj.describe()
    if isinstance(obj, DescentInstance):
        return obj.describe()
    if isinstance(obj, ElementaryModule):
        summands = []
        for s in obj.summands:
            if isinstance(s, PPowerSummand):
                summands.append({"type": "p-power", "mu": s.mu})
            else:
                summands.append({
                    "type": "distinguished",
                    "coeffs": list(s.poly.coeffs),
                    "power": s.power,
                })
        return {
            "kind": "elementary",
            "p": obj.params.p,
            "precision": obj.params.N,
            "summands": summands,
        }
    raise TypeError(f"cannot serialize {type(obj)}")


def instance_to_json(obj) -> str:
    return json.dumps(dump_instance(obj), indent=2, sort_keys=True) + "\n"
