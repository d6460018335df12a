"""Scenario configuration: JSON schema, validation, and object builders.

Configs are strict: unknown keys are rejected everywhere, so typos fail
loudly before any computation starts. Builders translate the declarative
blocks into weight, measure, and symbol objects.
"""
from __future__ import annotations

import json
from typing import Any

import numpy as np
from jsonschema import Draft202012Validator

from . import measure as measure_mod, verifier, weights as weights_mod

TASKS = (
    "geometry-suite",
    "weights-suite",
    "lattice-suite",
    "carleson-pq",
    "carleson-qp",
    "operator-check",
    "compactness-probe",
    "audit-4.2",
)


class SchemaError(ValueError):
    pass


def _complex_field():
    return {
        "oneOf": [
            {"type": "number"},
            {
                "type": "array",
                "items": {"type": "number"},
                "minItems": 2,
                "maxItems": 2,
            },
        ]
    }


WEIGHT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["standard_alpha", "power_log", "tabulated"]},
        "alpha": {"type": "number"},
        "b": {"type": "number"},
        "radii": {"type": "array", "items": {"type": "number"}},
        "values": {"type": "array", "items": {"type": "number"}},
    },
}

FACTOR_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["one", "const", "zero", "boundary_power"]},
        "value": {"type": "number"},
        "exponent": {"type": "number"},
    },
}

MAP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["identity", "dilation", "affine", "automorphism", "composite"]},
        "factor": _complex_field(),
        "matrix": {"type": "array"},
        "offset": {"type": "array"},
        "point": {"type": "array"},
        "maps": {"type": "array"},
    },
}

MEASURE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["type"],
    "properties": {
        "type": {"enum": ["weight_density", "lebesgue", "zero"]},
        "factor": FACTOR_SCHEMA,
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["task", "n"],
    "properties": {
        "task": {"enum": list(TASKS)},
        "n": {"type": "integer", "minimum": 1, "maximum": 8},
        "p": {"type": "number", "exclusiveMinimum": 0},
        "q": {"type": "number", "exclusiveMinimum": 0},
        "r": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "ball_radius": {"type": "number", "exclusiveMinimum": 0, "maximum": 2.5},
        "weight": WEIGHT_SCHEMA,
        "measure": MEASURE_SCHEMA,
        "phi": MAP_SCHEMA,
        "psi": MAP_SCHEMA,
        "u": FACTOR_SCHEMA,
        "v": FACTOR_SCHEMA,
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "radial_nodes": {"type": "integer", "minimum": 8, "maximum": 60},
                "sphere_samples": {"type": "integer", "minimum": 64},
                "chunk": {"type": "integer", "minimum": 64},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dyadic_depth": {"type": "integer", "minimum": 3, "maximum": 14},
                "directions": {"type": "integer", "minimum": 1, "maximum": 16},
            },
        },
        "audit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "s": {"type": "number", "exclusiveMinimum": 0},
                "R": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "N": {"type": "number", "minimum": 1},
                "t_grid": {"type": "array", "items": {"type": "number"}},
            },
        },
        "r_sweep": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "format": {"enum": ["json", "csv"]},
            },
        },
    },
}

_VALIDATOR = Draft202012Validator(SCHEMA)


def validate_config(raw: dict) -> dict:
    errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        lines = []
        for err in errors:
            where = "/".join(str(p) for p in err.absolute_path) or "<root>"
            lines.append(f"{where}: {err.message}")
        raise SchemaError("; ".join(lines))
    return raw


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SchemaError("config must be a JSON object")
    return validate_config(raw)


def _as_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    return complex(value[0], value[1])


def build_weight(cfg: dict | None, n: int) -> weights_mod.RadialWeight:
    cfg = cfg or {"type": "standard_alpha", "alpha": 0.0}
    kind = cfg["type"]
    if kind == "standard_alpha":
        return weights_mod.StandardAlpha(cfg.get("alpha", 0.0), n=n)
    if kind == "power_log":
        return weights_mod.PowerLog(cfg.get("alpha", 0.0), cfg.get("b", 0.0), n=n)
    if kind == "tabulated":
        if "radii" not in cfg or "values" not in cfg:
            raise SchemaError("tabulated weight needs radii and values")
        return weights_mod.Tabulated(cfg["radii"], cfg["values"], n=n)
    raise SchemaError(f"unknown weight type {kind!r}")


def build_factor(cfg: dict | None, n: int) -> measure_mod.WeightFactor:
    cfg = cfg or {"type": "one"}
    kind = cfg["type"]
    if kind == "one":
        return measure_mod.WeightFactor.const(1.0, n)
    if kind == "const":
        return measure_mod.WeightFactor.const(cfg.get("value", 1.0), n)
    if kind == "zero":
        return measure_mod.WeightFactor.zero(n)
    if kind == "boundary_power":
        return measure_mod.WeightFactor.boundary_power(cfg.get("exponent", 0.0), n)
    raise SchemaError(f"unknown factor type {kind!r}")


def build_map(cfg: dict | None, n: int) -> measure_mod.SymbolMap:
    cfg = cfg or {"type": "identity"}
    kind = cfg["type"]
    if kind == "identity":
        return measure_mod.IdentityMap(n)
    if kind == "dilation":
        return measure_mod.DilationMap(_as_complex(cfg.get("factor", 1.0)), n)
    if kind == "affine":
        matrix = np.array(cfg["matrix"], dtype=float)
        offset = np.array(cfg.get("offset", [0.0] * (2 * n)), dtype=float)
        cm = matrix[..., 0] + 1j * matrix[..., 1] if matrix.ndim == 3 else matrix.astype(complex)
        co = offset[..., 0] + 1j * offset[..., 1] if offset.ndim == 2 else offset.astype(complex)
        return measure_mod.AffineMap(cm, co, n)
    if kind == "automorphism":
        point = np.array(cfg["point"], dtype=float)
        cp = point[..., 0] + 1j * point[..., 1] if point.ndim == 2 else point.astype(complex)
        return measure_mod.AutomorphismMap(cp, n=n)
    if kind == "composite":
        return measure_mod.CompositeMap([build_map(m, n) for m in cfg.get("maps", [])])
    raise SchemaError(f"unknown map type {kind!r}")


def build_measure(cfg: dict | None, n: int, omega: weights_mod.RadialWeight) -> measure_mod.Measure:
    cfg = cfg or {"type": "weight_density"}
    kind = cfg["type"]
    factor = measure_mod.WeightFactor.const(1.0, n) if "factor" not in cfg else build_factor(cfg["factor"], n)
    if kind == "weight_density":
        return measure_mod.DensityMeasure.from_weight(omega, extra=factor)
    if kind == "lebesgue":
        return measure_mod.DensityMeasure(
            lambda pts: factor.evaluate(pts), n, name=f"{factor.name}*dV"
        )
    if kind == "zero":
        return measure_mod.SumMeasure([], n=n, name="zero")
    raise SchemaError(f"unknown measure type {kind!r}")


def build_symbol_config(raw: dict) -> verifier.SymbolConfig:
    n = raw["n"]
    omega = build_weight(raw.get("weight"), n)
    quad_raw = raw.get("quadrature", {})
    quad = verifier.QuadratureSpec(
        seed=quad_raw.get("seed", 20240601),
        radial_nodes=quad_raw.get("radial_nodes", 36),
        sphere_samples=quad_raw.get("sphere_samples", 2 ** 13),
        chunk=quad_raw.get("chunk", 4096),
    )
    grid_raw = raw.get("grid", {})
    grid = verifier.GridSpec(
        dyadic_depth=grid_raw.get("dyadic_depth", 7),
        directions=grid_raw.get("directions", 2),
    )
    return verifier.SymbolConfig(
        n=n,
        p=raw.get("p", 2.0),
        q=raw.get("q", 2.0),
        omega=omega,
        mu=build_measure(raw.get("measure"), n, omega),
        phi=build_map(raw.get("phi"), n),
        psi=build_map(raw.get("psi"), n),
        u=build_factor(raw.get("u"), n),
        v=build_factor(raw.get("v"), n),
        r=raw.get("r", 0.5),
        quad=quad,
        grid=grid,
        ball_radius=raw.get("ball_radius", 1.0),
    )
