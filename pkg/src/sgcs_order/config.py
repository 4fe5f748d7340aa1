"""Experiment configuration: JSON schema, validation and object construction.

A configuration is one JSON document.  Unknown fields are rejected at every
level.  :func:`resolve` returns the canonical form (defaults filled in,
convenience density families expanded) which, fed back in, resolves to
itself; the CLI hashes that form for its CSV fingerprints.
"""

from __future__ import annotations

import copy
import hashlib
import json

import jsonschema

from .densities import (
    DiscreteMarks,
    DualSlopeLoss,
    Faded,
    LognormalMarks,
    ParetoMarks,
    PathlossTransformed,
    PiecewiseConstant,
    PiecewisePowerFactor,
    PowerLaw,
    PowerLawLoss,
    Product,
    Scaled,
    TabulatedFactor,
    UnitMarks,
    combine_marks,
    constant,
)
from .montecarlo import DEFAULT_DELTA, SimConfig
from .ordering import DEFAULT_Q_MAX, DEFAULT_Q_MIN, ProbeGrid


class ConfigError(ValueError):
    """Malformed configuration; ``where`` names the offending field or line."""

    def __init__(self, where, message):
        self.where = where
        super().__init__(f"{where}: {message}")


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM_LIST = {"type": "array", "items": _NUM}


def _obj(tag, value, props, required=()):
    return {
        "type": "object",
        "additionalProperties": False,
        "required": [tag, *required],
        "properties": {tag: {"const": value}, **props},
    }


_DENSITY_FAMILIES = {
    "power_law": _obj("family", "power_law", {"coef": _POS, "exponent": _NUM}, ["coef"]),
    "homogeneous": _obj(
        "family", "homogeneous", {"lam0": _POS, "dim": {"enum": [1, 2, 3]}}, ["lam0", "dim"]
    ),
    "constant": _obj("family", "constant", {"lam": _POS}, ["lam"]),
    "piecewise_constant": _obj(
        "family",
        "piecewise_constant",
        {"breakpoints": _NUM_LIST, "levels": _NUM_LIST},
        ["breakpoints", "levels"],
    ),
    "highway": _obj(
        "family", "highway", {"alpha": _NUM, "beta": _POS, "rho": _POS}, ["alpha", "beta", "rho"]
    ),
    "scaled": _obj("family", "scaled", {"base": {"$ref": "#/$defs/density"}, "a": _POS}, ["base", "a"]),
    "product": _obj(
        "family",
        "product",
        {"base": {"$ref": "#/$defs/density"}, "factor": {"$ref": "#/$defs/factor"}},
        ["base", "factor"],
    ),
    "pathloss_transformed": _obj(
        "family",
        "pathloss_transformed",
        {"base": {"$ref": "#/$defs/density"}, "pathloss": {"$ref": "#/$defs/pathloss"}},
        ["base", "pathloss"],
    ),
    "faded": _obj(
        "family",
        "faded",
        {"base": {"$ref": "#/$defs/density"}, "marks": {"$ref": "#/$defs/marks"}, "eps": _POS},
        ["base", "marks", "eps"],
    ),
}

_MARK_KINDS = {
    "unit": _obj("kind", "unit", {}),
    "lognormal": _obj("kind", "lognormal", {"location": _NUM, "scale": _POS}),
    "lognormal_db": _obj("kind", "lognormal_db", {"sigma_db": _POS, "mean_db": _NUM}, ["sigma_db"]),
    "discrete": _obj("kind", "discrete", {"values": _NUM_LIST, "probs": _NUM_LIST}, ["values", "probs"]),
    "pareto": _obj("kind", "pareto", {"shape": _POS, "scale": _POS}, ["shape"]),
    "product": _obj(
        "kind",
        "product",
        {"shadowing": {"$ref": "#/$defs/marks"}, "power": {"$ref": "#/$defs/marks"}},
        ["shadowing", "power"],
    ),
}

_LOSS_KINDS = {
    "power_law": _obj("kind", "power_law", {"eps": _POS}, ["eps"]),
    "dual_slope": _obj("kind", "dual_slope", {"eps1": _POS, "eps2": _POS, "knee": _POS}, ["eps1", "eps2"]),
}

_FACTOR_KINDS = {
    "piecewise_power": _obj(
        "kind",
        "piecewise_power",
        {"breakpoints": _NUM_LIST, "coefs": _NUM_LIST, "exponents": _NUM_LIST},
        ["breakpoints", "coefs", "exponents"],
    ),
    "tabulated": _obj("kind", "tabulated", {"r": _NUM_LIST, "values": _NUM_LIST}, ["r", "values"]),
}


def _tagged(tag, table):
    """Dispatch on a tag field so validation errors point at the right branch."""
    return {
        "type": "object",
        "required": [tag],
        "properties": {tag: {"enum": sorted(table)}},
        "allOf": [
            {"if": {"properties": {tag: {"const": k}}, "required": [tag]}, "then": v}
            for k, v in sorted(table.items())
        ],
    }


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "sgcs-order experiment configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "densities": {
            "type": "array",
            "minItems": 1,
            "maxItems": 2,
            "items": {"$ref": "#/$defs/density"},
        },
        "pathloss": {"$ref": "#/$defs/pathloss"},
        "marks": {"$ref": "#/$defs/marks"},
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_samples": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "r_max": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "chunks": {"type": "integer", "minimum": 1},
                "mark_mode": {"enum": ["auto", "transform", "raw"]},
                "near_points": {"type": "integer", "minimum": 2},
                "far_bins": {"type": "integer", "minimum": 1},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "q_min": _POS,
                "q_max": _POS,
                "n_q": {"type": "integer", "minimum": 2},
                "r_points_per_q": {"type": "integer", "minimum": 2},
                "r_max_factor": {"type": "number", "minimum": 1},
            },
        },
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"type": "string"},
                "params": {"type": "object", "additionalProperties": _NUM},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
    },
    "$defs": {
        "density": _tagged("family", _DENSITY_FAMILIES),
        "marks": _tagged("kind", _MARK_KINDS),
        "pathloss": _tagged("kind", _LOSS_KINDS),
        "factor": _tagged("kind", _FACTOR_KINDS),
    },
}

SIM_DEFAULTS = {
    "n_samples": 100_000,
    "seed": 0,
    "r_max": None,
    "delta": DEFAULT_DELTA,
    "chunks": 16,
    "mark_mode": "auto",
    "near_points": 512,
    "far_bins": 48,
}
GRID_DEFAULTS = {
    "q_min": DEFAULT_Q_MIN,
    "q_max": DEFAULT_Q_MAX,
    "n_q": 200,
    "r_points_per_q": 400,
    "r_max_factor": 100.0,
}


def _path(parts):
    out = "config"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def load_text(text, source="<config>"):
    """Parse JSON text, reporting syntax errors by line and column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return doc


def load_file(path):
    with open(path, encoding="utf-8") as fh:
        return load_text(fh.read(), str(path))


def validate(doc):
    """Schema-check ``doc``; the most specific error is reported."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = list(validator.iter_errors(doc))
    if errors:
        err = max(errors, key=lambda e: len(e.absolute_path))
        best = jsonschema.exceptions.best_match(errors)
        if len(best.absolute_path) >= len(err.absolute_path):
            err = best
        raise ConfigError(_path(err.absolute_path), err.message)


# -- object construction -------------------------------------------------------


def build_marks(cfg):
    kind = cfg["kind"]
    if kind == "unit":
        return UnitMarks()
    if kind == "lognormal":
        return LognormalMarks(cfg.get("location", 0.0), cfg.get("scale", 1.0))
    if kind == "lognormal_db":
        return LognormalMarks.from_db(cfg["sigma_db"], cfg.get("mean_db", 0.0))
    if kind == "discrete":
        return DiscreteMarks(tuple(cfg["values"]), tuple(cfg["probs"]))
    if kind == "pareto":
        return ParetoMarks(cfg["shape"], cfg.get("scale", 1.0))
    if kind == "product":
        return combine_marks(build_marks(cfg["shadowing"]), build_marks(cfg["power"]))
    raise ValueError(f"unknown mark kind {kind!r}")


def build_pathloss(cfg):
    if cfg["kind"] == "power_law":
        return PowerLawLoss(cfg["eps"])
    return DualSlopeLoss(cfg["eps1"], cfg["eps2"], cfg.get("knee", 1.0))


def build_factor(cfg):
    if cfg["kind"] == "piecewise_power":
        return PiecewisePowerFactor(tuple(cfg["breakpoints"]), tuple(cfg["coefs"]), tuple(cfg["exponents"]))
    return TabulatedFactor(tuple(cfg["r"]), tuple(cfg["values"]))


def build_density(cfg):
    fam = cfg["family"]
    if fam == "power_law":
        return PowerLaw(cfg["coef"], cfg.get("exponent", 0.0))
    if fam == "homogeneous":
        return PowerLaw.homogeneous(cfg["lam0"], cfg["dim"])
    if fam == "constant":
        return constant(cfg["lam"])
    if fam == "piecewise_constant":
        return PiecewiseConstant(tuple(cfg["breakpoints"]), tuple(cfg["levels"]))
    if fam == "highway":
        return PiecewiseConstant.two_level(cfg["alpha"], cfg["beta"], cfg["rho"])
    if fam == "scaled":
        return Scaled(build_density(cfg["base"]), cfg["a"])
    if fam == "product":
        return Product(build_density(cfg["base"]), build_factor(cfg["factor"]))
    if fam == "pathloss_transformed":
        return PathlossTransformed(build_density(cfg["base"]), build_pathloss(cfg["pathloss"]))
    if fam == "faded":
        return Faded(build_density(cfg["base"]), build_marks(cfg["marks"]), cfg["eps"])
    raise ValueError(f"unknown density family {fam!r}")


def _built(where, fn, cfg):
    try:
        return fn(cfg)
    except (ValueError, TypeError, ArithmeticError) as exc:
        raise ConfigError(where, str(exc)) from None


def resolve(doc):
    """Validate ``doc`` and return its canonical, fully defaulted form."""
    validate(doc)
    out = {}
    if "densities" in doc:
        out["densities"] = [
            _built(f"config.densities[{i}]", build_density, d).to_config()
            for i, d in enumerate(doc["densities"])
        ]
    out["pathloss"] = _built("config.pathloss", build_pathloss, doc.get("pathloss", {"kind": "power_law", "eps": 4.0})).to_config()
    out["marks"] = _built("config.marks", build_marks, doc.get("marks", {"kind": "unit"})).to_config()
    out["simulation"] = {**SIM_DEFAULTS, **doc.get("simulation", {})}
    out["grid"] = {**GRID_DEFAULTS, **doc.get("grid", {})}
    if out["grid"]["q_max"] <= out["grid"]["q_min"]:
        raise ConfigError("config.grid.q_max", "must exceed q_min")
    if "scenario" in doc:
        out["scenario"] = copy.deepcopy(doc["scenario"])
    if "output" in doc:
        out["output"] = copy.deepcopy(doc["output"])
    return out


def densities_of(resolved):
    return [build_density(d) for d in resolved.get("densities", [])]


def sim_config(resolved):
    sim = resolved["simulation"]
    loss = build_pathloss(resolved["pathloss"])
    eps = loss.eps if isinstance(loss, PowerLawLoss) else 4.0
    return SimConfig(
        n_samples=sim["n_samples"],
        seed=sim["seed"],
        eps=eps,
        marks=build_marks(resolved["marks"]),
        pathloss=None if isinstance(loss, PowerLawLoss) else loss,
        r_max=sim["r_max"],
        delta=sim["delta"],
        chunks=sim["chunks"],
        mark_mode=sim["mark_mode"],
        near_points=sim["near_points"],
        far_bins=sim["far_bins"],
    )


def probe_grid(resolved):
    g = resolved["grid"]
    return ProbeGrid.log_spaced(
        g["q_min"], g["q_max"], g["n_q"], r_points_per_q=g["r_points_per_q"], r_max_factor=g["r_max_factor"]
    )


def without_output(resolved):
    """The part of a resolved config that determines results (no output paths)."""
    return {k: v for k, v in resolved.items() if k != "output"}


def config_hash(resolved):
    blob = json.dumps(without_output(resolved), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def dumps(obj):
    """Canonical JSON text used for every file the CLI writes."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
