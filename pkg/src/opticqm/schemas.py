"""JSON schemas for CLI configs and reports (draft 2020-12).

``python -m opticqm.schemas DIR`` writes every schema to ``DIR`` as
``<name>.schema.json``.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

SCHEMA_VERSION = "1.0"
DRAFT = "https://json-schema.org/draft/2020-12/schema"

_rational = {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                       {"type": "string", "pattern": r"^\s*[0-9]+(\.[0-9]*)?(\s*/\s*[0-9]+)?\s*$"}]}
_signed_rational = {"oneOf": [{"type": "number"},
                              {"type": "string", "pattern": r"^\s*-?[0-9]+(\.[0-9]*)?(\s*/\s*[0-9]+)?\s*$"}]}
_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}


def _params(props: dict) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False}


PARAMS = {
    "photon": _params({"n": {"type": "integer", "minimum": 8}, "steps": _posint,
                       "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
                       "order": {"enum": [2, 4]}, "k_index": _posint,
                       "helicity": {"enum": [1, -1]}, "length": _pos}),
    "scalar": _params({"n": {"type": "integer", "minimum": 8}, "steps": _posint,
                       "cfl": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
                       "m": {"type": "number", "minimum": 0}, "k_index": _posint,
                       "hbar": _pos, "c": _pos}),
    "rays": _params({"medium": {"enum": ["constant", "linear"]}, "n": _pos, "n0sq": _pos,
                     "slope": _vec3, "launch": {"enum": ["point", "plane"]},
                     "source": _vec3, "x0": _vec3, "direction": _vec3,
                     "tau": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                     "dtau": _pos}),
    "huygens": _params({"a": _signed_rational, "m": _rational, "n": {"type": "integer", "minimum": 8},
                        "tests": _posint}),
    "modes": _params({"domain": {"enum": ["interval", "square", "rectangle", "disk", "annulus", "torus"]},
                      "bc": {"enum": ["dirichlet", "neumann", "periodic"]}, "h": _rational,
                      "count": _posint, "a": _pos, "b": _pos, "R": _pos, "r": _pos}),
    "chladni": _params({"domain": {"enum": ["square", "rectangle", "disk", "annulus", "torus"]},
                        "bc": {"enum": ["dirichlet", "neumann", "periodic"]}, "h": _rational,
                        "a": _pos, "b": _pos, "R": _pos, "r": _pos,
                        "modes": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                        "coefficients": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                        "basis": {"enum": ["auto", "solver", "separable"]}}),
    "ck": _params({"n": {"type": "integer", "minimum": 9}, "k": _pos, "m": {"type": "integer"},
                   "kz": {"type": "number"}, "half_width": _pos}),
    "knots": _params({"slope": _rational, "n": {"type": "integer", "minimum": 9}, "R": _pos,
                      "start": _vec3, "max_length": _pos, "link": {"type": "boolean"},
                      "segments": {"type": "integer", "minimum": 8}}),
    "tise": _params({"potential": {"enum": ["box", "harmonic", "sampled"]}, "h": _rational,
                     "file": {"type": "string"}, "omega": _pos, "half_width": _pos,
                     "m": _pos, "hbar": _pos, "tol": _pos, "max_iter": _posint}),
}

CONFIG = {
    "$schema": DRAFT,
    "title": "opticqm run config",
    "type": "object",
    "properties": {"seed": {"type": "integer", "minimum": 0},
                   "params": {"type": "object"}},
    "additionalProperties": False,
}

RESULTS = {
    "photon": ["energy", "energy_drift", "div_max", "phase_error", "continuity_residual"],
    "scalar": ["continuity_residual", "dalembert_residual", "charge_drift", "stationary_t0i_max",
               "stationary_j0_error"],
    "rays": ["tau", "J", "amplitude_divergence", "amplitude_jacobian", "route_agreement",
             "speed_defect_max"],
    "huygens": ["chain", "gap", "kg_chain", "residuals", "order"],
    "modes": ["eigenvalues", "cluster_ids", "multiplicities", "residuals"],
    "chladni": ["eigenvalue", "components", "closed", "length"],
    "ck": ["force_free", "divergence", "vector_helmholtz", "radial_helmholtz", "centerlines",
           "max_radial_deviation"],
    "knots": ["closed", "p", "q", "slope", "arc_length", "points"],
    "tise": ["E", "iterations", "tise_residual", "J", "hj_identity", "discrete_ground", "monotone"],
}


def report_schema(command: str) -> dict:
    return {
        "$schema": DRAFT,
        "title": f"opticqm {command} report",
        "type": "object",
        "required": ["status", "command", "version", "seed", "params", "results", "files"],
        "properties": {
            "status": {"const": "ok"},
            "command": {"const": command},
            "version": {"const": SCHEMA_VERSION},
            "seed": {"type": "integer"},
            "params": PARAMS[command],
            "results": {"type": "object", "required": RESULTS[command]},
            "files": {"type": "array", "items": {"type": "string"}},
        },
        "additionalProperties": False,
    }


ERROR = {
    "$schema": DRAFT,
    "title": "opticqm error report",
    "type": "object",
    "required": ["status", "command", "kind", "message"],
    "properties": {"status": {"const": "error"}, "command": {"type": "string"},
                   "kind": {"type": "string"}, "message": {"type": "string"},
                   "residual": {"type": ["number", "null"]}},
    "additionalProperties": False,
}


def all_schemas() -> dict:
    out = {"config": CONFIG, "error": ERROR}
    for name in PARAMS:
        out[f"{name}-params"] = {"$schema": DRAFT, **PARAMS[name]}
        out[f"{name}-report"] = report_schema(name)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    target = Path(argv[0] if argv else "schemas")
    target.mkdir(parents=True, exist_ok=True)
    for name, schema in all_schemas().items():
        (target / f"{name}.schema.json").write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
