"""Published JSON schemas for the experiment configs, one per subcommand.

These dictionaries are the source of truth; the repo's ``schemas/`` folder
holds the same documents as JSON files for external consumers, and a test
keeps the two in sync.  Defaults declared here are materialized into each
run's resolved config so reports carry full provenance.
"""

from __future__ import annotations

import copy

_ARCH = {
    "type": "object",
    "properties": {
        "d": {"type": "integer", "minimum": 1},
        "L": {"type": "integer", "minimum": 1},
        "widths": {
            "type": "array",
            "items": {"type": "integer", "minimum": 1},
            "minItems": 1,
        },
    },
    "required": ["d", "L", "widths"],
    "additionalProperties": False,
}

_CUSTOM_ACTIVATION = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "r": {"type": "integer", "const": 0},
        "a0": {"type": "number"},
        "a1": {"type": "number"},
        "a2": {"type": "number"},
        "interval": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "init": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
    },
    "required": ["name", "r", "a0", "a1", "a2", "interval", "init"],
    "additionalProperties": False,
}

_BOX = {
    "type": "array",
    "items": {
        "type": "array",
        "items": {"type": "number"},
        "minItems": 2,
        "maxItems": 2,
    },
    "minItems": 1,
}

_SEEDS = {
    "type": "array",
    "items": {"type": "integer", "minimum": 0},
    "minItems": 2,
    "maxItems": 2,
    "description": "half-open seed range [start, stop)",
}

FORMAT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pfaffnet format config",
    "type": "object",
    "properties": {
        "arch": _ARCH,
        "activation": {"type": "string", "default": "tanh"},
        "custom_activations": {"type": "array", "items": _CUSTOM_ACTIVATION, "default": []},
    },
    "required": ["arch"],
    "additionalProperties": False,
}

BOUND_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pfaffnet bound config",
    "type": "object",
    "properties": {
        "rows": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "formula": {"type": "string", "enum": ["zeros", "betti", "rankdrop"]},
                },
                "required": ["formula"],
            },
        },
        "C": {"type": ["number", "string"], "default": 1},
        "custom_activations": {"type": "array", "items": _CUSTOM_ACTIVATION, "default": []},
    },
    "required": ["rows"],
    "additionalProperties": False,
}

VERIFY_CHAIN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pfaffnet verify-chain config",
    "type": "object",
    "properties": {
        "arch": _ARCH,
        "activation": {"type": "string", "default": "tanh"},
        "seeds": {**_SEEDS, "default": [0, 8]},
        "scale": {"type": "number", "default": 1.0, "exclusiveMinimum": 0},
        "points": {"type": "integer", "minimum": 1, "default": 100},
        "box": {**_BOX, "default": []},
        "tol": {"type": "number", "default": 1e-8, "exclusiveMinimum": 0},
        "selftest": {"type": "boolean", "default": False},
        "dump_certificates": {"type": "boolean", "default": False},
        "custom_activations": {"type": "array", "items": _CUSTOM_ACTIVATION, "default": []},
    },
    "required": ["arch"],
    "additionalProperties": False,
}

ZEROS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pfaffnet zeros config",
    "type": "object",
    "properties": {
        "arch": _ARCH,
        "activation": {"type": "string", "default": "tanh"},
        "seeds": {**_SEEDS, "default": [0, 20]},
        "scale": {"type": "number", "default": 2.0, "exclusiveMinimum": 0},
        "interval": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
            "default": [-4.0, 4.0],
        },
        "initial_samples": {"type": "integer", "minimum": 16, "default": 4097},
        "refine_tol": {"type": "number", "default": 1e-10, "exclusiveMinimum": 0},
        "C": {"type": ["number", "string"], "default": 1},
        "custom_activations": {"type": "array", "items": _CUSTOM_ACTIVATION, "default": []},
    },
    "required": ["arch"],
    "additionalProperties": False,
}

BETTI_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pfaffnet betti config",
    "type": "object",
    "properties": {
        "fixture": {"type": "string", "enum": ["disk", "annulus", "two_disks"]},
        "net": {
            "type": "object",
            "properties": {
                "arch": _ARCH,
                "activation": {"type": "string", "default": "tanh"},
                "seed": {"type": "integer", "minimum": 0, "default": 0},
                "scale": {"type": "number", "default": 1.0, "exclusiveMinimum": 0},
            },
            "required": ["arch"],
            "additionalProperties": False,
        },
        "box": {**_BOX, "default": [[-2.0, 2.0], [-2.0, 2.0]]},
        "resolution": {"type": "integer", "minimum": 2, "default": 64},
        "tau": {"type": "number", "default": 0.0},
        "stability": {"type": "boolean", "default": True},
        "C": {"type": ["number", "string"], "default": 1},
        "custom_activations": {"type": "array", "items": _CUSTOM_ACTIVATION, "default": []},
    },
    "additionalProperties": False,
}

RANKDROP_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "pfaffnet rankdrop config",
    "type": "object",
    "properties": {
        "family": {
            "type": "object",
            "properties": {
                "fixture": {"type": "string", "enum": ["grushin", "heisenberg"]},
                "file": {"type": "string"},
                "d": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1},
                "arch": _ARCH,
                "activation": {"type": "string"},
                "seed": {"type": "integer", "minimum": 0},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "k_range": {**_SEEDS, "description": "half-open bracket-depth range [k1, k2)"},
        "k": {"type": "integer", "minimum": 1},
        "rho": {"type": "integer", "minimum": 0},
        "mode": {"type": "string", "enum": ["hall", "all_trees"], "default": "hall"},
        "criterion": {"type": "string", "enum": ["minor", "svd"], "default": "minor"},
        "epsilon": {"type": ["number", "string"], "default": "auto"},
        "tol": {"type": "number", "default": 1e-8, "exclusiveMinimum": 0},
        "box": _BOX,
        "resolution": {"type": "integer", "minimum": 2, "default": 64},
        "betti": {"type": "boolean", "default": True},
        "C": {"type": ["number", "string"], "default": 1},
        "custom_activations": {"type": "array", "items": _CUSTOM_ACTIVATION, "default": []},
    },
    "required": ["family", "rho"],
    "additionalProperties": False,
}

SCHEMAS = {
    "format": FORMAT_SCHEMA,
    "bound": BOUND_SCHEMA,
    "verify-chain": VERIFY_CHAIN_SCHEMA,
    "zeros": ZEROS_SCHEMA,
    "betti": BETTI_SCHEMA,
    "rankdrop": RANKDROP_SCHEMA,
}


def fill_defaults(config: dict, schema: dict) -> dict:
    """Copy of ``config`` with schema-declared defaults materialized."""
    out = copy.deepcopy(config)
    props = schema.get("properties", {})
    for key, sub in props.items():
        if key not in out and "default" in sub:
            out[key] = copy.deepcopy(sub["default"])
        if key in out and isinstance(out[key], dict) and sub.get("type") == "object":
            out[key] = fill_defaults(out[key], sub)
    return out
