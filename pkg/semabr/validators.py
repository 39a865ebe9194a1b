"""Cerberus validator classes and schemas for semabr."""

import quantities as pq
from cerberus import Validator

from .errors import ParametersError


class ParametersValidator(Validator):
    """Cerberus validator class for configuration parameters.

    Time-typed keys accept plain numbers (seconds), `quantities` time
    quantities, or strings such as "4 s" / "80 ms"; all are normalized to
    seconds. Values arriving as strings (environment overrides) are
    coerced by the schemas' `coerce` rules.
    """

    def _normalize_coerce_seconds(self, value) -> float:
        if isinstance(value, pq.Quantity):
            return float(value.rescale(pq.s).magnitude)
        if isinstance(value, str):
            parts = value.split()
            if len(parts) == 2:
                return float(pq.Quantity(float(parts[0]), parts[1]).rescale(pq.s).magnitude)
            return float(value)
        return float(value)

    def _normalize_coerce_float_list(self, value) -> list:
        if isinstance(value, str):
            value = [x for x in value.replace(";", ",").split(",") if x.strip()]
        return [float(x) for x in value]

    def _normalize_coerce_str_list(self, value) -> list:
        if isinstance(value, str):
            value = [x.strip() for x in value.split(";") if x.strip()]
        return list(value)

    def _validate_positive(self, positive, field, value):
        """Require a strictly positive number.

        The rule's arguments are validated against this schema:
        {'type': 'boolean'}
        """
        if positive and isinstance(value, (int, float)) and not value > 0:
            self._error(field, "Must be strictly positive")

    def _validate_increasing(self, increasing, field, value):
        """Require a strictly increasing sequence.

        The rule's arguments are validated against this schema:
        {'type': 'boolean'}
        """
        if increasing and any(b <= a for a, b in zip(value, value[1:])):
            self._error(field, "Must be strictly increasing")


SESSION_SCHEMA = {
    "ladder": {
        "type": "list",
        "coerce": "float_list",
        "minlength": 2,
        "increasing": True,
        "schema": {"type": "number", "positive": True},
    },
    "chunk_duration": {"type": "number", "coerce": "seconds", "positive": True},
    "buffer_capacity": {"type": "number", "coerce": "seconds", "positive": True},
    "rtt": {"type": "number", "coerce": "seconds", "min": 0},
    "total_chunks": {"type": "integer", "coerce": int, "min": 1},
    "alpha": {"type": "number", "coerce": float, "min": 0},
    "beta": {"type": "number", "coerce": float, "min": 0},
    "codec": {"type": "string"},
    "history_len": {"type": "integer", "coerce": int, "min": 1},
}

TRAIN_SCHEMA = {
    "actor_lr": {"type": "number", "coerce": float, "positive": True},
    "critic_lr": {"type": "number", "coerce": float, "positive": True},
    "gamma": {"type": "number", "coerce": float, "min": 0, "max": 1},
    "epochs": {"type": "integer", "coerce": int, "min": 1},
    "workers": {"type": "integer", "coerce": int, "min": 1},
    "entropy_weight": {"type": "number", "coerce": float, "min": 0},
    "entropy_weight_final": {"type": "number", "coerce": float, "min": 0},
    "seed": {"type": "integer", "coerce": int},
    "checkpoint_every": {"type": "integer", "coerce": int, "min": 0},
    "actor_update": {"type": "string", "allowed": ["literal", "advantage"]},
}

MPC_SCHEMA = {
    "horizon": {"type": "integer", "coerce": int, "min": 1},
    "window": {"type": "integer", "coerce": int, "min": 1},
}

BB_SCHEMA = {
    "reservoir": {"type": "number", "coerce": "seconds", "min": 0},
    "cushion": {"type": "number", "coerce": "seconds", "positive": True},
}

SPLIT_SCHEMA = {
    "fraction": {"type": "number", "coerce": float, "min": 0, "max": 1},
}

PATHS_SCHEMA = {
    key: {"type": "string", "nullable": True}
    for key in [
        "trace_dir",
        "table",
        "out_dir",
        "train_manifest",
        "test_manifest",
        "checkpoint",
    ]
}

RUN_SCHEMA = {
    "seed": {"type": "integer", "coerce": int},
    "schemes": {"type": "list", "coerce": "str_list", "schema": {"type": "string"}},
    "session": {"type": "dict", "schema": SESSION_SCHEMA},
    "train": {"type": "dict", "schema": TRAIN_SCHEMA},
    "mpc": {"type": "dict", "schema": MPC_SCHEMA},
    "bb": {"type": "dict", "schema": BB_SCHEMA},
    "split": {"type": "dict", "schema": SPLIT_SCHEMA},
    "paths": {"type": "dict", "schema": PATHS_SCHEMA},
}

RATE_TABLE_SCHEMA = {
    "note": {"type": "string"},
    "codecs": {
        "type": "dict",
        "required": True,
        "minlength": 1,
        "keysrules": {"type": "string"},
        "valuesrules": {
            "type": "list",
            "minlength": 1,
            "schema": {
                "type": "dict",
                "schema": {
                    "bitrate_kbps": {
                        "type": "number",
                        "required": True,
                        "positive": True,
                    },
                    "miou": {"type": "number", "required": True, "min": 0, "max": 1},
                },
            },
        },
    },
}


def validate(schema: dict, params: dict, section: str = None) -> dict:
    """Validate and normalize `params` against a cerberus `schema`.

    Args:
        schema (dict): One of the schemas of this module.
        params (dict): The parameters to be validated.
        section (str, optional): Name used in the error message.

    Raises:
        ParametersError: Raised with the validator's error tree if invalid.

    Returns:
        dict: The normalized parameters.
    """
    if params is None:
        raise ParametersError("Parameters cannot be `None`.", section)
    if not isinstance(params, dict):
        raise ParametersError("Parameters are not a dictionary.", section)
    v = ParametersValidator(schema)
    if not v.validate(params):
        raise ParametersError(v.errors, section)
    return v.document
