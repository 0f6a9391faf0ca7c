"""Named exponents used by the test suite, the CLI and the examples in the README."""
from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .exponent import CELL, ROTATION, ExponentSpec, JordanBlock


def _build(name: str) -> ExponentSpec:
    if name == "S1":
        return ExponentSpec.diagonal([2.0])
    if name == "S2":
        return ExponentSpec.diagonal([1.5, 2.5])
    if name == "S3":
        return ExponentSpec((JordanBlock(CELL, 2.0, 2),))
    if name == "S4":
        return ExponentSpec((JordanBlock(ROTATION, 1.5, 2, 1.0),))
    if name == "S5":
        return ExponentSpec((JordanBlock(CELL, 1.3, 1), JordanBlock(CELL, 2.0, 1)),
                            np.array([[1.0, 0.5], [-0.3, 1.0]]))
    if name == "S6":
        return ExponentSpec((JordanBlock(CELL, 1.2, 1), JordanBlock(ROTATION, 2.0, 2, 0.7)),
                            np.array([[1.0, 0.3, 0.0], [0.0, 1.0, 0.2], [0.1, 0.0, 1.0]]))
    raise ConfigError(f"unknown named spec {name!r}; choose from {list(NAMED_SPECS)}")


NAMED_SPECS = {
    "S1": "E = [2], the one-dimensional oracle",
    "S2": "diag(1.5, 2.5)",
    "S3": "Jordan cell a = 2, the log-corrected geometry",
    "S4": "rotation block a = 1.5, b = 1",
    "S5": "diag(1.3, 2.0) conjugated by P = [[1, .5], [-.3, 1]]",
    "S6": "three-dimensional: cell 1.2 plus rotation (2, 0.7), non-canonical P",
}


def named_spec(name: str) -> ExponentSpec:
    return _build(str(name).upper())


def all_named_specs() -> dict:
    return {k: named_spec(k) for k in NAMED_SPECS}
