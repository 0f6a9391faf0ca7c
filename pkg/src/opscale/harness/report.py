"""Structured experiment results with explicit pass/fail gates."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass
class Gate:
    name: str
    value: float
    threshold: float
    op: str  # one of "<", "<=", ">", ">=", "=="
    passed: bool = field(init=False)

    def __post_init__(self):
        v, t = float(self.value), float(self.threshold)
        self.passed = bool({
            "<": v < t, "<=": v <= t, ">": v > t, ">=": v >= t, "==": v == t,
        }[self.op])

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.6g} {self.op} {self.threshold:.6g}"

    def to_dict(self) -> dict:
        return {"name": self.name, "value": float(self.value), "op": self.op,
                "threshold": float(self.threshold), "passed": self.passed}


@dataclass
class ExperimentReport:
    experiment: str
    estimates: dict = field(default_factory=dict)
    gates: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)

    def gate(self, name: str, value: float, op: str, threshold: float) -> Gate:
        g = Gate(name, value, threshold, op)
        self.gates.append(g)
        return g

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "passed": self.passed,
            "gates": [g.to_dict() for g in self.gates],
            "estimates": _jsonable(self.estimates),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary_lines(self) -> list[str]:
        return [g.line() for g in self.gates]


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return obj


def bootstrap_interval(samples, stat=np.mean, n_boot: int = 1000, level: float = 0.95, rng=0):
    """Percentile bootstrap interval of ``stat`` over the first axis."""
    x = np.asarray(samples, dtype=float)
    rng = np.random.default_rng(rng)
    idx = rng.integers(0, len(x), size=(n_boot, len(x)))
    boots = np.array([stat(x[i], axis=0) for i in idx])
    lo, hi = np.quantile(boots, [(1 - level) / 2, (1 + level) / 2], axis=0)
    return lo, hi
