"""Experiment configuration files (JSON or YAML) and model construction.

A config looks like::

    model:
      exponent: S2            # a named spec, or {blocks: [...], P: [[...]]}, or {matrix: [[...]]}
      psi: tau_dual           # or {variant: tau_dual, scale: 2.0}
      profile: standard
    seed: 7
    experiment:
      kind: umc
      grid_level: 6
    output:
      path: out/report.json
      format: csv

Command-line flags override the file field by field.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from .covariance import PROFILES, FieldModel
from .errors import ConfigError, DomainError
from .exponent import ExponentSpec
from .psi import make_custom_psi, make_tau_dual_psi
from .specs import named_spec


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file {path!r} does not exist")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        if path.endswith(".json"):
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (ValueError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return data


def require(cfg: dict, name: str) -> Any:
    """Value at dotted path ``name``; a missing field is a config error naming it."""
    cur: Any = cfg
    for part in name.split("."):
        if not isinstance(cur, dict) or cur.get(part) is None:
            raise ConfigError(f"missing required field '{name}'")
        cur = cur[part]
    return cur


def parse_exponent(value) -> ExponentSpec:
    try:
        if isinstance(value, str):
            return named_spec(value)
        if isinstance(value, dict):
            if "named" in value:
                return named_spec(value["named"])
            if "matrix" in value:
                return ExponentSpec.from_matrix(np.array(value["matrix"], dtype=float))
            return ExponentSpec.from_dict(value)
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model.exponent: {exc}") from None
    raise ConfigError("model.exponent must be a spec name or a mapping")


def parse_psi(value, spec: ExponentSpec):
    if value is None or value == "tau_dual":
        return make_tau_dual_psi(spec)
    if isinstance(value, dict) and value.get("variant", "tau_dual") == "tau_dual":
        scale = float(value.get("scale", 1.0))
        if scale == 1.0:
            return make_tau_dual_psi(spec)
        if not scale > 0:
            raise ConfigError("model.psi.scale must be positive")
        base = make_tau_dual_psi(spec)
        return make_custom_psi(spec, lambda xi: scale * base(xi), name=f"{scale:g}*tau_dual")
    raise ConfigError(f"unsupported model.psi {value!r}; only tau_dual (optionally scaled) is configurable")


@dataclass
class ExperimentConfig:
    model: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    seed: Optional[int] = None
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        unknown = set(d) - {"model", "experiment", "seed", "output"}
        if unknown:
            raise ConfigError(f"unknown top-level fields: {sorted(unknown)}")
        seed = d.get("seed")
        if seed is not None:
            try:
                seed = int(seed)
            except (TypeError, ValueError):
                raise ConfigError("seed must be an integer") from None
            if not 0 <= seed < 2 ** 64:
                raise ConfigError("seed must fit in 64 unsigned bits")
        return cls(dict(d.get("model") or {}), dict(d.get("experiment") or {}), seed, dict(d.get("output") or {}))

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("missing required field 'seed'")
        return self.seed

    def build_model(self) -> FieldModel:
        spec = parse_exponent(require({"model": self.model}, "model.exponent"))
        profile = self.model.get("profile", "standard")
        if profile not in PROFILES:
            raise ConfigError(f"unknown model.profile {profile!r}; choose from {sorted(PROFILES)}")
        psi = parse_psi(self.model.get("psi"), spec)
        return FieldModel(spec, psi, PROFILES[profile])
