"""Conditional-variance ratios for strong local nondeterminism."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import quasimetric as qm
from ..covariance import FieldModel, covariance_matrix
from ..errors import DomainError
from .report import ExperimentReport

PINV_RCOND = 1e-10


def conditional_variance(C: np.ndarray) -> float:
    """``Var(X_n | X_1..X_{n-1})`` from the joint covariance ``C`` (last row is ``X_n``)."""
    if len(C) == 1:
        return float(C[0, 0])
    S = C[:-1, :-1]
    c = C[:-1, -1]
    return float(C[-1, -1] - c @ np.linalg.pinv(S, rcond=PINV_RCOND, hermitian=True) @ c)


def slnd_ratio(model: FieldModel, points) -> float:
    """Conditional variance of ``X(t^n)`` given ``X(t^1..t^{n-1})``, divided by
    ``min_{0<=k<n} tau_E(t^n - t^k)^2`` with ``t^0 = 0``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != model.N:
        raise DomainError(f"points must have {model.N} columns")
    full = np.vstack([np.zeros(model.N), pts])
    diffs = full[-1] - full[:-1]
    denom = float(np.min(qm.tau(model.exponent, diffs)) ** 2)
    if denom == 0.0:
        raise DomainError("t^n coincides with an earlier point (or the origin)")
    C = covariance_matrix(model, pts)
    return conditional_variance(C) / denom


@dataclass
class SlndReport:
    configs: list
    ratios: np.ndarray
    min_ratio: float
    max_ratio: float
    scale_ratios: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale_slope: float = 0.0
    scale_deviation: float = 0.0


def random_configs(N: int, count: int, n_max: int, rng) -> list:
    rng = np.random.default_rng(rng)
    return [rng.uniform(0.0, 1.0, size=(int(rng.integers(1, n_max + 1)), N)) for _ in range(count)]


def slnd_experiment(model: FieldModel, config_count: int = 200, n_max: int = 6, seed: int = 0,
                    scales=(0, 1, 2, 3, 4)) -> tuple[SlndReport, ExperimentReport]:
    """Ratios over random configurations in the unit cube, plus a rescaling check.

    The rescaling maps a fixed configuration by ``(2^-m)^E``; the ratio should
    not move since numerator and denominator both scale by ``2^{-2m}``.
    """
    if n_max > 8:
        raise DomainError("n_max is capped at 8")
    configs = random_configs(model.N, config_count, n_max, seed)
    ratios = np.array([slnd_ratio(model, c) for c in configs])
    base = configs[int(np.argmax([len(c) for c in configs]))]
    spec = model.exponent
    sr = np.array([slnd_ratio(model, base @ spec.exp_E(-m * math.log(2.0)).T) for m in scales])
    log_scale = -np.asarray(scales, dtype=float) * math.log(2.0)
    slope = float(np.polyfit(log_scale, np.log(sr), 1)[0]) if len(scales) > 1 else 0.0
    dev = float(np.max(np.abs(sr / sr[0] - 1.0)))
    rep = SlndReport(configs, ratios, float(ratios.min()), float(ratios.max()), sr, slope, dev)
    er = ExperimentReport("slnd", {
        "config_count": config_count, "n_max": n_max, "min_ratio": rep.min_ratio, "max_ratio": rep.max_ratio,
        "scale_ratios": sr, "scale_slope": slope, "scale_deviation": dev,
    })
    er.gate("min_ratio_positive", rep.min_ratio, ">", 0.0)
    er.gate("rescaling_relative_deviation", dev, "<", 1e-3)
    return rep, er
