"""Deterministic second-moment checks and closed-form anchors.

Each function returns an :class:`ExperimentReport` whose gates carry the
tolerance that judged them.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .. import quasimetric as qm
from ..covariance import FieldModel, comparability_ratio, truncation_check, truncation_radius, variogram_batch
from ..errors import DomainError
from .dimensions import boundary_continuity, dimensions
from .example62 import CURVES, alpha_theta, example62_curves, jordan_spec, last_decade_slope
from .report import ExperimentReport

SCALING_FACTORS = (0.25, 0.5, 2.0, 4.0)


def oracle_variogram_1d(a: float, h):
    """Closed form for ``E = [a]`` and ``psi = tau_{E'}``.

    Here ``tau_{E'}(xi) = (|xi|/a)^{1/a}`` so the density is ``(|xi|/a)^{-beta}``
    with ``beta = 1 + 2/a``, and
    ``gamma(h) = 2 a^beta pi |h|^{2/a} / (Gamma(beta) sin(pi/a))``.
    For ``a = 2`` this is ``8 pi |h|``.
    """
    if not a > 1:
        raise DomainError("a must exceed 1")
    beta = 1.0 + 2.0 / a
    c = 2.0 * a ** beta * math.pi / (gamma_fn(beta) * math.sin(math.pi / a))
    return c * np.abs(np.asarray(h, dtype=float)) ** (2.0 / a)


def _is_oracle(model: FieldModel) -> bool:
    spec = model.exponent
    return spec.N == 1 and model.psi.variant == "tau_dual" and spec.is_canonical


def fixed_lags(N: int, count: int = 20, lo: float = 1e-2, hi: float = 1.0, seed: int = 0) -> np.ndarray:
    """``count`` lags with log-spaced norms and pseudo-random directions."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(count, N))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * np.geomspace(lo, hi, count)[:, None]


def scaling_experiment(model: FieldModel, factors: Sequence[float] = SCALING_FACTORS, lag_count: int = 20,
                       tol: float = 5e-4, seed: int = 0) -> ExperimentReport:
    """``gamma(c^E h)`` against ``c^2 gamma(h)``; on the 1-D model also against the closed form."""
    spec = model.exponent
    h = fixed_lags(spec.N, lag_count, seed=seed)
    g = variogram_batch(model, h)
    worst = []
    for c in factors:
        hc = h @ spec.exp_E(math.log(c)).T
        gc = variogram_batch(model, hc)
        worst.append(float(np.max(np.abs(gc - c * c * g) / (c * c * g))))
    er = ExperimentReport("scaling", {"factors": list(factors), "lag_count": lag_count,
                                      "max_relative_deviation": worst,
                                      "profile": model.profile.name})
    er.traces["scaling"] = (["factor", "max_relative_deviation"], np.column_stack([factors, worst]))
    er.gate("operator_scaling_relative_deviation", max(worst), "<=", tol)
    if _is_oracle(model):
        a = spec.a[0]
        hh = np.geomspace(1e-3, 10.0, 20)
        exact = oracle_variogram_1d(a, hh)
        got = variogram_batch(model, hh[:, None])
        rel = float(np.max(np.abs(got / exact - 1.0)))
        ratio = comparability_ratio(model, hh[:, None])
        r_exact = exact / qm.tau(spec, hh[:, None]) ** 2
        rdev = float(np.max(np.abs(ratio / r_exact - 1.0)))
        er.estimates.update({"oracle_relative_error": rel, "comparability_ratio": ratio,
                             "comparability_exact": float(r_exact[0])})
        er.traces["oracle"] = (["h", "gamma", "exact"], np.column_stack([hh, got, exact]))
        er.gate("oracle_relative_error", rel, "<=", 1e-3)
        er.gate("comparability_relative_deviation", rdev, "<=", 5e-3)
    return er


def truncation_experiment(model: FieldModel, count: int = 100, seed: int = 0,
                          r0: Optional[float] = None, rtol: float = 1e-3) -> ExperimentReport:
    """Random ``(t, u)`` with ``tau_E(t) u <= r0``; every pair must satisfy lhs <= (1 + rtol) rhs."""
    spec = model.exponent
    rng = np.random.default_rng(seed)
    if r0 is None:
        r0 = truncation_radius(model, rng=rng)
    t = rng.normal(size=(count, spec.N)) * np.exp(rng.uniform(-3.0, 1.0, size=(count, 1)))
    tt = qm.tau(spec, t)
    u = r0 * rng.uniform(0.01, 1.0, size=count) / tt
    rows = []
    for ti, ui in zip(t, u):
        res = truncation_check(model, ti, float(ui), r0, rtol)
        rows.append((res.lhs, res.rhs))
    rows = np.array(rows)
    ratio = rows[:, 0] / rows[:, 1]
    er = ExperimentReport("truncation", {"r0": r0, "count": count, "max_ratio": float(ratio.max()),
                                         "mean_ratio": float(ratio.mean())})
    er.traces["truncation"] = (["tau_t", "u", "lhs", "rhs"], np.column_stack([tt, u, rows]))
    er.gate("max_lhs_over_rhs", float(ratio.max()), "<=", 1.0 + rtol)
    return er


def example62_experiment(a: float = 2.0, theta_far: float = 50.0) -> ExperimentReport:
    """Closed-form anchors of the two-dimensional Jordan cell ``[[a, 0], [1, a]]``."""
    spec = jordan_spec(a)
    s = np.array([1e-3, 0.1, 0.5, 1.0, 3.0, 10.0])
    vert = np.column_stack([0 * s, s])
    norm_err = float(np.max(np.abs(qm.e_norm(spec, vert) - s / a) / (s / a)))
    tau_err = float(np.max(np.abs(qm.tau(spec, np.column_stack([0 * s, a * s ** a])) - s) / s))
    far = theta_far / alpha_theta(a, theta_far)
    er = ExperimentReport("example62", {"a": a, "vertical_norm_error": norm_err, "vertical_tau_error": tau_err,
                                        "theta_over_alpha": far})
    er.gate("vertical_norm_relative_error", norm_err, "<=", 1e-9)
    er.gate("vertical_tau_relative_error", tau_err, "<=", 1e-7)
    er.gate("theta_over_alpha_relative_to_a", abs(far / a - 1.0), "<=", 0.05)
    y_norms = np.geomspace(1e-12, 1e-2, 21)
    for curve in CURVES:
        rows = example62_curves(a, curve, y_norms)
        slope = last_decade_slope(rows)
        er.estimates[f"curve_{curve}_slope"] = slope
        er.traces[f"curve_{curve}"] = (["y_norm", "tau", "predicted", "ratio"], np.array(rows))
        er.gate(f"curve_{curve}_log_ratio_slope", abs(slope), "<=", 0.05)
    return er


def dims_experiment(H, d: float, grid_points: int = 50, tol: float = 1e-9) -> ExperimentReport:
    """Dimension values for ``(H, d)`` plus branch continuity over a grid of ``H``."""
    rep = dimensions(H, d)
    N = len(rep.H)
    er = ExperimentReport("dims", rep.to_dict())
    er.gate("graph_dim_at_least_N", rep.graph_dim, ">=", N)
    er.gate("graph_dim_at_most_N_plus_d", rep.graph_dim, "<=", N + d)
    er.gate("range_dim_at_most_min_d_sum", rep.range_dim, "<=", min(d, float(np.sum(1.0 / np.array(rep.H)))))
    worst = max(boundary_continuity(Hg) for Hg in h_grid(N, grid_points))
    er.estimates["continuity_grid_points"] = grid_points
    er.estimates["continuity_max_jump"] = worst
    er.gate("branch_boundary_jump", worst, "<=", tol)
    return er


def h_grid(N: int, count: int = 50) -> list:
    """``count`` nondecreasing H-vectors in ``(0, 1)^N`` on a regular pattern."""
    out = []
    base = np.linspace(0.05, 0.95, count)
    for i, h in enumerate(base):
        steps = np.linspace(0.0, 1.0, N) * ((i % 7) / 7.0) * (0.99 - h)
        out.append(tuple(h + steps))
    return out
