"""Uniform and local moduli of continuity estimated from simulated paths.

The limits in these laws are almost-sure constants, which cannot be reached at
desk scale.  The experiments therefore report the normalized sup statistic
per radius and replica and judge it by its cross-replica spread.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import quasimetric as qm
from ..covariance import FieldModel, FrequencyBand, variogram
from ..errors import DomainError
from ..sampler import Method, replicate_values, spectral_grid, SpectralBasis, substream
from .example62 import alpha_argmin, alpha_theta
from .report import ExperimentReport, bootstrap_interval


def log_e(x):
    """``log x = ln(max(x, e))``."""
    return np.log(np.maximum(x, math.e))


def umc_normalizer(t):
    return t * np.sqrt(log_e(1.0 + 1.0 / t))


def lil_normalizer(t):
    return t * np.sqrt(log_e(log_e(1.0 + 1.0 / t)))


@dataclass
class ModulusReport:
    radii: np.ndarray
    stats: np.ndarray  # (replicas, radii)
    mean: np.ndarray
    sd: np.ndarray
    cv: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_stats(cls, radii, stats, counts=None, extra=None):
        stats = np.asarray(stats, dtype=float)
        mean = stats.mean(axis=0)
        sd = stats.std(axis=0, ddof=1) if len(stats) > 1 else np.zeros(stats.shape[1])
        lo, hi = bootstrap_interval(stats) if len(stats) > 1 else (mean, mean)
        return cls(np.asarray(radii, dtype=float), stats, mean, sd, sd / mean, lo, hi,
                   np.asarray(counts if counts is not None else [], dtype=int), extra or {})

    def to_dict(self) -> dict:
        d = {"radii": self.radii, "mean": self.mean, "sd": self.sd, "cv": self.cv,
             "ci_low": self.ci_low, "ci_high": self.ci_high}
        if len(self.counts):
            d["counts"] = self.counts
        d.update(self.extra)
        return d


def dyadic_grid(N: int, level: int) -> np.ndarray:
    """Points ``i 2^-level``, ``i = 0..2^level - 1`` on each axis (C order)."""
    ax = np.arange(2 ** level) / 2.0 ** level
    mesh = np.meshgrid(*([ax] * N), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _grid_lags(N: int, level: int, max_steps: Optional[int] = None):
    """Integer lag vectors in a half-space (one of each antipodal pair)."""
    n = 2 ** level
    m = n - 1 if max_steps is None else min(n - 1, max_steps)
    rng = np.arange(-m, m + 1)
    mesh = np.meshgrid(*([rng] * N), indexing="ij")
    L = np.stack([x.ravel() for x in mesh], axis=1)
    first = np.argmax(L != 0, axis=1)
    lead = L[np.arange(len(L)), first]
    return L[lead > 0]


def _max_abs_increment(values: np.ndarray, lag: np.ndarray) -> np.ndarray:
    """``max |X(s + lag) - X(s)|`` over grid pairs; ``values`` is (R, n, ..., n)."""
    src = [slice(None)]
    dst = [slice(None)]
    for k in lag:
        k = int(k)
        if k >= 0:
            src.append(slice(0, values.shape[len(src)] - k))
            dst.append(slice(k, None))
        else:
            src.append(slice(-k, None))
            dst.append(slice(0, values.shape[len(dst)] + k))
    diff = values[tuple(dst)] - values[tuple(src)]
    return np.abs(diff).reshape(len(values), -1).max(axis=1)


def grid_sup_statistics(values: np.ndarray, lags: np.ndarray, lag_tau: np.ndarray, radii, normalizer):
    """Per replica, per radius: ``max`` over lags with ``tau <= r`` of ``max|dX| / normalizer(tau)``."""
    per_lag = np.stack([_max_abs_increment(values, l) for l in lags], axis=1) / normalizer(lag_tau)[None, :]
    out = np.empty((len(values), len(radii)))
    counts = np.empty(len(radii), dtype=int)
    for j, r in enumerate(radii):
        sel = lag_tau <= r
        counts[j] = int(sel.sum())
        out[:, j] = per_lag[:, sel].max(axis=1) if sel.any() else np.nan
    return out, counts


def default_umc_radii(lag_tau: np.ndarray, count: int = 4) -> np.ndarray:
    """Decreasing radii from the smallest lag scale upward by factors of 2."""
    r0 = float(np.min(lag_tau)) * 1.0000001
    return r0 * 2.0 ** np.arange(count)[::-1]


def estimate_umc(model: FieldModel, grid_level: int, radii=None, replica_count: int = 20, master_seed: int = 0,
                 threads: int = 1, values: Optional[np.ndarray] = None) -> tuple[ModulusReport, ExperimentReport]:
    """Normalized sup of grid increments ``|X(s) - X(t)| / (tau sqrt(log(1 + 1/tau)))``."""
    N = model.N
    if N == 2 and grid_level > 6:
        raise DomainError("grid_level above 6 exceeds the Cholesky capacity for N = 2")
    pts = dyadic_grid(N, grid_level)
    if values is None:
        values = replicate_values(model, pts, "cholesky", replica_count, master_seed, threads)
    n = 2 ** grid_level
    vals = values.reshape((len(values),) + (n,) * N)
    lags = _grid_lags(N, grid_level, max_steps=16)
    lag_tau = qm.tau(model.exponent, lags / n)
    if radii is None:
        radii = default_umc_radii(lag_tau)
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    stats, counts = grid_sup_statistics(vals, lags, lag_tau, radii, umc_normalizer)
    rep = ModulusReport.from_stats(radii, stats, counts)
    er = ExperimentReport("umc", {"grid_level": grid_level, "replicas": len(values), **rep.to_dict()})
    er.gate("cv_smallest_radius", rep.cv[-1], "<", 0.35)
    if len(radii) > 1:
        er.gate("cv_second_smallest_radius", rep.cv[-2], "<", 0.35)
    er.gate("sup_monotone_in_radius", float(np.all(np.diff(stats, axis=1) <= 0)), "==", 1.0)
    return rep, er


# ---------------------------------------------------------------- local modulus
MIN_BALL_POINTS = 50


def _lil_from_values(values, t0_index, pts, t_rel, radii):
    inc = np.abs(values - values[:, [t0_index]])
    norm = np.full(len(pts), np.inf)
    nz = t_rel > 0
    norm[nz] = lil_normalizer(t_rel[nz])
    ratio = inc / norm[None, :]
    out = np.empty((len(values), len(radii)))
    counts = np.empty(len(radii), dtype=int)
    for j, r in enumerate(radii):
        sel = nz & (t_rel <= r)
        counts[j] = int(sel.sum())
        out[:, j] = ratio[:, sel].max(axis=1)
    return out, counts


def ball_radii_by_count(t_rel: np.ndarray, counts: Sequence[int]) -> np.ndarray:
    """Radii whose balls hold the requested numbers of points (largest first)."""
    tr = np.sort(t_rel[t_rel > 0])
    return np.array(sorted((float(tr[min(c, len(tr)) - 1]) for c in counts), reverse=True))


def ball_cloud(model: FieldModel, t0, radii, per_ball: int = 60, seed: int = 0) -> np.ndarray:
    """``t0`` followed by a union of uniform samples from ``t0 + B_E(r)``."""
    rng = np.random.default_rng(seed)
    pieces = [np.asarray(t0, dtype=float)[None, :]]
    for r in radii:
        pieces.append(qm.sample_ball(model.exponent, r, per_ball, rng, center=t0))
    return np.concatenate(pieces)


def estimate_lil(model: FieldModel, t0, radii=None, replica_count: int = 20, master_seed: int = 0,
                 band_split: Optional[dict] = None, grid_level: Optional[int] = None, per_ball: int = 60,
                 threads: int = 1, values: Optional[np.ndarray] = None) -> tuple[ModulusReport, ExperimentReport]:
    """Local sup ``|X(t0 + s) - X(t0)| / (tau(s) sqrt(loglog(1 + 1/tau(s))))`` over balls.

    With ``grid_level`` the points are a dyadic grid containing ``t0``;
    otherwise a multi-scale cloud is drawn by rejection inside the balls.
    Each ball must contain at least 50 points.
    """
    t0 = np.asarray(t0, dtype=float)
    spec = model.exponent
    if grid_level is not None:
        pts = dyadic_grid(model.N, grid_level)
        d = np.linalg.norm(pts - t0, axis=1)
        t0_index = int(np.argmin(d))
        if d[t0_index] > 1e-12:
            raise DomainError("t0 must be a grid point")
    else:
        if radii is None:
            radii = 2.0 ** -np.arange(2, 8, dtype=float)
        pts = ball_cloud(model, t0, radii, per_ball, master_seed)
        t0_index = 0
    t_rel = qm.tau(spec, pts - t0)
    if radii is None:
        radii = ball_radii_by_count(t_rel, (1600, 800, 400, 200, 100, 50))
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    if np.sum((t_rel > 0) & (t_rel <= radii[-1])) < MIN_BALL_POINTS:
        raise DomainError(f"smallest ball holds fewer than {MIN_BALL_POINTS} points")
    if values is None:
        values = replicate_values(model, pts, "cholesky", replica_count, master_seed, threads)
    stats, counts = _lil_from_values(values, t0_index, pts, t_rel, radii)
    rep = ModulusReport.from_stats(radii, stats, counts)
    est = {"t0": t0, "replicas": len(values), **rep.to_dict()}
    er = ExperimentReport("lil", est)
    er.gate("cv_smallest_radius", rep.cv[-1], "<", 0.35)
    if len(radii) > 1:
        er.gate("cv_second_smallest_radius", rep.cv[-2], "<", 0.35)
    er.gate("sup_monotone_in_radius", float(np.all(np.diff(stats, axis=1) <= 0)), "==", 1.0)
    if band_split is not None:
        split = band_split_statistics(model, **band_split)
        rep.extra["band_split"] = split
        er.estimates["band_split"] = split
        m = np.asarray(split["I2_exact_mean"])
        er.gate("I2_mean_decreasing", float(np.all(np.diff(m) < 0)), "==", 1.0)
    return rep, er


def band_split_statistics(model: FieldModel, bands: Sequence[int] = (1, 2, 3, 4, 5), mu: float = 0.9,
                          replica_count: int = 200, master_seed: int = 0, freq_count: int = 2 ** 12) -> dict:
    """``I_1(n)`` and ``I_2(n)`` at ``s_n`` for the band ``(d_{n-1}, d_n]``.

    ``s_n`` points along the last column of ``P`` with length
    ``exp(-a_p n^{1+mu})`` and ``d_n = exp(n^{1+mu} + n^mu)`` (``d_0 = 0``).
    ``I_1`` uses the in-band spectral component, ``I_2`` the sum of the two
    out-of-band components drawn from independent substreams.  Exact means
    ``sigma sqrt(2/pi) / normalizer`` come from band-limited variograms.
    """
    if not 0 < mu < 1:
        raise DomainError("mu must lie in (0, 1)")
    spec = model.exponent
    ap = spec.a[-1]
    e = spec.P[:, -1] / np.linalg.norm(spec.P[:, -1])
    d = lambda n: 0.0 if n == 0 else math.exp(n ** (1 + mu) + n ** mu)
    rows = {"n": [], "tau_s": [], "I1_mean": [], "I2_mean": [], "I2_exact_mean": [], "I1_exact_mean": [],
            "out_of_band_fraction": []}
    for n in bands:
        s = math.exp(-ap * n ** (1 + mu)) * e
        ts = qm.tau(spec, s)
        norm = float(lil_normalizer(ts))
        lo, hi = d(n - 1), d(n)
        full = variogram(model, s)
        inband = variogram(model, s, FrequencyBand(lo, hi))
        outband = max(full - inband, 0.0)
        comps = []
        for k, band in enumerate([FrequencyBand(lo, hi)] + ([FrequencyBand(0.0, lo)] if lo > 0 else [])
                                 + [FrequencyBand(hi, math.inf)]):
            grid = spectral_grid(model, s[None, :], band, freq_count)
            basis = SpectralBasis.build(model, s[None, :], grid)
            seed = master_seed + 1000 * n + k
            comps.append(np.array([basis.draw(substream(seed, i))[0] for i in range(replica_count)]))
        x_in = comps[0]
        x_out = sum(comps[1:])
        rows["n"].append(n)
        rows["tau_s"].append(ts)
        rows["I1_mean"].append(float(np.mean(np.abs(x_in)) / norm))
        rows["I2_mean"].append(float(np.mean(np.abs(x_out)) / norm))
        rows["I1_exact_mean"].append(math.sqrt(inband * 2 / math.pi) / norm)
        rows["I2_exact_mean"].append(math.sqrt(outband * 2 / math.pi) / norm)
        rows["out_of_band_fraction"].append(outband / full)
    rows["mu"] = mu
    return rows


# ------------------------------------------------- curves through the Jordan cell
DIRECTIONAL_CURVES = ("I1", "I2", "theta0")


def _curve_points(a: float, curve: str, level: int, cap: int = 1024):
    if curve == "I1":
        i = np.arange(2 ** level + 1)
        return np.stack([i, i], axis=1) / 2.0 ** level, np.array([1.0, 1.0]) / 2.0 ** level
    if curve == "I2":
        i = np.arange(2 ** level + 1)
        return np.stack([0 * i, i], axis=1) / 2.0 ** level, np.array([0.0, 1.0]) / 2.0 ** level
    th0, al0 = alpha_argmin(a)
    step = (2.0 ** (-a * level) / al0) * np.array([1.0, th0 - level * math.log(2.0)])
    i = np.arange(cap)
    pts = i[:, None] * step + np.array([0.0, 1.0])
    inside = np.all((pts >= 0) & (pts <= 1), axis=1)
    k_max = int(np.argmin(inside)) if not inside.all() else cap
    return pts[:k_max], step


def curve_normalizer(a: float, curve: str, r):
    """Normalizer in ``||y||`` for each curve family."""
    r = np.asarray(r, dtype=float)
    base = r ** (1 / a) * np.sqrt(log_e(1.0 + 1.0 / r))
    lg = np.abs(np.log(r)) ** (1 / a)
    if curve == "I1":
        return base * lg
    if curve == "I2":
        return base
    return base / lg


def directional_modulus_example62(model: FieldModel, curve: str, levels: Sequence[int] = (5, 6, 7, 8),
                                  replica_count: int = 20, master_seed: int = 0,
                                  threads: int = 1) -> tuple[ModulusReport, ExperimentReport]:
    """Normalized sup of single-step increments along a curve, one column per level.

    For ``I1`` and ``I2`` the other family's normalizer is reported too, so a
    drift appears when the wrong normalizer is used.
    """
    if curve not in DIRECTIONAL_CURVES:
        raise DomainError(f"curve must be one of {DIRECTIONAL_CURVES}")
    spec = model.exponent
    if spec.N != 2 or spec.p != 1 or spec.blocks[0].size != 2 or not spec.is_canonical:
        raise DomainError("directional study needs the two-dimensional Jordan-cell exponent")
    a = spec.blocks[0].a
    levels = sorted(levels)
    stats, alt, norms = [], [], []
    for lv in levels:
        pts, step = _curve_points(a, curve, lv)
        vals = replicate_values(model, pts, "cholesky", replica_count, master_seed + lv, threads)
        inc = np.abs(np.diff(vals, axis=1)).max(axis=1)
        r = float(np.linalg.norm(step))
        norms.append(r)
        stats.append(inc / curve_normalizer(a, curve, r))
        other = {"I1": "I2", "I2": "I1", "theta0": "I2"}[curve]
        alt.append(inc / curve_normalizer(a, other, r))
    stats = np.array(stats).T
    alt = np.array(alt).T
    rep = ModulusReport.from_stats(np.array(norms), stats,
                                   extra={"curve": curve, "levels": levels,
                                          "alt_normalizer_mean": alt.mean(axis=0)})
    er = ExperimentReport(f"example62_{curve}", rep.to_dict())
    er.gate("cv_finest_level", rep.cv[-1], "<", 0.35)
    return rep, er
