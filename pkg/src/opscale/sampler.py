"""Exact (Cholesky) and spectral samplers for operator-scaling fields.

Random numbers come from Philox, a counter-based generator.  Replica ``i`` of
master seed ``s`` draws from ``Philox(key=s).jumped(i)``, so every replica has
its own reproducible substream and replica 0 is the direct call with seed
``s``.  Parallel execution therefore gives the same output as serial.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from . import quasimetric as qm
from .covariance import FULL_BAND, FieldModel, FrequencyBand, covariance_matrix
from .errors import CapacityError, DomainError, NumericError
from .quadrature import sphere_rule

CHOLESKY_CAPACITY = 4096
JITTER_LADDER = (1e-12, 1e-10, 1e-8)
MIN_FREQUENCIES = 64


def substream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for replica ``index`` of ``seed``."""
    if seed is None:
        raise DomainError("a seed is required")
    seed = int(seed)
    if seed < 0:
        raise DomainError("seed must be nonnegative")
    bitgen = np.random.Philox(key=seed)
    if index:
        bitgen = bitgen.jumped(index)
    return np.random.Generator(bitgen)


@dataclass
class Realization:
    points: np.ndarray
    values: np.ndarray
    seed: int
    method: str
    fingerprint: str
    replica: int = 0
    band: Optional[FrequencyBand] = None
    freq_count: Optional[int] = None

    def __post_init__(self):
        if len(self.values) != len(self.points):
            raise DomainError("values and points differ in length")

    def describe(self) -> dict:
        d = {"method": self.method, "seed": self.seed, "replica": self.replica,
             "fingerprint": self.fingerprint, "n_points": len(self.points)}
        if self.band is not None:
            d["band"] = self.band.to_dict()
            d["freq_count"] = self.freq_count
        return d


# ------------------------------------------------------------------ Cholesky
@dataclass
class CholeskyFactor:
    """Lower factor of the covariance on the nonzero points, plus bookkeeping."""

    points: np.ndarray
    keep: np.ndarray  # indices of non-origin points
    L: np.ndarray
    jitter: float
    fingerprint: str

    def draw(self, rng: np.random.Generator, count: Optional[int] = None) -> np.ndarray:
        n = len(self.points)
        k = len(self.keep)
        if count is None:
            z = rng.standard_normal(k)
            out = np.zeros(n)
            out[self.keep] = self.L @ z
            return out
        z = rng.standard_normal((k, count))
        out = np.zeros((n, count))
        out[self.keep] = self.L @ z
        return out


def _as_points(model: FieldModel, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None] if model.N == 1 else pts[None, :]
    if pts.ndim != 2 or pts.shape[1] != model.N:
        raise DomainError(f"points must have shape (n, {model.N})")
    return pts


def cholesky_factor(model: FieldModel, points, jitter_policy: Sequence[float] = JITTER_LADDER,
                    covariance=None) -> CholeskyFactor:
    pts = _as_points(model, points)
    if len(pts) > CHOLESKY_CAPACITY:
        raise CapacityError(f"{len(pts)} points exceed the Cholesky capacity of {CHOLESKY_CAPACITY}")
    keep = np.flatnonzero(np.any(pts != 0, axis=1))
    if len(keep) == 0:
        return CholeskyFactor(pts, keep, np.zeros((0, 0)), 0.0, model.fingerprint())
    C = covariance_matrix(model, pts[keep]) if covariance is None else np.asarray(covariance)
    scale = float(np.mean(np.diag(C)))
    for eps in (0.0,) + tuple(jitter_policy):
        try:
            L = cholesky(C + eps * scale * np.eye(len(C)), lower=True, check_finite=False)
        except LinAlgError:
            continue
        return CholeskyFactor(pts, keep, L, eps, model.fingerprint())
    raise NumericError(f"Cholesky factorization failed at jitter {jitter_policy[-1]:g} x mean diagonal")


def sample_cholesky(model: FieldModel, points, seed: int, jitter_policy: Sequence[float] = JITTER_LADDER,
                    factor: Optional[CholeskyFactor] = None, replica: int = 0) -> Realization:
    """Exact Gaussian sample ``X = L z`` on ``points``; the origin gets 0."""
    if factor is None:
        factor = cholesky_factor(model, points, jitter_policy)
    values = factor.draw(substream(seed, replica))
    return Realization(factor.points, values, int(seed), "cholesky", factor.fingerprint, replica)


# ------------------------------------------------------------------ spectral
@dataclass
class SpectralGrid:
    """Half-space frequencies with cell amplitudes.

    ``weights`` are cell measures under ``dxi`` (the antipodal cell is folded
    in); ``amp2 = weights * psi^{-(2+Q)}``.
    """

    frequencies: np.ndarray
    weights: np.ndarray
    amp2: np.ndarray
    band: FrequencyBand
    rho_range: tuple = field(default=(0.0, 0.0))

    def __len__(self):
        return 2 * len(self.weights)


def _auto_rho_range(model: FieldModel, pts: np.ndarray, eps: float):
    """Range of ``rho = tau_{E'}(xi)`` holding all but about ``eps`` of the variance.

    Returns ``(lo, hi, lo_span, hi_span)`` where the spans are the log-depths
    added beyond ``1/tau_max`` and ``1/tau_min``.
    """
    nz = pts[np.any(pts != 0, axis=1)]
    if len(nz) == 0:
        raise DomainError("spectral range needs at least one nonzero point")
    lags = nz
    if 1 < len(nz) <= 2000:
        i, j = np.triu_indices(len(nz), 1)
        d = nz[j] - nz[i]
        d = d[np.any(d != 0, axis=1)]
        if len(d) > 20000:
            d = d[np.random.default_rng(0).choice(len(d), 20000, replace=False)]
        lags = np.concatenate([nz, d])
    t = qm.tau(model.exponent, lags)
    a1 = model.exponent.a[0]
    lo_span = math.log(1.0 / eps) / (2.0 * (a1 - 1.0)) + 1.0
    hi_span = math.log(1.0 / eps) / 2.0 + 1.0
    return math.exp(-lo_span) / t.max(), math.exp(hi_span) / t.min(), lo_span, hi_span


def _band_range(band: FrequencyBand, lo: float, hi: float, lo_span: float, hi_span: float):
    """Clip the band to the useful range, measuring the tails from the band
    edges themselves when the band sits outside that range."""
    lo_eff = max(band.lo, min(lo, band.hi * math.exp(-2.0 * lo_span)))
    hi_eff = min(band.hi, max(hi, band.lo * math.exp(2.0 * hi_span)))
    return lo_eff, hi_eff


def spectral_grid(model: FieldModel, points, band: FrequencyBand = FULL_BAND, freq_count: int = 2 ** 12,
                  eps: Optional[float] = None) -> SpectralGrid:
    """Polar grid: log-midpoint rule in ``rho = tau_{E'}(xi)`` times a half-sphere rule."""
    if freq_count < MIN_FREQUENCIES:
        raise DomainError(f"freq_count must be at least {MIN_FREQUENCIES}")
    pts = _as_points(model, points)
    N = model.N
    k_half = freq_count // 2
    if N == 1:
        n_ang_target = 1
    else:
        n_ang_target = 2 ** int(math.floor(math.log2(k_half) / 2))
    if N == 1:
        M = 2
    elif N == 2:
        M = n_ang_target
    else:
        M = max(2, int(round(math.sqrt(n_ang_target))))
    omega, dS = sphere_rule(N, M, True)
    n_rad = max(1, k_half // len(omega))
    eps = 0.5 / math.sqrt(freq_count) if eps is None else eps
    lo, hi = _band_range(band, *_auto_rho_range(model, pts, eps))
    if not hi > lo:
        raise DomainError("frequency band is empty for these points")
    edges = np.linspace(math.log(lo), math.log(hi), n_rad + 1)
    delta = edges[1] - edges[0]
    lrho = 0.5 * (edges[:-1] + edges[1:])
    Pd = model.dual.P
    base = omega @ Pd.T
    psi_m = model.psi(base)
    kappa = psi_m if model.psi.variant == "tau_dual" else qm.tau(model.dual, base)
    jac = np.einsum("mi,ij,mj->m", omega, model.dual.D, omega)
    detp = abs(np.linalg.det(Pd))
    v = lrho[:, None] - np.log(kappa)[None, :]  # ln r, shape (R, M)
    ed = model.dual.exp_D(v)  # (R, M, N, N)
    xi = np.einsum("rmij,mj->rmi", ed, omega) @ Pd.T
    r = np.exp(v)
    Q = model.Q
    weights = detp * r ** Q * jac[None, :] * dS[None, :] * delta
    amp2 = weights * (r * psi_m[None, :]) ** (-(2.0 + Q))
    return SpectralGrid(xi.reshape(-1, N), weights.ravel(), amp2.ravel(), band, (lo, hi))


def spectral_variance(grid: SpectralGrid, points) -> np.ndarray:
    """Exact variance of the spectral sum at each point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ph = pts @ grid.frequencies.T
    s = np.sin(0.5 * ph)
    return (4.0 * s * s) @ grid.amp2


@dataclass
class SpectralBasis:
    """Cached ``(cos - 1, sin)`` design matrices of a grid on a point set."""

    points: np.ndarray
    grid: SpectralGrid
    C: np.ndarray
    S: np.ndarray
    fingerprint: str

    @classmethod
    def build(cls, model: FieldModel, points, grid: SpectralGrid) -> "SpectralBasis":
        pts = _as_points(model, points)
        ph = pts @ grid.frequencies.T
        amp = np.sqrt(grid.amp2)
        C = (np.cos(ph) - 1.0) * amp
        S = np.sin(ph) * amp
        return cls(pts, grid, C, S, model.fingerprint())

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        k = self.C.shape[1]
        z = rng.standard_normal(k)
        zp = rng.standard_normal(k)
        return self.C @ z + self.S @ zp


def sample_spectral(model: FieldModel, points, band: FrequencyBand = FULL_BAND, freq_count: int = 2 ** 12,
                    seed: int = None, basis: Optional[SpectralBasis] = None, replica: int = 0) -> Realization:
    """Band-limited spectral sum; vanishes exactly at the origin."""
    if basis is None:
        grid = spectral_grid(model, points, band, freq_count)
        basis = SpectralBasis.build(model, points, grid)
    values = basis.draw(substream(seed, replica))
    return Realization(basis.points, values, int(seed), "spectral", basis.fingerprint, replica,
                       basis.grid.band, len(basis.grid))


# ------------------------------------------------------------------ replication
@dataclass(frozen=True)
class Method:
    kind: str = "cholesky"
    band: FrequencyBand = FULL_BAND
    freq_count: int = 2 ** 12
    jitter_policy: tuple = JITTER_LADDER

    def __post_init__(self):
        if self.kind not in ("cholesky", "spectral"):
            raise DomainError(f"unknown sampling method {self.kind!r}")


def replicate(model: FieldModel, points, method: Method | str, replica_count: int, master_seed: int,
              threads: int = 1) -> Iterator[Realization]:
    """Yield ``replica_count`` realizations in replica order.

    The expensive setup (factor or design matrices) is shared; each replica
    only draws its own normals.  ``threads`` changes speed, never output.
    """
    if replica_count < 1:
        raise DomainError("replica_count must be at least 1")
    if master_seed is None:
        raise DomainError("a master seed is required")
    method = Method(method) if isinstance(method, str) else method
    if method.kind == "cholesky":
        factor = cholesky_factor(model, points, method.jitter_policy)

        def one(i):
            return sample_cholesky(model, points, master_seed, factor=factor, replica=i)
    else:
        grid = spectral_grid(model, points, method.band, method.freq_count)
        basis = SpectralBasis.build(model, points, grid)

        def one(i):
            return sample_spectral(model, points, seed=master_seed, basis=basis, replica=i)

    if threads <= 1:
        for i in range(replica_count):
            yield one(i)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(one, range(replica_count))


def replicate_values(model: FieldModel, points, method: Method | str, replica_count: int, master_seed: int,
                     threads: int = 1) -> np.ndarray:
    """Replica values stacked as ``(replica_count, n_points)``."""
    return np.stack([r.values for r in replicate(model, points, method, replica_count, master_seed, threads)])
