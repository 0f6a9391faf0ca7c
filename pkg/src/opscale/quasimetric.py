"""Norm ``||.||_E``, polar coordinates ``x = tau^E l`` and related constants.

Write ``F_x(sigma) = int_sigma^inf ||exp(-s E) x|| ds``.  Then
``||x||_E = F_x(0)`` and ``tau_E(x)`` is the unique ``tau`` with
``F_x(ln tau) = 1``.  Since ``F_x(sigma) = ||exp(-sigma E) x||_E`` and
``dF/dsigma = -||exp(-sigma E) x||``, Newton's method on ``ln F`` converges in
a handful of steps.  All integrals use one fixed Gauss-Legendre rule per
exponent, so results are deterministic and exactly symmetric in ``x``.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .exponent import ExponentSpec, project_invariant
from .quadrature import gauss_legendre, panel_rule

_NODES_PER_PANEL = 10
_TAIL_EPS = 1e-17
_MAX_ITER = 200
_CHUNK = 4096

_rules: "weakref.WeakKeyDictionary[ExponentSpec, _NormRule]" = weakref.WeakKeyDictionary()


@dataclass
class _NormRule:
    nodes: np.ndarray
    weights: np.ndarray
    mats: np.ndarray  # P exp(-u_k D), shape (K, N, N)
    upper: float


def _norm_rule(spec: ExponentSpec) -> _NormRule:
    rule = _rules.get(spec)
    if rule is not None:
        return rule
    a1 = spec.a[0]
    cond = np.linalg.cond(spec.P)
    scale = cond * np.linalg.norm(spec.D, 2) / (a1 - 1.0 + 1e-3) * (1.0 + 1.0 / a1)
    U = 1.0
    while True:
        decay = np.linalg.norm(spec.exp_D(-U), 2)
        if scale * decay < _TAIL_EPS or U > 1e4:
            break
        U *= 1.25
    bmax = max([abs(b.b) for b in spec.blocks] + [0.0])
    width = 2.0 / max(spec.a[-1], bmax, 1.0)
    n_pan = max(1, int(math.ceil(U / width)))
    nodes, weights = panel_rule(np.linspace(0.0, U, n_pan + 1), _NODES_PER_PANEL)
    mats = spec.P @ spec.exp_D(-nodes)
    rule = _NormRule(nodes, weights, mats, U)
    _rules[spec] = rule
    return rule


def _as_points(spec: ExponentSpec, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != spec.N:
        raise DomainError(f"points must have trailing dimension {spec.N}, got shape {x.shape}")
    return x, single


def _norm_canonical(spec: ExponentSpec, y: np.ndarray) -> np.ndarray:
    """``||P y||_E`` for canonical coordinates ``y`` of shape (n, N)."""
    rule = _norm_rule(spec)
    out = np.empty(len(y))
    for s in range(0, len(y), _CHUNK):
        blk = y[s:s + _CHUNK]
        v = np.einsum("kij,nj->nki", rule.mats, blk)
        out[s:s + _CHUNK] = np.sqrt(np.einsum("nki,nki->nk", v, v)) @ rule.weights
    return out


def e_norm(spec: ExponentSpec, x):
    """``||x||_E = int_0^1 ||t^E x|| dt / t`` for one point or a batch."""
    x, single = _as_points(spec, x)
    out = _norm_canonical(spec, x @ spec.P_inv.T)
    return float(out[0]) if single else out


def _solve_sigma(spec: ExponentSpec, y: np.ndarray, n0: np.ndarray) -> np.ndarray:
    """Solve ``ln ||exp(-sigma D) y||_E = 0`` for each row (``y`` nonzero)."""
    a1 = spec.a[0]
    sigma = np.log(n0) / a1
    lo = np.full(len(y), -np.inf)
    hi = np.full(len(y), np.inf)
    active = np.ones(len(y), dtype=bool)
    for _ in range(_MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return sigma
        s = sigma[idx]
        z = np.einsum("nij,nj->ni", spec.exp_D(-s), y[idx])
        F = _norm_canonical(spec, z)
        f = np.linalg.norm(z @ spec.P.T, axis=1)
        G = np.log(F)
        pos = G > 0
        lo[idx[pos]] = np.maximum(lo[idx[pos]], s[pos])
        hi[idx[~pos]] = np.minimum(hi[idx[~pos]], s[~pos])
        step = np.clip(G * F / f, -20.0, 20.0)
        new = s + step
        l, h = lo[idx], hi[idx]
        bad = ~((new >= l) & (new <= h))
        both = np.isfinite(l) & np.isfinite(h)
        new = np.where(bad & both, 0.5 * (l + h), new)
        sigma[idx] = new
        done = (np.abs(new - s) <= 4e-15 * np.maximum(1.0, np.abs(s))) | (G == 0.0)
        done |= both & (h - l <= 4e-15 * np.maximum(1.0, np.abs(s)))
        active[idx[done]] = False
    raise NumericError("polar decomposition did not converge within 200 iterations")


@dataclass(frozen=True)
class PolarCoordinates:
    tau: np.ndarray
    direction: np.ndarray

    def reconstruct(self, spec: ExponentSpec) -> np.ndarray:
        t = np.atleast_1d(self.tau)
        d = np.atleast_2d(self.direction)
        out = np.zeros_like(d)
        nz = t > 0
        if nz.any():
            out[nz] = np.einsum("nij,nj->ni", spec.exp_E(np.log(t[nz])), d[nz])
        return out[0] if np.ndim(self.tau) == 0 else out


def _polar(spec: ExponentSpec, x: np.ndarray, want_direction: bool):
    y = x @ spec.P_inv.T
    n0 = _norm_canonical(spec, y)
    tau = np.zeros(len(x))
    direction = np.full(x.shape, np.nan) if want_direction else None
    nz = n0 > 0
    if nz.any():
        sig = _solve_sigma(spec, y[nz], n0[nz])
        tau[nz] = np.exp(sig)
        if want_direction:
            z = np.einsum("nij,nj->ni", spec.exp_D(-sig), y[nz])
            direction[nz] = z @ spec.P.T
    return tau, direction


def polar_decompose(spec: ExponentSpec, x) -> PolarCoordinates:
    """Return ``(tau_E(x), l_E(x))``; the direction of the origin is NaN."""
    x, single = _as_points(spec, x)
    tau, d = _polar(spec, x, True)
    if single:
        return PolarCoordinates(float(tau[0]), d[0])
    return PolarCoordinates(tau, d)


def tau(spec: ExponentSpec, x):
    """Radial part ``tau_E(x)`` for one point or a batch."""
    x, single = _as_points(spec, x)
    t, _ = _polar(spec, x, False)
    return float(t[0]) if single else t


def tau_on_ray(spec: ExponentSpec, v, c) -> np.ndarray:
    """``tau_E(c v)`` for a fixed vector ``v`` and many scalars ``c``.

    Uses ``F_{cv} = |c| F_v``: a table of ``F_v`` at panel edges locates the
    panel holding the root and a local Gauss-Legendre integral refines it.
    """
    v = np.asarray(v, dtype=float)
    c = np.abs(np.asarray(c, dtype=float))
    out = np.zeros(c.shape)
    nz = c > 0
    if not nz.any() or not np.any(v):
        return out
    y = spec.P_inv @ v
    target = -np.log(c[nz])  # ln F_v(sigma) = -ln c
    t_ext = tau(spec, np.array([c[nz].min() * v, c[nz].max() * v]))
    lo_s, hi_s = math.log(t_ext[0]) - 1.0, math.log(t_ext[1]) + 1.0
    bmax = max([abs(b.b) for b in spec.blocks] + [0.0])
    width = 0.5 / max(spec.a[-1], bmax, 1.0)
    edges = np.linspace(lo_s, hi_s, int(math.ceil((hi_s - lo_s) / width)) + 1)
    z = np.einsum("nij,j->ni", spec.exp_D(-edges), y)
    lnF = np.log(_norm_canonical(spec, z))  # decreasing in sigma
    xg, wg = gauss_legendre(16)

    def speed(s):
        zz = np.einsum("...ij,j->...i", spec.exp_D(-s), y)
        return np.linalg.norm(zz @ spec.P.T, axis=-1)

    tgt = target
    k = np.clip(np.searchsorted(-lnF, -tgt) - 1, 0, len(edges) - 2)
    right = edges[k + 1]
    F_right = np.exp(lnF[k + 1])
    s = edges[k] + (edges[k + 1] - edges[k]) * np.clip(
        (lnF[k] - tgt) / (lnF[k] - lnF[k + 1]), 0.0, 1.0)
    for _ in range(30):
        half = 0.5 * (right - s)
        nodes = 0.5 * (right + s)[:, None] + half[:, None] * xg
        F = F_right + half * (speed(nodes) @ wg)
        G = np.log(F) - tgt
        step = np.clip(G * F / speed(s), -(right - edges[k]), right - edges[k])
        s = np.clip(s + step, edges[k], right)
        if np.all(np.abs(step) <= 4e-15 * np.maximum(1.0, np.abs(s))):
            break
    out[nz] = np.exp(s)
    return out


def estimate_quasi_triangle_constant(spec: ExponentSpec, sample_count: int, rng=None) -> float:
    """Largest sampled ``tau(x + y) / (tau(x) + tau(y))``."""
    if sample_count < 100:
        raise DomainError("sample_count must be at least 100")
    rng = np.random.default_rng(rng)
    N = spec.N
    x = _scaled_gaussians(spec, sample_count, rng)
    # half of the pairs are near-parallel, where the constant tends to be attained
    y = _scaled_gaussians(spec, sample_count, rng)
    half = sample_count // 2
    y[:half] = x[:half] * rng.uniform(0.2, 5.0, size=(half, 1)) + 1e-3 * rng.normal(size=(half, N))
    ratio = tau(spec, x + y) / (tau(spec, x) + tau(spec, y))
    return float(np.max(ratio))


def _scaled_gaussians(spec, n, rng):
    g = rng.normal(size=(n, spec.N))
    c = np.exp(rng.uniform(-3.0, 3.0, size=n))
    return np.einsum("nij,nj->ni", spec.exp_E(np.log(c)), g)


def projection_ratio(spec: ExponentSpec, x, j: int) -> float:
    """``tau_E(xbar_j) / tau_E(x)`` where ``xbar_j`` is the ``W_j`` component."""
    x = np.asarray(x, dtype=float)
    t = tau(spec, x)
    if t == 0:
        raise DomainError("projection ratio is undefined at the origin")
    return tau(spec, project_invariant(spec, x, j)) / t


def dyadic_tau_profile(spec: ExponentSpec, n_max: int):
    """Rows ``(n, min_i tau(<i 2^-n>), tau(<2^-n>))`` for ``n = 1..n_max``.

    ``<c>`` is the constant vector ``(c, ..., c)``.
    """
    if not 1 <= n_max <= 22:
        raise DomainError("n_max must lie in 1..22")
    ones = np.ones(spec.N)
    c = np.arange(1, 2 ** n_max + 1) / 2.0 ** n_max
    t = tau_on_ray(spec, ones, c)
    rows = []
    for n in range(1, n_max + 1):
        stride = 2 ** (n_max - n)
        level = t[stride - 1::stride]
        rows.append((n, float(level.min()), float(level[0])))
    return rows


def select_dyadic_levels(rows, threshold: float):
    """Levels whose min/first ratio exceeds ``threshold``."""
    return [n for n, m, first in rows if first > 0 and m / first > threshold]


def holder_envelope(spec: ExponentSpec, x, tol: float = 1e-10):
    """Shape-only envelope ``||x||^{1/a_j} |ln ||x|| |^{-+(l_j - 1)/a_j}`` for ``x`` in one ``W_j``."""
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x))
    if not 0.0 < r < 1.0:
        raise DomainError("envelope needs 0 < ||x|| < 1")
    for j, blk in enumerate(spec.blocks, start=1):
        if np.linalg.norm(project_invariant(spec, x, j) - x) <= tol * r:
            power = (blk.size_l - 1) / blk.a
            base = r ** (1.0 / blk.a)
            lg = abs(math.log(r))
            return base * lg ** (-power), base * lg ** power
    raise DomainError("x does not lie in a single invariant subspace")


def norm_window_exponents(spec: ExponentSpec):
    """Exponents ``(1/(a_1 - delta), 1/(a_p + delta))`` with ``delta = a_1 / 2``."""
    d = spec.a[0] / 2.0
    return 1.0 / (spec.a[0] - d), 1.0 / (spec.a[-1] + d)


# ---------------------------------------------------------------- balls
def unit_sphere_sample(spec: ExponentSpec, count: int, rng) -> np.ndarray:
    """Points of ``S_E``: polar directions of Gaussian samples."""
    g = rng.normal(size=(count, spec.N))
    return polar_decompose(spec, g).direction


def _ball_box(spec: ExponentSpec, rng) -> np.ndarray:
    """Half-widths of a box in canonical coordinates containing ``B_E(1)``."""
    l = unit_sphere_sample(spec, 2000, rng) @ spec.P_inv.T
    t = np.exp(np.linspace(-12.0, 0.0, 61))
    pts = np.einsum("tij,nj->tni", spec.exp_D(np.log(t)), l)
    return 1.3 * np.abs(pts).reshape(-1, spec.N).max(axis=0)


def sample_ball(spec: ExponentSpec, radius: float, count: int, rng, center=None, max_rounds: int = 200):
    """Uniform points of ``center + B_E(radius)`` by rejection from a box."""
    if radius <= 0:
        raise DomainError("ball radius must be positive")
    rng = np.random.default_rng(rng)
    box = _ball_box(spec, rng)
    scale = spec.exp_E(math.log(radius))
    got = []
    have = 0
    for _ in range(max_rounds):
        u = rng.uniform(-1.0, 1.0, size=(max(4 * count, 256), spec.N)) * box
        x = u @ spec.P.T
        keep = x[tau(spec, x) <= 1.0]
        got.append(keep)
        have += len(keep)
        if have >= count:
            break
    else:
        raise NumericError("rejection sampling of the ball did not produce enough points")
    pts = np.concatenate(got)[:count] @ scale.T
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts


def max_norm_on_sphere(spec: ExponentSpec, sample_count: int = 4000, rng=None) -> float:
    """Sampled ``max{||x|| : x in S_E}``."""
    rng = np.random.default_rng(rng)
    return float(np.linalg.norm(unit_sphere_sample(spec, sample_count, rng), axis=1).max())


def ball_extent(spec: ExponentSpec, r: float, sample_count: int = 4000, rng=None, _dirs=None) -> float:
    """Sampled ``K(r) = max{||x|| : tau_E(x) <= r}``."""
    rng = np.random.default_rng(rng)
    dirs = unit_sphere_sample(spec, sample_count, rng) if _dirs is None else _dirs
    t = r * np.exp(np.linspace(-8.0, 0.0, 33))
    pts = np.einsum("tij,nj->tni", spec.exp_E(np.log(t)), dirs)
    return float(np.linalg.norm(pts, axis=2).max())
