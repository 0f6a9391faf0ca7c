"""Variogram and covariance of an operator-scaling field by deterministic quadrature.

The variogram is ``gamma(h) = 2 int (1 - cos<h, xi>) psi(xi)^{-(2+Q)} dxi``.
Write ``E' = P' D~ P'^{-1}`` and parameterize frequencies as
``xi = P' r^{D~} w`` with ``w`` on the Euclidean unit sphere.  The Jacobian is
``|det P'| r^{Q-1} <w, D~ w>``, which is positive because the symmetric part of
every Jordan block of ``D~`` is positive definite when all real parts exceed
one.  Homogeneity gives ``psi(xi) = r psi(P' w)`` and the phase is
``<h, xi> = <r^A g, w>`` with ``A = D~^T`` and ``g = P'^T h``, so

    gamma(h) = 2 sum_m W_m int_R (1 - cos<e^{vA} g, w_m>) e^{-2v} dv,

with angular weights ``W_m = psi(P' w_m)^{-(2+Q)} <w_m, D~ w_m> |det P'| dS_m``.

The radial integral in ``v = ln r`` uses panels anchored where
``||e^{vA} g|| = 1``.  Above the anchor, panel edges sit at fixed levels of
``||e^{vA} g||`` so each panel spans a bounded phase change; past a cutoff the
cosine is dropped and the remaining ``e^{-2v}`` tail is added analytically.
Because every panel edge moves rigidly with ``g``, replacing ``h`` by
``c^E h`` shifts all nodes by ``ln c`` and the rule is exactly covariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from . import quasimetric as qm
from .errors import DomainError, QuadratureError
from .exponent import ExponentSpec
from .psi import HomogeneousPsi, certify, make_tau_dual_psi
from .quadrature import gauss_legendre, sphere_rule


@dataclass(frozen=True)
class QuadratureProfile:
    """Resolution of the variogram quadrature.

    ``angular`` is the number of nodes per half great circle, ``phase_cut``
    the phase level after which the cosine is dropped, ``low_eps`` the
    relative size of the discarded low-frequency tail.
    """

    name: str = "standard"
    angular: int = 128
    phase_cut: float = 400.0
    low_eps: float = 1e-12
    gl_nodes: int = 16
    lag_chunk: int = 16

    def angular_for(self, N: int) -> int:
        return self.angular if N <= 2 else max(8, self.angular // 4)

    def to_dict(self) -> dict:
        return {"name": self.name, "angular": self.angular, "phase_cut": self.phase_cut,
                "low_eps": self.low_eps, "gl_nodes": self.gl_nodes}


PROFILES = {
    "fast": QuadratureProfile("fast", 48, 150.0, 1e-10),
    "standard": QuadratureProfile("standard", 128, 400.0, 1e-12),
    "accurate": QuadratureProfile("accurate", 512, 3000.0, 1e-13),
}


def get_profile(profile) -> QuadratureProfile:
    if isinstance(profile, QuadratureProfile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise DomainError(f"unknown quadrature profile {profile!r}; choose from {sorted(PROFILES)}") from None


@dataclass(frozen=True)
class FrequencyBand:
    """Frequencies with ``tau_{E'}(xi)`` in ``(lo, hi]``."""

    lo: float = 0.0
    hi: float = math.inf

    def __post_init__(self):
        if not (0.0 <= self.lo < self.hi):
            raise DomainError(f"invalid band ({self.lo}, {self.hi}]")

    @property
    def is_full(self) -> bool:
        return self.lo == 0.0 and self.hi == math.inf

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": None if self.hi == math.inf else self.hi}


FULL_BAND = FrequencyBand()


@dataclass(eq=False)
class FieldModel:
    exponent: ExponentSpec
    psi: Optional[HomogeneousPsi] = None
    profile: QuadratureProfile = field(default_factory=QuadratureProfile)

    def __post_init__(self):
        if self.psi is None:
            self.psi = make_tau_dual_psi(self.exponent)
        if self.psi.exponent is not self.exponent:
            raise DomainError("psi was built for a different exponent")
        if not self.psi.certified and self.psi.variant != "tau_dual":
            certify(self.psi, 1000, rng=0)
        self.profile = get_profile(self.profile)

    @property
    def N(self) -> int:
        return self.exponent.N

    @property
    def Q(self) -> float:
        return self.exponent.Q

    @cached_property
    def dual(self) -> ExponentSpec:
        return self.psi.exponent_dual

    @cached_property
    def _A(self) -> np.ndarray:
        return self.dual.D.T

    @cached_property
    def _rates(self):
        A = self._A
        mu = float(np.linalg.eigvalsh(0.5 * (A + A.T)).min())
        lam = float(np.linalg.norm(A, 2))
        if mu <= 0:
            raise DomainError("symmetric part of the exponent is not positive definite")
        return mu, lam

    @cached_property
    def angular(self):
        """Angular nodes, weights ``W_m``, and ``kappa_m = tau_{E'}(P' w_m)``."""
        omega, dS = sphere_rule(self.N, self.profile.angular_for(self.N), True)
        Pd = self.dual.P
        pts = omega @ Pd.T
        psi_vals = self.psi(pts)
        jac = np.einsum("mi,ij,mj->m", omega, self.dual.D, omega)
        W = psi_vals ** (-(2.0 + self.Q)) * jac * abs(np.linalg.det(Pd)) * dS
        kappa = psi_vals if self.psi.variant == "tau_dual" else qm.tau(self.dual, pts)
        return omega, W, kappa

    @cached_property
    def _low_span(self) -> float:
        """Depth below the anchor past which the integrand is negligible."""
        eps = self.profile.low_eps
        d = 1.0
        while d < 1e4:
            if np.linalg.norm(self.dual.exp_D(-d), 2) ** 2 * math.exp(2 * d) <= eps:
                return d
            d *= 1.2
        raise QuadratureError("low-frequency cutoff not found", {"depth": d})

    @cached_property
    def _panel_width(self) -> float:
        bmax = max([abs(b.b) for b in self.dual.blocks] + [0.0])
        return 2.0 / max(self.exponent.a[-1] + bmax, 1.0)

    @cached_property
    def _levels(self) -> np.ndarray:
        """Log-levels of ``||e^{vA} g||`` used as upper panel edges."""
        mu, lam = self._rates
        dq = 3.0 * math.pi * mu / lam
        q = [1.0]
        while q[-1] < self.profile.phase_cut:
            q.append(min(q[-1] * math.exp(0.5), q[-1] + dq, self.profile.phase_cut))
        return np.log(np.array(q))

    def fingerprint(self) -> str:
        import hashlib
        import json
        blob = json.dumps({"exponent": self.exponent.to_dict(), "psi": self.psi.to_dict(),
                           "profile": self.profile.to_dict()}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # ------------------------------------------------------------ radial tools
    def _gvec(self, h: np.ndarray) -> np.ndarray:
        return h @ self.dual.P

    def _expA(self, v: np.ndarray, g: np.ndarray) -> np.ndarray:
        """``e^{vA} g`` with ``v`` of shape (L, K) and ``g`` of shape (L, N)."""
        ed = self.dual.exp_D(v)
        return np.einsum("lkji,lj->lki", ed, g)

    def _solve_levels(self, g: np.ndarray, target: np.ndarray) -> np.ndarray:
        """``v`` with ``ln ||e^{vA} g|| = target`` for each lag (rows) and level (columns)."""
        mu, lam = self._rates
        ln0 = np.log(np.linalg.norm(g, axis=1))[:, None]
        d = target[None, :] - ln0
        lo = np.where(d >= 0, d / lam, d / mu)
        hi = np.where(d >= 0, d / mu, d / lam)
        v = 0.5 * (lo + hi)
        for _ in range(100):
            ed = self.dual.exp_D(v)
            u = np.einsum("lkji,lj->lki", ed, g)
            Au = u @ self._A.T
            nu2 = np.einsum("lki,lki->lk", u, u)
            f = 0.5 * np.log(nu2) - target[None, :]
            slope = np.einsum("lki,lki->lk", u, Au) / nu2
            lo = np.where(f < 0, np.maximum(lo, v), lo)
            hi = np.where(f > 0, np.minimum(hi, v), hi)
            new = v - f / slope
            out = (new < lo) | (new > hi)
            new = np.where(out, 0.5 * (lo + hi), new)
            if np.max(np.abs(new - v)) <= 1e-14 * max(1.0, float(np.max(np.abs(v)))):
                return new
            v = new
        return v

    def _edges(self, g: np.ndarray) -> np.ndarray:
        """Panel edges (L, J+1): uniform panels below the anchor, level panels above."""
        lv = self._solve_levels(g, self._levels)
        span = self._low_span
        n_low = max(1, int(math.ceil(span / self._panel_width)))
        low = lv[:, :1] + np.linspace(-span, 0.0, n_low + 1)[None, :-1]
        return np.concatenate([low, lv], axis=1)

    def _radial(self, g: np.ndarray, kind: str, vlo=None, vhi=None, edges=None) -> np.ndarray:
        """``sum_m W_m int f(v, w_m) dv`` for each lag ``g`` (L, N).

        ``kind`` is ``"cos"`` for ``(1 - cos phi) e^{-2v}`` (with analytic tail)
        or ``"sq"`` for ``phi^2 e^{-2v}``.  ``vlo``/``vhi`` give per-direction
        limits in ``v`` as arrays of shape (L, M).
        """
        omega, W, _ = self.angular
        xg, wg = gauss_legendre(self.profile.gl_nodes)
        if edges is None:
            edges = self._edges(g)
        a, b = edges[:, :-1], edges[:, 1:]
        L = len(g)
        if vlo is None and vhi is None:
            half = 0.5 * (b - a)
            v = (0.5 * (a + b))[:, :, None] + half[:, :, None] * xg
            w = half[:, :, None] * wg
            v, w = v.reshape(L, -1), w.reshape(L, -1)
            u = self._expA(v, g)
            phi = u @ omega.T  # (L, K, M)
            f = _kernel(phi, kind) * (np.exp(-2.0 * v) * w)[:, :, None]
            total = f.sum(axis=1) @ W
            if kind == "cos":
                total = total + 0.5 * np.exp(-2.0 * edges[:, -1]) * W.sum()
            return total
        M = len(W)
        vlo = np.full((L, M), -np.inf) if vlo is None else vlo
        vhi = np.full((L, M), np.inf) if vhi is None else vhi
        ca = np.maximum(a[:, :, None], vlo[:, None, :])  # (L, J, M)
        cb = np.minimum(b[:, :, None], vhi[:, None, :])
        half = np.maximum(cb - ca, 0.0) * 0.5
        mid = 0.5 * (ca + cb)
        mid = np.where(half > 0, mid, a[:, :, None])
        v = mid[..., None] + half[..., None] * xg  # (L, J, M, n)
        u = np.einsum("ljmnki,lk->ljmni", self.dual.exp_D(v), g)
        phi = np.einsum("ljmni,mi->ljmn", u, omega)
        f = _kernel(phi, kind) * np.exp(-2.0 * v) * (half[..., None] * wg)
        per_m = f.sum(axis=(1, 3))  # (L, M)
        if kind == "cos":
            top = edges[:, -1:]
            start = np.maximum(top, vlo)
            tail = 0.5 * (np.exp(-2.0 * start) - np.exp(-2.0 * np.maximum(vhi, start)))
            per_m = per_m + tail
        return per_m @ W

    def _band_limits(self, band: FrequencyBand, L: int):
        if band.is_full:
            return None, None
        _, _, kappa = self.angular
        lo = np.log(band.lo / kappa) if band.lo > 0 else np.full(len(kappa), -np.inf)
        hi = np.log(band.hi / kappa) if band.hi < math.inf else np.full(len(kappa), np.inf)
        return np.broadcast_to(lo, (L, len(kappa))), np.broadcast_to(hi, (L, len(kappa)))


def _kernel(phi, kind):
    if kind == "cos":
        s = np.sin(0.5 * phi)
        return 2.0 * s * s
    return phi * phi


def _as_lags(model: FieldModel, h):
    h = np.asarray(h, dtype=float)
    single = h.ndim == 1
    if single:
        h = h[None, :]
    if h.ndim != 2 or h.shape[1] != model.N:
        raise DomainError(f"lags must have trailing dimension {model.N}")
    return h, single


def variogram_batch(model: FieldModel, h, band: FrequencyBand = FULL_BAND) -> np.ndarray:
    """``E(X(h) - X(0))^2`` restricted to ``band`` for an (n, N) array of lags."""
    h, _ = _as_lags(model, h)
    out = np.zeros(len(h))
    nz = np.flatnonzero(np.any(h != 0, axis=1))
    chunk = model.profile.lag_chunk if band.is_full else max(1, model.profile.lag_chunk // 8)
    for s in range(0, len(nz), chunk):
        idx = nz[s:s + chunk]
        g = model._gvec(h[idx])
        vlo, vhi = model._band_limits(band, len(idx))
        out[idx] = 2.0 * model._radial(g, "cos", vlo, vhi)
    if not np.all(np.isfinite(out)):
        raise QuadratureError("variogram quadrature produced non-finite values",
                              {"lags": h[~np.isfinite(out)].tolist()})
    return out


def variogram(model: FieldModel, h, band: FrequencyBand = FULL_BAND):
    h, single = _as_lags(model, h)
    out = variogram_batch(model, h, band)
    return float(out[0]) if single else out


def _unique_lags(lags: np.ndarray):
    """Sign-canonical unique rows and the inverse index (``gamma`` is even)."""
    first = np.argmax(lags != 0, axis=1)
    sgn = np.sign(lags[np.arange(len(lags)), first])
    sgn[sgn == 0] = 1.0
    canon = lags * sgn[:, None] + 0.0
    uniq, inv = np.unique(canon, axis=0, return_inverse=True)
    return uniq, inv.reshape(-1)


def covariance(model: FieldModel, s, t) -> float:
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    g = variogram_batch(model, np.stack([s, t, s - t]))
    return float(0.5 * (g[0] + g[1] - g[2]))


def covariance_matrix(model: FieldModel, points, band: FrequencyBand = FULL_BAND) -> np.ndarray:
    """Covariance of ``X`` (or its band component) on a point set.

    Each distinct lag is evaluated once; on grids this is a large saving.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    iu, ju = np.triu_indices(n, 1)
    lags = np.concatenate([pts, pts[ju] - pts[iu]])
    uniq, inv = _unique_lags(lags)
    gam = variogram_batch(model, uniq, band)[inv]
    gp, gd = gam[:n], gam[n:]
    C = np.empty((n, n))
    C[np.diag_indices(n)] = gp
    vals = 0.5 * (gp[iu] + gp[ju] - gd)
    C[iu, ju] = vals
    C[ju, iu] = vals
    return C


def comparability_ratio(model: FieldModel, h):
    """``gamma(h) / tau_E(h)^2``."""
    h, single = _as_lags(model, h)
    t = qm.tau(model.exponent, h)
    if np.any(t == 0):
        raise DomainError("comparability ratio is undefined at h = 0")
    r = variogram_batch(model, h) / t ** 2
    return float(r[0]) if single else r


def directional_slope(model: FieldModel, j: int, norms=None, direction=None) -> float:
    """Least-squares slope of ``log gamma`` against ``log ||h||`` for ``h`` in ``W_j``."""
    spec = model.exponent
    if not 1 <= j <= spec.p:
        raise DomainError(f"block index {j} outside 1..{spec.p}")
    if direction is None:
        direction = spec.P[:, spec.offsets[j - 1]]
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    norms = np.geomspace(1e-3, 1e-1, 9) if norms is None else np.asarray(norms, dtype=float)
    g = variogram_batch(model, norms[:, None] * e)
    return float(np.polyfit(np.log(norms), np.log(g), 1)[0])


# ----------------------------------------------------------- truncation
@dataclass(frozen=True)
class TruncationResult:
    lhs: float
    rhs: float
    ok: bool


def truncation_lhs(model: FieldModel, t, u: float) -> float:
    """``int_{tau_{E'}(xi) < u} <t, xi>^2 psi(xi)^{-(2+Q)} dxi``."""
    t = np.asarray(t, dtype=float)
    if not np.any(t):
        return 0.0
    _, _, kappa = model.angular
    g = model._gvec(t[None, :])
    vhi = np.log(u / kappa)[None, :]
    span = model._low_span
    top = float(vhi.max())
    # anchor the lower cutoff at the smaller of the band edge and the phase anchor
    anchor = float(model._solve_levels(g, np.array([0.0]))[0, 0])
    start = min(anchor, float(vhi.min())) - span
    n_pan = max(1, int(math.ceil((top - start) / model._panel_width)))
    edges = np.linspace(start, top, n_pan + 1)[None, :]
    return float(model._radial(g, "sq", None, vhi, edges=edges)[0])


def truncation_radius(model: FieldModel, sample_count: int = 4000, rng=0) -> float:
    """``r0 = sup{r : M K(r) <= 1}`` with ``M = max_{S_E} ||x||`` and
    ``K(r) = max{||x|| : tau_{E'}(x) <= r}``, both from samples."""
    rng = np.random.default_rng(rng)
    M = qm.max_norm_on_sphere(model.exponent, sample_count, rng)
    dirs = qm.unit_sphere_sample(model.dual, sample_count, rng)

    def excess(r):
        return M * qm.ball_extent(model.dual, r, _dirs=dirs) - 1.0

    lo, hi = -1.0, 1.0
    while excess(math.exp(lo)) > 0:
        lo -= 2.0
    while excess(math.exp(hi)) <= 0:
        hi += 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if excess(math.exp(mid)) <= 0:
            lo = mid
        else:
            hi = mid
    return math.exp(lo)


def truncation_check(model: FieldModel, t, u: float, r0: Optional[float] = None,
                     rtol: float = 1e-3) -> TruncationResult:
    """Compare the truncated second moment with ``(3/2) gamma(t)``."""
    t = np.asarray(t, dtype=float)
    if u <= 0:
        raise DomainError("u must be positive")
    if not np.any(t):
        return TruncationResult(0.0, 0.0, True)
    if r0 is None:
        r0 = truncation_radius(model)
    if qm.tau(model.exponent, t) * u > r0:
        raise DomainError(f"precondition tau_E(t) u <= r0 = {r0:.6g} violated")
    lhs = truncation_lhs(model, t, u)
    rhs = 1.5 * variogram(model, t)
    return TruncationResult(lhs, rhs, bool(lhs <= rhs * (1.0 + rtol)))
