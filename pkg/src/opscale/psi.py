"""E'-homogeneous spectral densities and their certification."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import quasimetric as qm
from .errors import CertificationError, DomainError
from .exponent import ExponentSpec

TAU_DUAL = "tau_dual"
CUSTOM = "custom"

HOMOGENEITY_TOL = 1e-7
SYMMETRY_TOL = 1e-12


@dataclass(eq=False)
class HomogeneousPsi:
    """A positive, symmetric function with ``psi(r^{E'} x) = r psi(x)``.

    ``evaluator`` maps an ``(n, N)`` array of frequencies to ``n`` values.
    """

    variant: str
    exponent: ExponentSpec
    evaluator: Optional[Callable] = None
    name: str = ""
    m_psi: Optional[float] = None
    M_psi: Optional[float] = None
    certified: bool = False
    exponent_dual: ExponentSpec = field(init=False)

    def __post_init__(self):
        if self.variant not in (TAU_DUAL, CUSTOM):
            raise DomainError(f"unknown psi variant {self.variant!r}")
        if self.variant == CUSTOM and self.evaluator is None:
            raise DomainError("custom psi requires an evaluator")
        self.exponent_dual = self.exponent.transpose()

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        pts = xi[None, :] if single else xi
        if self.variant == TAU_DUAL:
            out = qm.tau(self.exponent_dual, pts)
        else:
            out = np.asarray(self.evaluator(pts), dtype=float).reshape(len(pts))
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        d = {"variant": self.variant}
        if self.name:
            d["name"] = self.name
        return d


def make_tau_dual_psi(spec: ExponentSpec) -> HomogeneousPsi:
    """``psi = tau_{E'}``; equal to one on its own unit sphere, so ``m = M = 1``."""
    return HomogeneousPsi(TAU_DUAL, spec, name=TAU_DUAL, m_psi=1.0, M_psi=1.0)


def make_custom_psi(spec: ExponentSpec, evaluator: Callable, name: str = "custom") -> HomogeneousPsi:
    """Wrap a user evaluator; call :func:`certify` before building a model."""
    return HomogeneousPsi(CUSTOM, spec, evaluator=evaluator, name=name)


@dataclass
class CertificationReport:
    passed: bool
    m_psi: float
    M_psi: float
    max_homogeneity_error: float
    max_symmetry_error: float
    min_value: float
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "m_psi": self.m_psi,
            "M_psi": self.M_psi,
            "max_homogeneity_error": self.max_homogeneity_error,
            "homogeneity_tol": HOMOGENEITY_TOL,
            "max_symmetry_error": self.max_symmetry_error,
            "symmetry_tol": SYMMETRY_TOL,
            "min_value": self.min_value,
            "sample_count": self.sample_count,
        }


def _angles_to_unit(theta: np.ndarray, N: int) -> np.ndarray:
    """Hyperspherical angles (..., N-1) to unit vectors (..., N)."""
    out = np.ones(theta.shape[:-1] + (N,))
    s = np.ones(theta.shape[:-1])
    for k in range(N - 1):
        out[..., k] = s * np.cos(theta[..., k])
        s = s * np.sin(theta[..., k])
    out[..., N - 1] = s
    return out


def _unit_to_angles(u: np.ndarray) -> np.ndarray:
    N = u.shape[-1]
    th = np.zeros(u.shape[:-1] + (N - 1,))
    for k in range(N - 1):
        rest = np.linalg.norm(u[..., k:], axis=-1)
        th[..., k] = np.arccos(np.clip(u[..., k] / np.where(rest > 0, rest, 1.0), -1.0, 1.0))
    if N >= 2:
        th[..., N - 2] = np.arctan2(u[..., N - 1], u[..., N - 2])
    return th


def _lockstep_nelder_mead(fun, x0: np.ndarray, step: float = 0.3, iters: int = 200) -> np.ndarray:
    """Minimize ``fun`` from many starts at once; returns the best values per start.

    ``fun`` maps (m, d) points to m values.  Every simplex advances one
    Nelder-Mead step per iteration, so each iteration costs a few batched
    evaluations.
    """
    m, d = x0.shape
    simplex = np.repeat(x0[:, None, :], d + 1, axis=1)
    for k in range(d):
        simplex[:, k + 1, k] += step
    vals = fun(simplex.reshape(-1, d)).reshape(m, d + 1)
    rows = np.arange(m)
    for _ in range(iters):
        order = np.argsort(vals, axis=1)
        simplex = np.take_along_axis(simplex, order[:, :, None], axis=1)
        vals = np.take_along_axis(vals, order, axis=1)
        centroid = simplex[:, :-1].mean(axis=1)
        worst = simplex[:, -1]
        xr = centroid + (centroid - worst)
        fr = fun(xr)
        best, second, fw = vals[:, 0], vals[:, -2], vals[:, -1]
        expand = fr < best
        xe = centroid + 2.0 * (centroid - worst)
        fe = np.full(m, np.inf)
        if expand.any():
            fe[expand] = fun(xe[expand])
        accept_r = (fr < second) & ~(expand & (fe < fr))
        accept_e = expand & (fe < fr)
        contract = ~(accept_r | accept_e)
        xc = centroid + 0.5 * (worst - centroid)
        fc = np.full(m, np.inf)
        if contract.any():
            fc[contract] = fun(xc[contract])
        accept_c = contract & (fc < fw)
        shrink = contract & ~accept_c
        new_pt = np.where(accept_e[:, None], xe, np.where(accept_r[:, None], xr, xc))
        new_val = np.where(accept_e, fe, np.where(accept_r, fr, fc))
        upd = accept_e | accept_r | accept_c
        simplex[rows[upd], -1] = new_pt[upd]
        vals[rows[upd], -1] = new_val[upd]
        if shrink.any():
            idx = rows[shrink]
            simplex[idx, 1:] = simplex[idx, :1] + 0.5 * (simplex[idx, 1:] - simplex[idx, :1])
            vals[idx, 1:] = fun(simplex[idx, 1:].reshape(-1, d)).reshape(len(idx), d)
        if np.max(vals[:, -1] - vals[:, 0]) < 1e-12 * max(1.0, np.max(np.abs(vals[:, 0]))):
            break
    return vals.min(axis=1)


def _extrema_on_sphere(psi: HomogeneousPsi, starts: int, rng) -> tuple[float, float]:
    dual = psi.exponent_dual
    N = dual.N

    def on_sphere(theta):
        u = _angles_to_unit(theta, N)
        return psi(qm.polar_decompose(dual, u).direction)

    if N == 1:
        v = psi(qm.polar_decompose(dual, np.array([[1.0], [-1.0]])).direction)
        return float(v.min()), float(v.max())
    g = rng.normal(size=(starts, N))
    theta0 = _unit_to_angles(g / np.linalg.norm(g, axis=1, keepdims=True))
    lo = _lockstep_nelder_mead(on_sphere, theta0)
    hi = -_lockstep_nelder_mead(lambda th: -on_sphere(th), theta0)
    return float(lo.min()), float(hi.max())


def certify(psi: HomogeneousPsi, sample_count: int = 1000, rng=None, starts: int = 64) -> CertificationReport:
    """Check homogeneity, symmetry and positivity, then compute ``m_psi``/``M_psi``.

    Raises :class:`CertificationError` naming the first failed property.
    """
    if sample_count < 1000:
        raise DomainError("certification needs at least 1000 samples")
    rng = np.random.default_rng(rng)
    dual = psi.exponent_dual
    N = dual.N
    x = rng.normal(size=(sample_count, N)) * np.exp(rng.uniform(-2.0, 2.0, size=(sample_count, 1)))
    r = np.exp(rng.uniform(np.log(0.05), np.log(20.0), size=sample_count))
    px = psi(x)
    if not np.all(np.isfinite(px)) or np.any(px <= 0):
        i = int(np.argmin(np.where(np.isfinite(px), px, -np.inf)))
        raise CertificationError("positivity", x[i].tolist())
    scaled = np.einsum("nij,nj->ni", dual.exp_E(np.log(r)), x)
    hom = np.abs(psi(scaled) - r * px) / (r * px)
    if np.max(hom) > HOMOGENEITY_TOL:
        i = int(np.argmax(hom))
        raise CertificationError("homogeneity", x[i].tolist(), f"r={r[i]:.6g}, relative error {hom[i]:.3g}")
    sym = np.abs(psi(-x) - px) / px
    if np.max(sym) > SYMMETRY_TOL:
        i = int(np.argmax(sym))
        raise CertificationError("symmetry", x[i].tolist(), f"relative error {sym[i]:.3g}")
    m, M = _extrema_on_sphere(psi, starts, rng)
    if not (0 < m <= M < np.inf):
        raise CertificationError("bounds", [m, M])
    psi.m_psi, psi.M_psi, psi.certified = m, M, True
    return CertificationReport(True, m, M, float(np.max(hom)), float(np.max(sym)), float(np.min(px)), sample_count)
