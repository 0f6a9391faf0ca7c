"""The two-dimensional Jordan-cell exponent ``E = [[a, 0], [1, a]]``.

Here ``t^E = t^a [[1, 0], [ln t, 1]]`` and every nonzero point can be written
``y(s, theta, w) = (-1)^w (s^a / alpha(theta)) (1, theta + ln s)`` with
``tau_E(y) = s``, where ``alpha(theta) = int_0^1 t^{a-1} sqrt(1 + (theta + ln t)^2) dt``.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .. import quasimetric as qm
from ..errors import DomainError
from ..exponent import CELL, ExponentSpec, JordanBlock


def jordan_spec(a: float) -> ExponentSpec:
    return ExponentSpec((JordanBlock(CELL, float(a), 2),))


def alpha_theta(a: float, theta: float) -> float:
    """``alpha(theta)``, computed as ``int_0^inf e^{-a u} sqrt(1 + (theta - u)^2) du``."""
    if not a > 1:
        raise DomainError("a must exceed 1")
    f = lambda u: math.exp(-a * u) * math.sqrt(1.0 + (theta - u) ** 2)
    kw = dict(epsabs=1e-14, epsrel=1e-12, limit=400)
    if theta > 0:
        v1, _ = quad(f, 0.0, theta, **kw)
        v2, _ = quad(f, theta, math.inf, **kw)
        return v1 + v2
    return quad(f, 0.0, math.inf, **kw)[0]


def alpha_argmin(a: float) -> tuple[float, float]:
    """``(theta_0, alpha(theta_0))`` by golden-section search; ``alpha`` is convex."""
    res = minimize_scalar(lambda t: alpha_theta(a, t), bracket=(-2.0, 0.0, 2.0), method="golden",
                          tol=1e-10)
    return float(res.x), float(res.fun)


def y_point(a: float, s: float, theta: float, w: int = 0) -> np.ndarray:
    return (-1.0) ** w * (s ** a / alpha_theta(a, theta)) * np.array([1.0, theta + math.log(s)])


CURVES = ("i", "ii", "iii")


def _curve_point(a, curve, s, c, theta):
    if curve == "i":
        th = -math.log(s) + c
        return (s ** a / alpha_theta(a, th)) * np.array([1.0, c])
    if curve == "ii":
        return np.array([0.0, a * s ** a])
    return y_point(a, s, theta)


def _predicted(a, curve, r):
    lg = abs(math.log(r))
    if curve == "i":
        return r ** (1 / a) * lg ** (1 / a)
    if curve == "ii":
        return a ** (-1 / a) * r ** (1 / a)
    return r ** (1 / a) * lg ** (-1 / a)


def example62_curves(a: float, curve: str, y_norms, c: float = 0.0, theta: float = 0.0):
    """Rows ``(||y||, tau_E(y), predicted, ratio)`` along one of three curve families.

    (i) ``theta = -ln s + c``; (ii) the vertical axis ``y = (0, a s^a)``;
    (iii) fixed ``theta``.  ``tau_E`` comes from the general polar solver.
    """
    if curve not in CURVES:
        raise DomainError(f"curve must be one of {CURVES}")
    spec = jordan_spec(a)
    rows = []
    for r in np.asarray(y_norms, dtype=float):
        if not 0 < r < 1:
            raise DomainError("curve norms must lie in (0, 1)")
        g = lambda ls: math.log(np.linalg.norm(_curve_point(a, curve, math.exp(ls), c, theta))) - math.log(r)
        lo, hi = -5.0, 0.0
        while g(lo) > 0:
            lo *= 2.0
        while g(hi) < 0:
            hi += 1.0
        s = math.exp(brentq(g, lo, hi, xtol=1e-14, rtol=1e-14))
        y = _curve_point(a, curve, s, c, theta)
        t = qm.tau(spec, y)
        pred = _predicted(a, curve, float(np.linalg.norm(y)))
        rows.append((float(np.linalg.norm(y)), t, pred, t / pred))
    return rows


def last_decade_slope(rows) -> float:
    """Slope of ``log ratio`` against ``log ||y||`` over the smallest decade of norms."""
    r = np.array([row[0] for row in rows])
    ratio = np.array([row[3] for row in rows])
    keep = r <= r.min() * 10.0 * (1 + 1e-12)
    if keep.sum() < 2:
        keep = np.argsort(r)[:2]
    return float(np.polyfit(np.log(r[keep]), np.log(ratio[keep]), 1)[0])
