"""Fixed quadrature rules: Gauss-Legendre panels and sphere rules."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import roots_jacobi


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(bounds, n: int = 10):
    """Nodes and weights of composite Gauss-Legendre on consecutive panels.

    ``bounds`` is an increasing 1-D array of panel edges.  Returns flat arrays
    ordered panel by panel.
    """
    bounds = np.asarray(bounds, dtype=float)
    x, w = gauss_legendre(n)
    lo, hi = bounds[:-1, None], bounds[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * x
    weights = half * w
    return nodes.ravel(), weights.ravel()


def sphere_area(N: int) -> float:
    return float(2.0 * np.pi ** (N / 2.0) / gamma_fn(N / 2.0))


def _full_sphere(N: int, M: int):
    if N == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if N == 2:
        th = (np.arange(2 * M) + 0.5) * np.pi / M
        return np.column_stack([np.cos(th), np.sin(th)]), np.full(2 * M, np.pi / M)
    alpha = (N - 3) / 2.0
    t, wt = roots_jacobi(M, alpha, alpha)
    sub, wsub = _full_sphere(N - 1, M)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    pts = np.concatenate([t[:, None, None].repeat(len(sub), 1), s[:, None, None] * sub[None]], axis=2)
    w = wt[:, None] * wsub[None, :]
    return pts.reshape(-1, N), w.ravel()


@lru_cache(maxsize=64)
def sphere_rule(N: int, M: int, half: bool = True):
    """Quadrature rule on the Euclidean unit sphere ``S^{N-1}``.

    ``M`` controls the resolution (points per half great circle).  With
    ``half=True`` only one representative of each antipodal pair is kept and
    its weight doubled, which integrates even functions exactly as the full
    rule does.
    """
    if N < 1:
        raise ValueError("dimension must be positive")
    M = max(2, int(M) + (int(M) % 2))
    if N == 1:
        pts, w = (np.array([[1.0]]), np.array([2.0])) if half else _full_sphere(1, M)
    elif N == 2 and half:
        th = (np.arange(M) + 0.5) * np.pi / M
        pts, w = np.column_stack([np.cos(th), np.sin(th)]), np.full(M, 2.0 * np.pi / M)
    else:
        pts, w = _full_sphere(N, M)
        if half:
            keep = pts[:, 0] > 0
            pts, w = pts[keep], 2.0 * w[keep]
    pts = np.ascontiguousarray(pts)
    pts.setflags(write=False)
    w.setflags(write=False)
    return pts, w
