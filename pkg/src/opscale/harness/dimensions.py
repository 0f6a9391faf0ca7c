"""Hausdorff/packing dimension formulas driven by the H-vector."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DomainError
from ..exponent import HVector

LEVEL_SET_BOUNDARY = "indeterminate"


@dataclass
class DimensionReport:
    H: tuple
    d: float
    range_dim: float
    graph_dim: float
    level_set_dim: Optional[float]
    level_set_status: str  # "value", "empty" or "indeterminate"
    branch: int  # k selected for the graph formula, 0 when sum 1/H <= d

    def to_dict(self) -> dict:
        return {"H": list(self.H), "d": self.d, "range_dim": self.range_dim, "graph_dim": self.graph_dim,
                "level_set_dim": self.level_set_dim, "level_set_status": self.level_set_status,
                "branch": self.branch}


def _coerce(H) -> np.ndarray:
    if isinstance(H, HVector):
        return H.as_array()
    return HVector(tuple(H)).as_array()


def _branch(H: np.ndarray, d: float) -> int:
    """Index ``k`` with ``sum_{j<k} 1/H_j <= d < sum_{j<=k} 1/H_j`` (0 if none)."""
    cum = np.cumsum(1.0 / H)
    for k in range(1, len(H) + 1):
        lower = cum[k - 2] if k > 1 else 0.0
        if lower <= d < cum[k - 1]:
            return k
    return 0


def graph_value(H: np.ndarray, d: float, k: int) -> float:
    N = len(H)
    Hk = H[k - 1]
    return float(np.sum(Hk / H[:k]) + N - k + (1.0 - Hk) * d)


def level_value(H: np.ndarray, d: float, k: int) -> float:
    N = len(H)
    Hk = H[k - 1]
    return float(np.sum(Hk / H[:k]) + N - k - Hk * d)


def dimensions(H, d: float) -> DimensionReport:
    """Range, graph and level-set dimensions for an ``R^d``-valued field.

    ``d`` may be any positive real so that continuity across branches can be
    probed; the level-set value is withheld when ``sum 1/H = d``.
    """
    Harr = _coerce(H)
    if not d > 0:
        raise DomainError("d must be positive")
    total = float(np.sum(1.0 / Harr))
    range_dim = min(float(d), total)
    k = _branch(Harr, d)
    graph = total if k == 0 else graph_value(Harr, d, k)
    if total > d:
        level, status = level_value(Harr, d, k), "value"
    elif total < d:
        level, status = None, "empty"
    else:
        level, status = None, LEVEL_SET_BOUNDARY
    return DimensionReport(tuple(float(h) for h in Harr), float(d), range_dim, graph, level, status, k)


def boundary_continuity(H, eps: float = 1e-9) -> float:
    """Largest jump of the graph and level-set formulas across branch boundaries.

    For each boundary ``d* = sum_{j<=k} 1/H_j`` the one-sided formulas are
    evaluated at ``d*`` itself, which isolates the formula from the branch
    selection; ``eps`` probes the selected branch on both sides as well.
    """
    Harr = _coerce(H)
    cum = np.cumsum(1.0 / Harr)
    N = len(Harr)
    worst = 0.0
    for k in range(1, N + 1):
        b = float(cum[k - 1])
        left_g = graph_value(Harr, b, k)
        right_g = graph_value(Harr, b, k + 1) if k < N else b
        worst = max(worst, abs(left_g - right_g))
        if k < N:
            worst = max(worst, abs(level_value(Harr, b, k) - level_value(Harr, b, k + 1)))
        lo = dimensions(Harr, b - eps * b).graph_dim
        hi = dimensions(Harr, b + eps * b).graph_dim
        worst = max(worst, abs(hi - lo) - 2.0 * eps * b)
    return worst
