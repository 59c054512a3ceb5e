"""L-function of point patterns in a disc window and its signed deviation
from the Poisson line."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError

R_MAX = 5.0
GRID_NODES = 513
TIE_TOL = 1e-12


@dataclass(frozen=True)
class LEstimate:
    r: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        L = np.asarray(self.L, dtype=float)
        if r.ndim != 1 or r.shape != L.shape:
            raise InvalidInputError("r grid and L values must be 1-D of equal length")
        if np.any(np.diff(r) <= 0):
            raise InvalidInputError("r grid must be strictly increasing")
        if not np.all(np.isfinite(L)):
            raise InvalidInputError("L values must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "L", L)


def default_grid(r_max: float = R_MAX, nodes: int = GRID_NODES) -> np.ndarray:
    return np.linspace(0.0, r_max, nodes)


def isotropic_weights(points: np.ndarray, R: float):
    """Pair distances ``d[i, j]`` and edge weights for a disc window of radius R.

    The weight is the full angle divided by the angle of the circle about
    point i through point j that lies inside the window.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    rho = np.hypot(pts[:, 0], pts[:, 1])[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        cosv = (d * d + rho * rho - R * R) / (2.0 * d * rho)
        inside = 2.0 * np.arccos(np.clip(cosv, -1.0, 1.0))
        e = np.where(rho + d > R, 2.0 * math.pi / inside, 1.0)
    return d, e


def estimate_L(points, R: float, r_max: float = R_MAX, nodes: int = GRID_NODES) -> LEstimate:
    """Edge-corrected L-function of ``points`` observed in the disc ``B(o, R)``.

    Patterns with fewer than two points get ``L(r) = r``.
    """
    grid = default_grid(r_max, nodes)
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = pts.shape[0]
    if n < 2:
        return LEstimate(grid, grid.copy())
    d, e = isotropic_weights(pts, R)
    off = ~np.eye(n, dtype=bool)
    dv, ev = d[off], e[off]
    order = np.argsort(dv, kind="stable")
    cum = np.concatenate([[0.0], np.cumsum(ev[order])])
    k = np.searchsorted(dv[order], grid, side="right")
    K = math.pi * R * R / (n * (n - 1)) * cum[k]
    return LEstimate(grid, np.sqrt(K / math.pi))


def deviation_measure(est: LEstimate) -> float:
    """``r* - L(r*)`` at the grid radius where ``|r - L(r)|`` is largest.

    Positive values indicate regularity, negative values clustering; ties go
    to the smallest radius.
    """
    diff = est.r - est.L
    a = np.abs(diff)
    k = int(np.flatnonzero(a >= a.max() - TIE_TOL)[0])
    return float(diff[k])


def mean_L(estimates: Sequence[LEstimate]) -> LEstimate:
    """Pointwise mean of L-functions sharing one grid."""
    estimates = list(estimates)
    if not estimates:
        raise InvalidInputError("no L-functions to average")
    r = estimates[0].r
    for est in estimates[1:]:
        if est.r.shape != r.shape or not np.array_equal(est.r, r):
            raise InvalidInputError("L-functions are on different grids")
    return LEstimate(r, np.mean([est.L for est in estimates], axis=0))
