"""Circular subplots centred on a triangular grid inside a rectangular plot."""
from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from ..errors import InvalidInputError
from .io import PlotRecord

ROWS = 12
LONG_ROW = 11
PITCH = 1.0
MIN_SIDE = 30.0


def grid_centres(cx: float, cy: float) -> np.ndarray:
    """126 points around ``(cx, cy)``: 12 rows ``sqrt(3)/2`` m apart holding
    11 and 10 points alternately at 1 m spacing, so every pair is at least
    1 m apart and the grid fits in a 10 m square."""
    dy = PITCH * math.sqrt(3.0) / 2.0
    pts = []
    for i in range(ROWS):
        y = cy + (i - 0.5 * (ROWS - 1)) * dy
        k = LONG_ROW if i % 2 == 0 else LONG_ROW - 1
        xs = cx + (np.arange(k) - 0.5 * (k - 1)) * PITCH
        pts.append(np.column_stack([xs, np.full(k, y)]))
    return np.vstack(pts)


def extract_subplots(
    rect: PlotRecord,
    width: float = 30.0,
    height: float = 30.0,
    origin: Tuple[float, float] = (0.0, 0.0),
    R: float = 10.0,
) -> List[PlotRecord]:
    """Cut circular plots of radius ``R`` around each grid centre.

    Coordinates are translated so each subplot centre is the origin; trees
    whose disc misses the subplot are dropped, as are trees whose disc
    covers the subplot centre.
    """
    if width < MIN_SIDE or height < MIN_SIDE:
        raise InvalidInputError(f"rectangle must be at least {MIN_SIDE} m on each side")
    centres = grid_centres(origin[0] + 0.5 * width, origin[1] + 0.5 * height)
    rho = rect.dbh / 200.0
    out = []
    for k, (gx, gy) in enumerate(centres):
        x = rect.x - gx
        y = rect.y - gy
        r = np.hypot(x, y)
        keep = (r - rho <= R) & (r > rho)
        idx = np.flatnonzero(keep)
        out.append(
            PlotRecord(
                plot_id=f"{rect.plot_id}/{k:03d}",
                tree_id=[rect.tree_id[i] for i in idx],
                x=x[idx],
                y=y[idx],
                dbh=rect.dbh[idx].copy(),
            )
        )
    return out
