"""Tree ordering, detection classification, detection probabilities and
benchmark visible-area weights for a single-scan circular plot."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import geom
from .errors import (
    DegenerateProbabilityError,
    DegenerateWeightError,
    InvalidInputError,
    InvalidPlotError,
)
from .geom import MorphTransform, PlanePoint, Shadows

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Tree:
    location: PlanePoint
    dbh: float  # cm
    tag: Any = None

    def __post_init__(self):
        if not (self.dbh > 0 and math.isfinite(self.dbh)):
            raise InvalidInputError(f"dbh must be positive, got {self.dbh}")

    @property
    def radius(self) -> float:
        """Stem disc radius in metres."""
        return self.dbh / 200.0


@dataclass(frozen=True)
class DetectionCondition:
    alpha: float

    def __post_init__(self):
        if not (-1.0 <= self.alpha <= 1.0):
            raise InvalidInputError(f"alpha must lie in [-1, 1], got {self.alpha}")

    @property
    def name(self) -> str:
        for key, val in PRESETS.items():
            if val.alpha == self.alpha:
                return key
        return f"alpha={self.alpha:g}"

    @classmethod
    def named(cls, name: str) -> "DetectionCondition":
        """A preset name (full, centre, any) or a numeric alpha."""
        if name in PRESETS:
            return PRESETS[name]
        try:
            alpha = float(name)
        except (TypeError, ValueError):
            raise InvalidInputError(f"unknown detection condition {name!r}") from None
        return cls(alpha)

    def transform(self, stem_radius: float) -> MorphTransform:
        return MorphTransform.from_alpha(self.alpha, stem_radius)


FULL = DetectionCondition(1.0)
CENTRE = DetectionCondition(0.0)
ANY = DetectionCondition(-1.0)
PRESETS = {"full": FULL, "centre": CENTRE, "any": ANY}


class OrderedPlot:
    """Trees of one plot sorted by distance from the scanner to the bark.

    Ties are broken by polar angle in ``[0, 2pi)`` and then by input index.
    ``order[k]`` is the input index of the k-th tree.
    """

    def __init__(self, trees: Sequence[Tree], R: float = 10.0):
        if not R > 0:
            raise InvalidInputError("window radius must be positive")
        trees = list(trees)
        x = np.array([t.location.x for t in trees], dtype=float)
        y = np.array([t.location.y for t in trees], dtype=float)
        rho = np.array([t.radius for t in trees], dtype=float)
        r = np.hypot(x, y)
        bad = np.flatnonzero(r <= rho)
        if bad.size:
            raise InvalidPlotError(f"stem disc of tree {int(bad[0])} covers the plot centre")
        ang = np.mod(np.arctan2(y, x), TWO_PI)
        order = np.lexsort((np.arange(len(trees)), ang, r - rho))
        self.R = float(R)
        self.order = order
        self.trees = tuple(trees[k] for k in order)
        self.x, self.y, self.rho, self.r = x[order], y[order], rho[order], r[order]
        self.dbh = 200.0 * self.rho
        self.angle = ang[order]
        self.shadows = Shadows(self.x, self.y, self.rho) if len(trees) else Shadows.empty()

    def __len__(self):
        return len(self.trees)

    @property
    def in_window(self) -> np.ndarray:
        """Trees whose centre lies in the window (the population being estimated)."""
        return self.r <= self.R


def order_trees(trees: Iterable[Tree], R: float = 10.0) -> OrderedPlot:
    return OrderedPlot(list(trees), R)


def plot_from_arrays(x, y, dbh, R: float = 10.0) -> OrderedPlot:
    return OrderedPlot(
        [Tree(PlanePoint(float(a), float(b)), float(d)) for a, b, d in zip(x, y, dbh)], R
    )


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


def classify_detection(plot: OrderedPlot, cond: DetectionCondition) -> np.ndarray:
    """Detection flag of every tree, in plot order.

    Tree i is detected unless its centre lies in the transformed union of
    the shadows of all closer trees, detected or not.
    """
    n = len(plot)
    if n == 0:
        return np.zeros(0, dtype=bool)
    sh = plot.shadows
    beta = abs(cond.alpha) * plot.rho
    earlier = np.tri(n, n, -1, dtype=bool)
    if cond.alpha >= 0:
        if cond.alpha == 0:
            hit = geom._in_shadow(plot.x, plot.y, sh)
        else:
            hit = geom._distance_to_shadow(plot.x, plot.y, sh) <= beta[:, None]
        return ~(hit & earlier).any(axis=1)
    # erosion: only points inside the plain union can be hidden
    inside = (geom._in_shadow(plot.x, plot.y, sh) & earlier).any(axis=1)
    detected = np.ones(n, dtype=bool)
    for i in np.flatnonzero(inside):
        detected[i] = not geom.eroded_membership((plot.x[i], plot.y[i]), sh[:i], beta[i])
    return detected


# ---------------------------------------------------------------------------
# Detection probabilities
# ---------------------------------------------------------------------------


def _check_probability(p, idx):
    if np.any(p <= 0):
        k = int(idx[np.flatnonzero(p <= 0)[0]])
        raise DegenerateProbabilityError(f"tree {k} is hidden at every angle of its circle")
    return p


def detection_probabilities(
    plot: OrderedPlot, cond: DetectionCondition, which: Optional[np.ndarray] = None
) -> np.ndarray:
    """Detection probability of each tree (plot order).

    ``which`` optionally restricts the computation to a boolean mask or
    index array; other entries are returned as NaN.
    """
    n = len(plot)
    out = np.full(n, np.nan)
    if n == 0:
        return out
    idx = np.arange(n) if which is None else np.asarray(which)
    if idx.dtype == bool:
        idx = np.flatnonzero(idx)
    if idx.size == 0:
        return out
    sh = plot.shadows
    beta = abs(cond.alpha) * plot.rho[idx]
    if cond.alpha >= 0:
        meas = np.empty(idx.size)
        for start in range(0, idx.size, 256):
            sl = slice(start, start + 256)
            rows = idx[sl]
            mask = np.arange(n)[None, :] < rows[:, None]
            meas[sl] = geom._dilated_measure(sh, plot.r[rows], beta[sl], mask=mask)
        out[idx] = 1.0 - meas / TWO_PI
    else:
        for k, i in enumerate(idx):
            if i == 0:
                out[i] = 1.0
                continue
            hz = geom.horizon_of(sh[:i])
            out[i] = 1.0 - geom._eroded_measure(hz, plot.r[i], beta[k]) / TWO_PI
    out[idx] = np.minimum(out[idx], 1.0)
    _check_probability(out[idx], idx)
    return out


def detection_probability(plot: OrderedPlot, i: int, cond: DetectionCondition) -> float:
    """Probability that tree ``i`` (plot order) is detected, given closer trees."""
    if not 0 <= i < len(plot):
        raise InvalidInputError(f"tree index {i} out of range")
    return float(detection_probabilities(plot, cond, np.array([i]))[i])


def detected_only_probabilities(
    trees: Sequence[Tree], cond: DetectionCondition, R: float = 10.0
):
    """Probabilities for field data where only detected trees are known.

    Shadows of undetected trees are missing, so for the full and centre
    conditions the probabilities are biased upwards.  Returns the ordered
    plot and its probabilities.
    """
    if cond.alpha >= 0:
        warnings.warn(
            "only detected trees are available: probabilities ignore the shadows of "
            "undetected trees and overstate detection under this condition",
            stacklevel=2,
        )
    plot = order_trees(trees, R)
    return plot, detection_probabilities(plot, cond)


# ---------------------------------------------------------------------------
# Visible-area weights
# ---------------------------------------------------------------------------


def _window_weight(plot: OrderedPlot, t: MorphTransform, tol: float) -> float:
    area = geom.morph_area(plot.shadows, t, plot.R, tol=tol)
    w = 1.0 - area / (math.pi * plot.R**2)
    if w <= 0:
        raise DegenerateWeightError("the whole window is hidden from the scanner")
    return min(w, 1.0)


def kuronen_weights(
    plot: OrderedPlot,
    cond: DetectionCondition,
    which: Optional[np.ndarray] = None,
    tol: float = 1e-4,
) -> np.ndarray:
    """Visible share of the window for each tree, using all shadows in the plot.

    Only the three named conditions are defined; the morphological radius is
    the tree's stem radius.
    """
    if cond.alpha not in (-1.0, 0.0, 1.0):
        raise InvalidInputError("visible-area weights are defined for full, centre and any only")
    n = len(plot)
    out = np.full(n, np.nan)
    idx = np.arange(n) if which is None else np.asarray(which)
    if idx.dtype == bool:
        idx = np.flatnonzero(idx)
    if idx.size == 0:
        return out
    if cond.alpha == 0:
        out[idx] = _window_weight(plot, MorphTransform.identity(), tol)
        return out
    keys, inverse = np.unique(plot.rho[idx], return_inverse=True)
    if cond.alpha > 0:
        area = geom.dilated_union_areas(plot.shadows, keys, plot.R)
    else:
        area = np.array([geom.morph_area(plot.shadows, cond.transform(k), plot.R, tol) for k in keys])
    w = 1.0 - area / (math.pi * plot.R**2)
    if np.any(w <= 0):
        raise DegenerateWeightError("the whole window is hidden from the scanner")
    out[idx] = np.minimum(w, 1.0)[inverse]
    return out


def kuronen_weight(plot: OrderedPlot, i: int, cond: DetectionCondition, tol: float = 1e-4) -> float:
    if not 0 <= i < len(plot):
        raise InvalidInputError(f"tree index {i} out of range")
    if len(plot) == 0:
        return 1.0
    return float(kuronen_weights(plot, cond, np.array([i]), tol)[i])


def oo_weight(plot: OrderedPlot, tol: float = 1e-4) -> float:
    """Visible share of the window, the same for every tree."""
    if len(plot) == 0:
        return 1.0
    return _window_weight(plot, MorphTransform.identity(), tol)


@dataclass
class DetectionRecord:
    """Per-tree detection outcome for one plot and condition (plot order)."""

    condition: DetectionCondition
    detected: np.ndarray
    probability: np.ndarray
    kuronen: np.ndarray = field(default=None)
    oo: Optional[float] = None


def detection_record(
    plot: OrderedPlot,
    cond: DetectionCondition,
    kuronen: bool = False,
    oo: bool = False,
    tol: float = 1e-4,
) -> DetectionRecord:
    """Classify, then evaluate probabilities and weights for detected trees only."""
    det = classify_detection(plot, cond)
    prob = detection_probabilities(plot, cond, det)
    kw = kuronen_weights(plot, cond, det, tol) if kuronen else None
    ow = oo_weight(plot, tol) if oo else None
    return DetectionRecord(cond, det, prob, kw, ow)
