"""Inverse-probability estimates of plot totals with variance and intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import InvalidInputError, UndefinedIntervalError

# detected-tree count below which intervals use Student's t
T_THRESHOLD = 50


class MarkKind(Enum):
    STEM_COUNT = "N"
    BASAL_AREA = "G"

    def values(self, dbh_cm) -> np.ndarray:
        """Mark of each tree: 1 per stem, or its basal area in square metres."""
        d = np.asarray(dbh_cm, dtype=float)
        if self is MarkKind.STEM_COUNT:
            return np.ones_like(d)
        return math.pi * d * d / 40000.0


def _validate(marks, probs, what="probability"):
    m = np.asarray(marks, dtype=float).ravel()
    p = np.asarray(probs, dtype=float).ravel()
    if m.shape != p.shape:
        raise InvalidInputError("marks and probabilities differ in length")
    if np.any(~(p > 0)) or np.any(p > 1):
        raise InvalidInputError(f"every {what} must lie in (0, 1]")
    return m, p


def ht_estimate(marks: Sequence[float], probs: Sequence[float]) -> float:
    """Sum of marks of detected trees, each divided by its detection probability."""
    m, p = _validate(marks, probs)
    return float(np.sum(m / p))


def ht_variance(marks: Sequence[float], probs: Sequence[float]) -> float:
    """Unbiased variance estimate, treating detections as independent given
    the closer trees."""
    m, p = _validate(marks, probs)
    return float(np.sum((1.0 / p**2 - 1.0 / p) * m * m))


def critical_value(level: float, n_detected: int, threshold: int = T_THRESHOLD) -> float:
    if not 0 < level < 1:
        raise InvalidInputError("confidence level must lie in (0, 1)")
    if n_detected < 1:
        raise UndefinedIntervalError("no detected trees")
    upper = 0.5 + 0.5 * level
    if n_detected < threshold:
        if n_detected < 2:
            raise UndefinedIntervalError("a t interval needs at least two detected trees")
        return float(stats.t.ppf(upper, n_detected - 1))
    return float(stats.norm.ppf(upper))


def confidence_interval(
    tau: float, var: float, n_detected: int, level: float, threshold: int = T_THRESHOLD
) -> Tuple[float, float]:
    """Symmetric interval ``tau -+ q * sqrt(var)``."""
    if var < 0:
        raise InvalidInputError("variance must be non-negative")
    q = critical_value(level, n_detected, threshold)
    half = q * math.sqrt(var)
    return tau - half, tau + half


def weighted_estimate(marks: Sequence[float], weights: Sequence[float]) -> float:
    """Plug-in estimate with one visibility weight per detected tree."""
    m, w = _validate(marks, weights, "weight")
    return float(np.sum(m / w))


def per_hectare(total: float, R: float) -> float:
    if not R > 0:
        raise InvalidInputError("window radius must be positive")
    return total * 10000.0 / (math.pi * R * R)


@dataclass
class EstimateResult:
    tau_hat: float
    var_hat: float
    n_detected: int
    ci: list = field(default_factory=list)  # (level, lo, hi)

    @classmethod
    def compute(cls, marks, probs, levels=(0.90, 0.95, 0.99), threshold: int = T_THRESHOLD):
        """Point estimate and variance; intervals that are undefined for the
        detected count are left out."""
        tau = ht_estimate(marks, probs)
        var = ht_variance(marks, probs)
        n = int(np.size(marks))
        ci = []
        for level in levels:
            try:
                lo, hi = confidence_interval(tau, var, n, level, threshold)
            except UndefinedIntervalError:
                continue
            ci.append((level, lo, hi))
        return cls(tau, var, n, ci)
