"""Experiment configuration, read from a YAML file.

Example::

    seed: 2019
    out: results
    intensities: [500, 1000, 1500]
    dg_pairs: [[6, 3], [12, 12], [15, 20], [21, 35]]
    datasets:
      - name: Poisson
        process: poisson
        plots_per_intensity: 200
      - name: Cluster 4
        process: lgcp
        range: 4
        estimators: [HT, detected]
    conditions: [full, centre, any]
    estimators: [HT, OO, Kuronen, detected]
    kuronen_conditions: [full, centre]
    marks: [N, G]
    ci_levels: [0.90, 0.95, 0.99]

Keys left out take the defaults of :class:`ExperimentConfig`.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional, Tuple

import yaml

from ..errors import InvalidInputError

ESTIMATORS = ("HT", "OO", "Kuronen", "detected")
CONDITIONS = ("full", "centre", "any")
MARKS = ("N", "G")
PROCESSES = ("poisson", "nonoverlapping", "gibbs", "lgcp")
POLICIES = ("skip", "abort")


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    process: str
    plots_per_intensity: int = 200
    hardcore: float = 0.0
    range: float = 0.0
    scaling: str = "sqrt2nu"
    estimators: Optional[Tuple[str, ...]] = None  # overrides the experiment list

    def __post_init__(self):
        if self.process not in PROCESSES:
            raise InvalidInputError(f"unknown process {self.process!r}")
        if self.plots_per_intensity <= 0:
            raise InvalidInputError("plots_per_intensity must be positive")
        if self.process == "gibbs" and not self.hardcore > 0:
            raise InvalidInputError(f"dataset {self.name!r} needs a positive hardcore distance")
        if self.process == "lgcp" and not self.range > 0:
            raise InvalidInputError(f"dataset {self.name!r} needs a positive range")
        if self.estimators is not None:
            _check_subset(self.estimators, ESTIMATORS, "estimator")


def _check_subset(values, allowed, what):
    for v in values:
        if v not in allowed:
            raise InvalidInputError(f"unknown {what} {v!r}; expected one of {', '.join(allowed)}")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    datasets: Tuple[DatasetConfig, ...]
    out: str = "results"
    intensities: Tuple[float, ...] = tuple(float(v) for v in range(500, 5001, 500))
    dg_pairs: Tuple[Tuple[float, float], ...] = ((6, 3), (12, 12), (15, 20), (21, 35))
    plot_radius: float = 10.0
    conditions: Tuple[str, ...] = CONDITIONS
    estimators: Tuple[str, ...] = ESTIMATORS
    kuronen_conditions: Tuple[str, ...] = ("full", "centre")
    marks: Tuple[str, ...] = MARKS
    ci_levels: Tuple[float, ...] = (0.90, 0.95, 0.99)
    t_threshold: int = 50
    area_tol: float = 1e-4
    degenerate_policy: str = "skip"
    threads: int = 1

    def __post_init__(self):
        if not self.datasets:
            raise InvalidInputError("at least one dataset is required")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise InvalidInputError("dataset names must be unique")
        if not self.intensities or any(v <= 0 for v in self.intensities):
            raise InvalidInputError("intensities must be positive")
        if not self.dg_pairs or any(d <= 0 or g <= 0 for d, g in self.dg_pairs):
            raise InvalidInputError("D/G pairs must be positive")
        _check_subset(self.conditions, CONDITIONS, "condition")
        _check_subset(self.kuronen_conditions, CONDITIONS, "condition")
        _check_subset(self.estimators, ESTIMATORS, "estimator")
        _check_subset(self.marks, MARKS, "mark")
        if any(not 0 < lv < 1 for lv in self.ci_levels):
            raise InvalidInputError("confidence levels must lie in (0, 1)")
        if self.degenerate_policy not in POLICIES:
            raise InvalidInputError(f"degenerate_policy must be one of {', '.join(POLICIES)}")
        if self.threads < 1:
            raise InvalidInputError("threads must be at least 1")
        if not self.plot_radius > 0:
            raise InvalidInputError("plot_radius must be positive")

    def estimators_for(self, ds: DatasetConfig) -> Tuple[str, ...]:
        return ds.estimators if ds.estimators is not None else self.estimators

    def to_dict(self) -> dict:
        d = asdict(self)
        d["datasets"] = [asdict(x) for x in self.datasets]
        return d

    def digest(self) -> str:
        """Hash of everything that affects results (not output location or threads)."""
        d = self.to_dict()
        d.pop("out")
        d.pop("threads")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


def _tuple(v):
    if isinstance(v, (list, tuple)):
        return tuple(_tuple(x) for x in v)
    return v


def config_from_dict(raw: dict, **overrides) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise InvalidInputError("configuration must be a mapping")
    raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise InvalidInputError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    if "seed" not in raw:
        raise InvalidInputError("configuration needs a seed")
    ds_known = {f.name for f in fields(DatasetConfig)}
    datasets = []
    for item in raw.get("datasets") or []:
        if not isinstance(item, dict):
            raise InvalidInputError("each dataset must be a mapping")
        bad = set(item) - ds_known
        if bad:
            raise InvalidInputError(f"unknown dataset keys: {', '.join(sorted(bad))}")
        item = {k: _tuple(v) for k, v in item.items()}
        datasets.append(DatasetConfig(**item))
    kw = {k: _tuple(v) for k, v in raw.items() if k != "datasets"}
    kw["datasets"] = tuple(datasets)
    kw["seed"] = int(kw["seed"])
    if "intensities" in kw:
        kw["intensities"] = tuple(float(v) for v in kw["intensities"])
    return ExperimentConfig(**kw)


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise InvalidInputError(f"cannot parse {path}: {exc}") from None
    return config_from_dict(raw or {}, **overrides)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
