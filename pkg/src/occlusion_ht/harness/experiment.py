"""Batch simulation and estimation with error, coverage and L-function tables."""
from __future__ import annotations

import functools
import logging
import math
import zlib
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .. import detect, sstats
from ..detect import DetectionCondition, OrderedPlot
from ..errors import (
    DegenerateProbabilityError,
    DegenerateWeightError,
    InvalidInputError,
    UndefinedIntervalError,
)
from ..estimate import MarkKind, confidence_interval, ht_estimate, ht_variance, per_hectare
from ..simulate import ProcessSpec, Variant, recover_weibull, simulate, task_rng
from .config import DatasetConfig, ExperimentConfig
from .io import fmt, read_table, write_table

log = logging.getLogger(__name__)

PLOT_COLUMNS = (
    "dataset", "intensity", "plot", "D", "G", "n_trees", "true_N", "true_G",
    "deviation", "attempts", "status",
)


def level_name(level: float) -> str:
    return f"ci{level * 100:g}"


def estimate_columns(levels: Sequence[float]) -> Tuple[str, ...]:
    cols = [
        "dataset", "intensity", "plot", "condition", "estimator", "mark",
        "estimate", "truth", "se", "n_detected",
    ]
    for lv in levels:
        cols += [level_name(lv) + "_lo", level_name(lv) + "_hi"]
    return tuple(cols)


@dataclass
class PlotOutcome:
    dataset: str
    intensity: float
    plot: int
    D: float
    G: float
    n_trees: int = 0
    true_N: float = 0.0  # per hectare
    true_G: float = 0.0  # m^2 per hectare
    deviation: float = float("nan")
    attempts: int = 0
    status: str = "ok"
    L: Optional[np.ndarray] = None
    rows: List[list] = field(default_factory=list)

    def plot_row(self):
        return [
            self.dataset, self.intensity, self.plot, self.D, self.G, self.n_trees,
            self.true_N, self.true_G, self.deviation, self.attempts, self.status,
        ]


@functools.lru_cache(maxsize=256)
def _weibull(D, G, N):
    return recover_weibull(D, G, N)


def dataset_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def process_spec(ds: DatasetConfig, intensity: float, D: float, G: float) -> ProcessSpec:
    return ProcessSpec(
        variant=Variant(ds.process),
        intensity=float(intensity),
        dbh=_weibull(float(D), float(G), float(intensity)),
        hardcore=ds.hardcore,
        range=ds.range,
        scaling=ds.scaling,
    )


def estimate_plot(
    plot: OrderedPlot,
    conditions: Sequence[str],
    estimators: Sequence[str],
    marks: Sequence[str],
    levels: Sequence[float],
    kuronen_conditions: Sequence[str] = ("full", "centre"),
    t_threshold: int = 50,
    area_tol: float = 1e-4,
    truth: Optional[Dict[str, float]] = None,
    detected_only: bool = False,
) -> List[list]:
    """Estimates for one plot, one row per condition, estimator and mark.

    Rows hold ``[condition, estimator, mark, estimate, truth, se, n_detected,
    lo, hi, ...]`` with totals expressed per hectare.  By default the plot is
    fully mapped.  With ``detected_only`` every tree in it counts as detected
    and only the HT and detected estimators are allowed.
    """
    if detected_only:
        extra = sorted(set(estimators) - {"HT", "detected"})
        if extra:
            raise InvalidInputError(
                f"estimators {', '.join(extra)} need a fully mapped plot"
            )
    R = plot.R
    scale = per_hectare(1.0, R)
    inside = plot.in_window
    oo = None
    rows = []
    for cname in conditions:
        cond = DetectionCondition.named(cname)
        if detected_only:
            use = inside.copy()
            prob = None
            if "HT" in estimators:
                prob = detect.detected_only_probabilities(plot.trees, cond, R)[1][use]
        else:
            use = detect.classify_detection(plot, cond) & inside
            prob = None
            if "HT" in estimators:
                prob = detect.detection_probabilities(plot, cond, use)[use]
        n_det = int(use.sum())
        kur = None
        if "Kuronen" in estimators and cname in kuronen_conditions:
            kur = detect.kuronen_weights(plot, cond, use, tol=area_tol)[use]
        if "OO" in estimators and oo is None:
            oo = detect.oo_weight(plot, tol=area_tol)
        for mname in marks:
            m = MarkKind(mname).values(plot.dbh[use])
            tv = None if truth is None else truth[mname]
            for est in estimators:
                se = None
                cis = [(None, None)] * len(levels)
                if est == "HT":
                    value = ht_estimate(m, prob)
                    var = ht_variance(m, prob)
                    se = math.sqrt(var) * scale
                    cis = []
                    for lv in levels:
                        try:
                            lo, hi = confidence_interval(value, var, n_det, lv, t_threshold)
                            cis.append((lo * scale, hi * scale))
                        except UndefinedIntervalError:
                            cis.append((None, None))
                elif est == "detected":
                    value = float(m.sum())
                elif est == "OO":
                    value = float(m.sum() / oo)
                elif est == "Kuronen":
                    if kur is None:
                        continue
                    value = float(np.sum(m / kur))
                else:
                    continue
                row = [cname, est, mname, value * scale, tv, se, n_det]
                for lo, hi in cis:
                    row += [lo, hi]
                rows.append(row)
    return rows


def run_plot(task) -> PlotOutcome:
    cfg, ds, k_int, intensity, index = task
    D, G = cfg.dg_pairs[index % len(cfg.dg_pairs)]
    out = PlotOutcome(ds.name, float(intensity), int(index), float(D), float(G))
    rng = task_rng(cfg.seed, dataset_key(ds.name), k_int, index)
    spec = process_spec(ds, intensity, D, G)
    sim = simulate(spec, rng, cfg.plot_radius)
    scale = per_hectare(1.0, cfg.plot_radius)
    out.n_trees = len(sim.plot)
    out.true_N = sim.true_n * scale
    out.true_G = sim.true_g * scale
    out.attempts = sim.attempts
    est = sstats.estimate_L(sim.points_in_window, cfg.plot_radius)
    out.L = est.L
    out.deviation = sstats.deviation_measure(est)
    try:
        rows = estimate_plot(
            sim.plot,
            cfg.conditions,
            cfg.estimators_for(ds),
            cfg.marks,
            cfg.ci_levels,
            cfg.kuronen_conditions,
            cfg.t_threshold,
            cfg.area_tol,
            truth={"N": out.true_N, "G": out.true_G},
        )
    except (DegenerateProbabilityError, DegenerateWeightError) as exc:
        if cfg.degenerate_policy == "abort":
            raise
        out.status = "skipped: " + type(exc).__name__
        log.info("plot %s/%g/%d skipped: %s", ds.name, intensity, index, exc)
        return out
    prefix = [ds.name, float(intensity), int(index)]
    out.rows = [prefix + r for r in rows]
    return out


def tasks(cfg: ExperimentConfig):
    for ds in cfg.datasets:
        for k, intensity in enumerate(cfg.intensities):
            for i in range(ds.plots_per_intensity):
                yield (cfg, ds, k, intensity, i)


def simulate_all(cfg: ExperimentConfig, threads: Optional[int] = None) -> List[PlotOutcome]:
    """Run every plot task; results come back in task order regardless of threads."""
    threads = threads or cfg.threads
    todo = list(tasks(cfg))
    if threads <= 1:
        return [run_plot(t) for t in todo]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_plot, todo, chunksize=max(1, len(todo) // (threads * 8))))


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


ERROR_COLUMNS = ("dataset", "condition", "estimator", "mark", "plots", "rmse_pct", "me_pct")
COVERAGE_COLUMNS = ("dataset", "condition", "mark", "level", "plots", "excluded", "coverage_pct")
LFUN_COLUMNS = (
    "dataset", "plots", "mean_deviation", "sd_deviation", "min_deviation", "max_deviation",
    "mean_L_deviation",
)


def _num(v):
    if v is None or v == "":
        return None
    return float(v)


def relative_errors(estimates, truths) -> Tuple[float, float]:
    """RMSE and mean error, both as a percentage of the mean true value."""
    e = np.asarray(estimates, dtype=float)
    y = np.asarray(truths, dtype=float)
    ybar = y.mean()
    d = e - y
    return 100.0 / ybar * math.sqrt(np.mean(d * d)), 100.0 / ybar * float(np.mean(d))


def error_table(rows: Iterable[dict]) -> List[list]:
    groups = defaultdict(lambda: ([], []))
    order = []
    for r in rows:
        key = (r["dataset"], r["condition"], r["estimator"], r["mark"])
        if key not in groups:
            order.append(key)
        g = groups[key]
        g[0].append(_num(r["estimate"]))
        g[1].append(_num(r["truth"]))
    out = []
    for key in order:
        est, tru = groups[key]
        rmse, me = relative_errors(est, tru)
        out.append([*key, len(est), rmse, me])
    return out


def coverage_table(rows: Iterable[dict], levels: Sequence[float]) -> List[list]:
    groups = {}
    order = []
    for r in rows:
        if r["estimator"] != "HT":
            continue
        key = (r["dataset"], r["condition"], r["mark"])
        if key not in groups:
            order.append(key)
            groups[key] = [[0, 0, 0] for _ in levels]
        t = _num(r["truth"])
        for k, lv in enumerate(levels):
            lo = _num(r[level_name(lv) + "_lo"])
            hi = _num(r[level_name(lv) + "_hi"])
            c = groups[key][k]
            if lo is None or hi is None:
                c[2] += 1
                continue
            c[1] += 1
            c[0] += int(lo <= t <= hi)
    out = []
    for key in order:
        for lv, (hit, n, excl) in zip(levels, groups[key]):
            pct = 100.0 * hit / n if n else float("nan")
            out.append([*key, lv, n, excl, pct])
    return out


def lfun_table(plots: Sequence[dict], curves: Dict[str, sstats.LEstimate]) -> List[list]:
    by = defaultdict(list)
    order = []
    for p in plots:
        if p["dataset"] not in by:
            order.append(p["dataset"])
        by[p["dataset"]].append(_num(p["deviation"]))
    out = []
    for name in order:
        d = np.array(by[name])
        mld = sstats.deviation_measure(curves[name]) if name in curves else float("nan")
        out.append([name, d.size, d.mean(), d.std(ddof=1) if d.size > 1 else 0.0, d.min(), d.max(), mld])
    return out


# ---------------------------------------------------------------------------
# Whole experiment
# ---------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    plots: List[dict]
    estimates: List[dict]
    curves: Dict[str, sstats.LEstimate]

    def errors(self):
        return error_table(self.estimates)

    def coverage(self):
        return coverage_table(self.estimates, self.config.ci_levels)

    def lfun(self):
        return lfun_table(self.plots, self.curves)

    def error_lookup(self):
        return {tuple(r[:4]): (r[5], r[6]) for r in self.errors()}

    def coverage_lookup(self):
        return {(r[0], r[1], r[2], r[3]): r[6] for r in self.coverage()}

    def lfun_lookup(self):
        return {r[0]: r for r in self.lfun()}


def _rows_as_dicts(header, rows):
    # in-memory rows use the same text a CSV reload gives back
    return [dict(zip(header, (fmt(v) for v in row))) for row in rows]


def collect(cfg: ExperimentConfig, outcomes: Sequence[PlotOutcome]) -> ExperimentResult:
    est_header = estimate_columns(cfg.ci_levels)
    plots = _rows_as_dicts(PLOT_COLUMNS, [o.plot_row() for o in outcomes])
    estimates = _rows_as_dicts(est_header, [r for o in outcomes for r in o.rows])
    sums: Dict[str, list] = {}
    for o in outcomes:
        if o.L is None:
            continue
        acc = sums.setdefault(o.dataset, [np.zeros_like(o.L), 0])
        acc[0] += o.L
        acc[1] += 1
    grid = sstats.default_grid()
    curves = {k: sstats.LEstimate(grid, s / n) for k, (s, n) in sums.items()}
    return ExperimentResult(cfg, plots, estimates, curves)


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
    return collect(cfg, simulate_all(cfg, threads))


def write_results(res: ExperimentResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = res.config
    est_header = estimate_columns(cfg.ci_levels)
    write_table(out / "plots.csv", PLOT_COLUMNS, [[p[c] for c in PLOT_COLUMNS] for p in res.plots])
    write_table(out / "estimates.csv", est_header, [[e[c] for c in est_header] for e in res.estimates])
    write_table(out / "errors.csv", ERROR_COLUMNS, res.errors())
    write_table(out / "coverage.csv", COVERAGE_COLUMNS, res.coverage())
    write_table(out / "lfun.csv", LFUN_COLUMNS, res.lfun())
    write_table(
        out / "lcurves.csv",
        ("dataset", "r", "L"),
        [[name, r, L] for name, c in res.curves.items() for r, L in zip(c.r, c.L)],
    )
    return out


def load_results(cfg: ExperimentConfig, out_dir) -> ExperimentResult:
    """Reload raw per-plot results written by :func:`write_results`."""
    out = Path(out_dir)
    plots = read_table(out / "plots.csv")
    estimates = read_table(out / "estimates.csv")
    curves = {}
    rows = read_table(out / "lcurves.csv")
    by = defaultdict(lambda: ([], []))
    for r in rows:
        by[r["dataset"]][0].append(float(r["r"]))
        by[r["dataset"]][1].append(float(r["L"]))
    for name, (r, L) in by.items():
        curves[name] = sstats.LEstimate(np.array(r), np.array(L))
    return ExperimentResult(cfg, plots, estimates, curves)
