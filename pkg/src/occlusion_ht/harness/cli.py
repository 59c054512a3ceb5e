"""Command line interface: ``occlusion-ht <command> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path
from typing import List, Optional

import numpy as np

from .. import sstats
from ..detect import plot_from_arrays
from ..errors import InvalidInputError, OcclusionError
from ..estimate import per_hectare
from ..simulate import simulate, task_rng
from .config import (
    CONDITIONS,
    ESTIMATORS,
    MARKS,
    DatasetConfig,
    ExperimentConfig,
    load_config,
)
from .experiment import (
    COVERAGE_COLUMNS,
    ERROR_COLUMNS,
    dataset_key,
    estimate_columns,
    estimate_plot,
    load_results,
    process_spec,
    run_experiment,
    tasks,
    write_results,
)
from .figures import emit_figures
from .io import PlotRecord, fmt, ingest_plots, write_plots, write_table
from .subplots import extract_subplots

log = logging.getLogger("occlusion_ht")

DIGEST_FILE = "digest.txt"


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="experiment configuration (YAML)")
    p.add_argument("--seed", type=int, metavar="U64", help="master seed, overrides the config")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--threads", type=int, metavar="N", help="worker processes")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress")


def _config(args, required=True) -> Optional[ExperimentConfig]:
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise InvalidInputError("seed must be an unsigned 64-bit integer")
    if args.config is None:
        if required:
            raise InvalidInputError("--config is required for this command")
        return None
    return load_config(args.config, seed=args.seed, out=args.out, threads=args.threads)


def _out(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _print_table(header, rows) -> None:
    print(",".join(header))
    for r in rows:
        print(",".join(fmt(v) for v in r))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _config(args, required=False)
    if cfg is None:
        if args.process is None or args.intensity is None:
            raise InvalidInputError("give --config, or --process and --intensity")
        ds = DatasetConfig(
            name=args.process, process=args.process, plots_per_intensity=args.plots,
            hardcore=args.hardcore, range=args.range,
        )
        cfg = ExperimentConfig(
            seed=0 if args.seed is None else args.seed,
            datasets=(ds,),
            intensities=(float(args.intensity),),
            dg_pairs=((float(args.D), float(args.G)),),
            out=args.out or "results",
        )
    out = _out(args, cfg.out)
    records = []
    for _, ds, k, intensity, i in tasks(cfg):
        D, G = cfg.dg_pairs[i % len(cfg.dg_pairs)]
        rng = task_rng(cfg.seed, dataset_key(ds.name), k, i)
        sim = simulate(process_spec(ds, intensity, D, G), rng, cfg.plot_radius)
        p = sim.plot
        pid = f"{ds.name}/{intensity:g}/{i}"
        tids = [str(j) for j in p.order]
        records.append(PlotRecord(pid, tids, p.x.copy(), p.y.copy(), p.dbh.copy()))
    path = out / "trees.csv"
    write_plots(path, records)
    print(f"wrote {len(records)} plots to {path}")
    return 0


def cmd_estimate(args) -> int:
    levels = tuple(args.levels)
    conditions = args.condition or list(CONDITIONS)
    estimators = args.estimators or (["HT", "detected"] if args.detected_only else list(ESTIMATORS))
    plots = ingest_plots(args.plots)
    out = _out(args, ".")
    header = ("plot_id",) + estimate_columns(levels)[3:]
    rows = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for rec in plots:
            try:
                plot = plot_from_arrays(rec.x, rec.y, rec.dbh, args.radius)
            except OcclusionError as exc:
                raise InvalidInputError(f"plot {rec.plot_id}: {exc}") from None
            truth = None
            if not args.detected_only:
                m = plot.in_window
                s = per_hectare(1.0, args.radius)
                truth = {"N": float(m.sum()) * s,
                         "G": float(np.sum(np.pi * plot.dbh[m] ** 2 / 40000.0)) * s}
            for r in estimate_plot(
                plot, conditions, estimators, args.marks, levels,
                kuronen_conditions=args.kuronen, area_tol=args.area_tol,
                truth=truth, detected_only=args.detected_only,
            ):
                rows.append([rec.plot_id] + r)
    for msg in sorted({str(w.message) for w in caught}):
        print(f"warning: {msg}", file=sys.stderr)
    path = out / "estimates.csv"
    write_table(path, header, rows)
    print(f"wrote {len(rows)} rows for {len(plots)} plots to {path}")
    return 0


def _experiment(args):
    """Results for the config, reusing a finished run in the output directory."""
    cfg = _config(args)
    out = Path(cfg.out)
    digest = out / DIGEST_FILE
    if digest.exists() and digest.read_text().strip() == cfg.digest():
        log.info("reusing results in %s", out)
        return load_results(cfg, out), out
    res = run_experiment(cfg)
    write_results(res, out)
    digest.write_text(cfg.digest() + "\n")
    return res, out


def cmd_evaluate(args) -> int:
    res, out = _experiment(args)
    _print_table(ERROR_COLUMNS, res.errors())
    print(f"results in {out}", file=sys.stderr)
    return 0


def cmd_coverage(args) -> int:
    res, out = _experiment(args)
    _print_table(COVERAGE_COLUMNS, res.coverage())
    print(f"results in {out}", file=sys.stderr)
    return 0


def cmd_lfun(args) -> int:
    plots = ingest_plots(args.plots)
    out = _out(args, ".")
    rows, curves = [], []
    for rec in plots:
        inside = np.hypot(rec.x, rec.y) <= args.radius
        pts = np.column_stack([rec.x[inside], rec.y[inside]])
        est = sstats.estimate_L(pts, args.radius, r_max=args.r_max)
        rows.append([rec.plot_id, int(inside.sum()), sstats.deviation_measure(est)])
        curves += [[rec.plot_id, r, L] for r, L in zip(est.r, est.L)]
    write_table(out / "deviation.csv", ("plot_id", "n_points", "deviation"), rows)
    write_table(out / "lcurves.csv", ("plot_id", "r", "L"), curves)
    print(f"wrote L-functions of {len(plots)} plots to {out}")
    return 0


def cmd_subplots(args) -> int:
    rects = ingest_plots(args.rect)
    out = _out(args, ".")
    subs = []
    for rect in rects:
        subs += extract_subplots(
            rect, args.width, args.height, (args.origin_x, args.origin_y), args.radius
        )
    path = out / "subplots.csv"
    write_plots(path, subs)
    print(f"wrote {len(subs)} subplots from {len(rects)} plots to {path}")
    return 0


def cmd_figures(args) -> int:
    src = Path(args.results)
    if not src.is_dir():
        raise InvalidInputError(f"no results directory {src}")
    out = emit_figures(src, args.out, svg=args.svg)
    print(f"wrote figure data to {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="occlusion-ht",
        description="Detection probabilities and estimators for occluded single-scan plots.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate plots to a tree-list CSV")
    _common(p)
    p.add_argument("--process", choices=("poisson", "nonoverlapping", "gibbs", "lgcp"))
    p.add_argument("--intensity", type=float, help="stems per hectare")
    p.add_argument("--D", type=float, default=15.0, help="mean dbh in cm")
    p.add_argument("--G", type=float, default=20.0, help="basal area in m2/ha")
    p.add_argument("--plots", type=int, default=1)
    p.add_argument("--hardcore", type=float, default=0.0)
    p.add_argument("--range", type=float, default=0.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="per-plot estimates from a tree-list CSV")
    _common(p)
    p.add_argument("plots", help="tree-list CSV of circular plots centred at the scanner")
    p.add_argument("--condition", action="append",
                   help="full, centre, any or a number in [-1, 1]; repeatable")
    p.add_argument("--estimators", nargs="+", choices=ESTIMATORS)
    p.add_argument("--marks", nargs="+", choices=MARKS, default=list(MARKS))
    p.add_argument("--levels", nargs="+", type=float, default=[0.90, 0.95, 0.99])
    p.add_argument("--kuronen", nargs="+", default=["full", "centre"],
                   help="conditions for the Kuronen estimator")
    p.add_argument("--radius", type=float, default=10.0)
    p.add_argument("--area-tol", type=float, default=1e-4)
    p.add_argument("--detected-only", action="store_true",
                   help="the file lists detected trees only")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("evaluate", help="run an experiment and print error tables")
    _common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("coverage", help="run an experiment and print coverage tables")
    _common(p)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("lfun", help="L-functions and deviation measures of plots")
    _common(p)
    p.add_argument("plots")
    p.add_argument("--radius", type=float, default=10.0)
    p.add_argument("--r-max", type=float, default=sstats.R_MAX)
    p.set_defaults(func=cmd_lfun)

    p = sub.add_parser("subplots", help="cut circular subplots from rectangular plots")
    _common(p)
    p.add_argument("rect", help="tree-list CSV of rectangular plots")
    p.add_argument("--width", type=float, default=30.0)
    p.add_argument("--height", type=float, default=30.0)
    p.add_argument("--origin-x", type=float, default=0.0)
    p.add_argument("--origin-y", type=float, default=0.0)
    p.add_argument("--radius", type=float, default=10.0)
    p.set_defaults(func=cmd_subplots)

    p = sub.add_parser("figures", help="figure data from a results directory")
    _common(p)
    p.add_argument("results")
    p.add_argument("--svg", action="store_true", help="also write SVG scatter plots")
    p.set_defaults(func=cmd_figures)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OcclusionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
