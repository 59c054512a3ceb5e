"""Figure data: per-plot standard errors and the deviation against bias relation."""
from __future__ import annotations

import math
from html import escape
from pathlib import Path
from typing import List, Sequence

from .io import read_table, write_table

FIG3_COLUMNS = ("dataset", "condition", "deviation", "me_pct")
FIG4_COLUMNS = ("dataset", "condition", "plot_id", "true_N", "estimated_N", "se")


def _float(v):
    return float(v) if v not in (None, "") else float("nan")


def fig4_rows(estimates: Sequence[dict]) -> List[list]:
    """True and estimated stem density with its standard error, one row per plot."""
    rows = []
    for e in estimates:
        if e["estimator"] != "HT" or e["mark"] != "N":
            continue
        pid = f"{e['dataset']}/{_float(e['intensity']):g}/{e['plot']}"
        rows.append([
            e["dataset"], e["condition"], pid,
            _float(e["truth"]), _float(e["estimate"]), _float(e["se"]),
        ])
    return rows


def fig3_rows(errors: Sequence[dict], lfun: Sequence[dict]) -> List[list]:
    """Dataset deviation measure against HT mean error for stem density."""
    dev = {r["dataset"]: _float(r["mean_deviation"]) for r in lfun}
    rows = []
    for e in errors:
        if e["estimator"] != "HT" or e["mark"] != "N" or e["dataset"] not in dev:
            continue
        rows.append([e["dataset"], e["condition"], dev[e["dataset"]], _float(e["me_pct"])])
    rows.sort(key=lambda r: (r[1], r[2]))
    return rows


def _svg_scatter(path, series, xlabel, ylabel, title, lines=False):
    """Minimal SVG scatter plot; ``series`` maps a label to (xs, ys)."""
    W, H, M = 640, 420, 60
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys)
           if math.isfinite(x) and math.isfinite(y)]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="20" text-anchor="middle">{escape(title)}</text>']
    if pts:
        x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
        y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
        x1 += (x1 == x0)
        y1 += (y1 == y0)

        def sx(v):
            return M + (v - x0) / (x1 - x0) * (W - 2 * M)

        def sy(v):
            return H - M - (v - y0) / (y1 - y0) * (H - 2 * M)

        out.append(f'<rect x="{M}" y="{M}" width="{W - 2 * M}" height="{H - 2 * M}" '
                   f'fill="none" stroke="black"/>')
        for v in (x0, x1):
            out.append(f'<text x="{sx(v):.1f}" y="{H - M + 16}" text-anchor="middle">{v:.3g}</text>')
        for v in (y0, y1):
            out.append(f'<text x="{M - 6}" y="{sy(v) + 4:.1f}" text-anchor="end">{v:.3g}</text>')
        colours = ("#1b6ca8", "#d1495b", "#66a182", "#edae49", "#6c4f9c", "#333333")
        for k, (label, (xs, ys)) in enumerate(series.items()):
            c = colours[k % len(colours)]
            xy = [(sx(x), sy(y)) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
            if lines and len(xy) > 1:
                d = " ".join(f"{a:.1f},{b:.1f}" for a, b in sorted(xy))
                out.append(f'<polyline points="{d}" fill="none" stroke="{c}"/>')
            for a, b in xy:
                out.append(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="2" fill="{c}" fill-opacity="0.6"/>')
            out.append(f'<text x="{W - M + 4}" y="{M + 14 * k + 10}" fill="{c}">{escape(str(label))}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 16}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{H / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {H / 2})">{escape(ylabel)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def emit_figures(results_dir, out_dir=None, svg: bool = False) -> Path:
    """Write ``fig3.csv`` and ``fig4.csv`` (and SVG scatters) from a results directory.

    Missing inputs give header-only files.
    """
    src = Path(results_dir)
    out = Path(out_dir) if out_dir is not None else src
    out.mkdir(parents=True, exist_ok=True)

    def load(name):
        p = src / name
        return read_table(p) if p.exists() else []

    f4 = fig4_rows(load("estimates.csv"))
    f3 = fig3_rows(load("errors.csv"), load("lfun.csv"))
    write_table(out / "fig4.csv", FIG4_COLUMNS, f4)
    write_table(out / "fig3.csv", FIG3_COLUMNS, f3)
    if svg:
        s4, s3 = {}, {}
        for r in f4:
            xs, ys = s4.setdefault(f"{r[0]} {r[1]}", ([], []))
            xs.append(r[3])
            ys.append(r[5])
        for r in f3:
            xs, ys = s3.setdefault(r[1], ([], []))
            xs.append(r[2])
            ys.append(r[3])
        _svg_scatter(out / "fig4.svg", s4, "true stems per ha", "estimated SE", "Standard error")
        _svg_scatter(out / "fig3.svg", s3, "deviation measure", "HT ME%", "Bias against deviation",
                     lines=True)
    return out
