"""CSV formats: tree lists grouped by plot, and generic result tables."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from ..errors import ParseError

PLOT_HEADER = ("plot_id", "tree_id", "x", "y", "dbh")


@dataclass
class PlotRecord:
    """Trees of one plot, in file order.  Coordinates in metres, dbh in cm."""

    plot_id: str
    tree_id: List[str]
    x: np.ndarray
    y: np.ndarray
    dbh: np.ndarray

    def __len__(self):
        return len(self.tree_id)


def _number(text, name, line):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{name} is not a number: {text!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"{name} is not finite: {text!r}", line)
    return v


def ingest_plots(path) -> List[PlotRecord]:
    """Read a tree list and group it by ``plot_id`` in order of first appearance."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return []
    reader = csv.reader(text.splitlines())
    header = next(reader)
    if tuple(h.strip() for h in header) != PLOT_HEADER:
        raise ParseError(f"expected header {','.join(PLOT_HEADER)}", 1)
    groups = {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(PLOT_HEADER):
            raise ParseError(f"expected {len(PLOT_HEADER)} fields, got {len(row)}", line)
        pid, tid = row[0].strip(), row[1].strip()
        if not pid:
            raise ParseError("empty plot_id", line)
        x = _number(row[2], "x", line)
        y = _number(row[3], "y", line)
        d = _number(row[4], "dbh", line)
        if d <= 0:
            raise ParseError(f"dbh must be positive, got {d}", line)
        g = groups.setdefault(pid, ([], [], [], []))
        g[0].append(tid)
        g[1].append(x)
        g[2].append(y)
        g[3].append(d)
    return [
        PlotRecord(pid, t, np.array(x, float), np.array(y, float), np.array(d, float))
        for pid, (t, x, y, d) in groups.items()
    ]


def write_plots(path, plots: Iterable[PlotRecord]) -> None:
    """Write plots in the tree-list format; floats round-trip exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PLOT_HEADER)
        for p in plots:
            for t, x, y, d in zip(p.tree_id, p.x, p.y, p.dbh):
                w.writerow([p.plot_id, t, repr(float(x)), repr(float(y)), repr(float(d))])


def fmt(v) -> str:
    """Stable text for a table cell."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return "" if math.isnan(v) else ("inf" if v > 0 else "-inf")
        return repr(float(v))
    return str(v)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_table(path) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
