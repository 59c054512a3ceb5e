"""From a mapped rectangular plot to subplot estimates, using the CLI.

A 30 x 30 m stand is simulated and written as a tree list.  126 circular
subplots are cut from it, each is estimated as if scanned from its centre,
and the interval coverage over subplots is reported.

    python3 demos/field_plots.py [workdir]
"""
import sys
import tempfile
from pathlib import Path

import numpy as np

from occlusion_ht.harness.cli import main
from occlusion_ht.harness.io import PlotRecord, read_table, write_plots
from occlusion_ht.simulate import recover_weibull

work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp())
work.mkdir(parents=True, exist_ok=True)
rng = np.random.default_rng(3)

# a Poisson stand at 1200 stems/ha, with a 2 m margin so subplots near the edge see trees
n = rng.poisson(1200 * 34 * 34 / 1e4)
x, y = rng.uniform(-2, 32, n), rng.uniform(-2, 32, n)
d = recover_weibull(16.0, 28.0, 1200.0).sample(rng, n)
write_plots(work / "stand.csv", [PlotRecord("stand", [str(i) for i in range(n)], x, y, d)])

main(["subplots", str(work / "stand.csv"), "--out", str(work)])
main(["estimate", str(work / "subplots.csv"), "--estimators", "HT", "detected",
      "--marks", "N", "--out", str(work)])

rows = read_table(work / "estimates.csv")
print(f"\n{'condition':<7} {'HT ME%':>7} {'detected ME%':>12} {'90% cover':>9}")
for cond in ("full", "centre", "any"):
    ht = [r for r in rows if r["condition"] == cond and r["estimator"] == "HT"]
    det = [r for r in rows if r["condition"] == cond and r["estimator"] == "detected"]
    truth = np.array([float(r["truth"]) for r in ht])
    e = np.array([float(r["estimate"]) for r in ht])
    dd = np.array([float(r["estimate"]) for r in det])
    lo = np.array([float(r["ci90_lo"] or "nan") for r in ht])
    hi = np.array([float(r["ci90_hi"] or "nan") for r in ht])
    ok = ~np.isnan(lo)
    cover = np.mean((lo[ok] <= truth[ok]) & (truth[ok] <= hi[ok]))
    print(f"{cond:<7} {100 * (e.mean() / truth.mean() - 1):7.2f} "
          f"{100 * (dd.mean() / truth.mean() - 1):12.2f} {100 * cover:9.1f}")
print(f"\nfiles in {work}")
print("overlapping subplots share trees, so these are not independent replicates")
