"""Walk through the estimators on a single simulated plot.

    python3 demos/one_plot.py [seed]
"""
import sys

import numpy as np

from occlusion_ht import detect
from occlusion_ht.estimate import EstimateResult, MarkKind, per_hectare
from occlusion_ht.simulate import ProcessSpec, Variant, recover_weibull, simulate, task_rng

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
R = 10.0
ha = per_hectare(1.0, R)

# 1000 stems/ha with mean dbh 15 cm and 20 m2/ha of basal area
dbh = recover_weibull(15.0, 20.0, 1000.0)
print(f"Weibull shape {dbh.shape:.3f}, scale {dbh.scale:.3f}")
sim = simulate(ProcessSpec(Variant.POISSON, 1000.0, dbh), task_rng(seed, 0))
plot = sim.plot
inside = plot.in_window
print(f"{len(plot)} stems touch the plot, {sim.true_n} have their centre in it")
print(f"true density {sim.true_n * ha:.1f} /ha\n")

# share of the plot area that the scanner sees past the stems
oo = detect.oo_weight(plot)

print(f"{'condition':>9} {'seen':>5} {'detected':>9} {'O&O':>8} {'HT':>8} {'se':>6}  95% interval")
for name in ("full", "centre", "any"):
    cond = detect.DetectionCondition.named(name)
    rec = detect.detection_record(plot, cond)
    use = rec.detected & inside
    n = int(use.sum())
    res = EstimateResult.compute(MarkKind.STEM_COUNT.values(plot.dbh[use]), rec.probability[use])
    lo, hi = {lv: (a, b) for lv, a, b in res.ci}.get(0.95, (np.nan, np.nan))
    print(
        f"{name:>9} {n:5d} {n * ha:9.1f} {n / oo * ha:8.1f} {res.tau_hat * ha:8.1f}"
        f" {np.sqrt(res.var_hat) * ha:6.1f}  [{lo * ha:.1f}, {hi * ha:.1f}]"
    )
print(f"\nvisible share of the plot {oo:.3f}")
