"""Bias of the estimators on regular, random and clustered forests.

Runs a small simulation experiment (a few minutes on one core) and prints
the error and coverage tables next to each dataset's L-function deviation.
Regular patterns hide fewer stems than the rotation model assumes, so HT
overestimates there; clustered patterns hide more.

    python3 demos/process_comparison.py [plots_per_intensity]
"""
import sys

from occlusion_ht.harness.config import config_from_dict
from occlusion_ht.harness.experiment import run_experiment

plots = int(sys.argv[1]) if len(sys.argv) > 1 else 10

cfg = config_from_dict({
    "seed": 5,
    "intensities": [500, 1500, 2500, 3500],
    "marks": ["N"],
    "estimators": ["HT", "OO", "detected"],
    "datasets": [
        {"name": "Poisson", "process": "poisson", "plots_per_intensity": plots},
        {"name": "Gibbs 1", "process": "gibbs", "hardcore": 1.0, "plots_per_intensity": plots},
        {"name": "Cluster 4", "process": "lgcp", "range": 4.0, "plots_per_intensity": plots},
    ],
})
res = run_experiment(cfg)

lf = res.lfun_lookup()
print(f"{'dataset':<10} {'plots':>5} {'deviation':>9}")
for name, row in lf.items():
    print(f"{name:<10} {row[1]:5d} {row[2]:9.2f}")

print(f"\n{'dataset':<10} {'condition':<7} {'estimator':<9} {'RMSE%':>6} {'ME%':>6}")
for ds, cond, est, mark, n, rmse, me in res.errors():
    print(f"{ds:<10} {cond:<7} {est:<9} {rmse:6.1f} {me:6.1f}")

print(f"\n{'dataset':<10} {'condition':<7} coverage of 90/95/99% intervals")
cov = res.coverage_lookup()
for name in lf:
    for cond in cfg.conditions:
        vals = [cov[(name, cond, "N", lv)] for lv in cfg.ci_levels]
        print(f"{name:<10} {cond:<7} " + " ".join(f"{v:5.1f}" for v in vals))
