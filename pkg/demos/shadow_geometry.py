"""How a closer stem lowers the detection probability of a farther one.

A stem of radius 0.5 m at 5 m from the scanner casts a shadow.  A second
stem at distance r is rotated about the scanner; it is detected unless the
shadow (grown or shrunk by its own radius) swallows its centre.

    python3 demos/shadow_geometry.py
"""
import math

import numpy as np

from occlusion_ht import detect, geom
from occlusion_ht.geom import MorphTransform, PlanePoint, StemDisc

front = StemDisc(PlanePoint(5.0, 0.0), 0.5)
sh = geom.shadow_of(front)
print(f"shadow of the front stem: direction {sh.direction:.3f} rad, half-width {sh.half_angle:.4f} rad")

beta = 0.2  # radius of the rotated stem
print(f"\n{'r':>5} {'identity':>9} {'dilated':>9} {'eroded':>9}   share of the circle hidden")
for r in (4.6, 6.0, 8.0, 10.0):
    row = [geom.occluded_fraction([front], r, t)
           for t in (MorphTransform.identity(), MorphTransform.dilate(beta), MorphTransform.erode(beta))]
    print(f"{r:5.1f} " + " ".join(f"{v:9.5f}" for v in row))

# rotating the second stem and counting detections reproduces 1 - hidden share
rng = np.random.default_rng(0)
r = 8.0
angles = rng.uniform(0, 2 * math.pi, 20_000)
print(f"\nsecond stem at r = {r}, dbh {200 * beta:.0f} cm, {angles.size} random angles")
for name in ("full", "centre", "any"):
    cond = detect.DetectionCondition.named(name)
    seen = 0
    for a in angles:
        plot = detect.plot_from_arrays([5.0, r * math.cos(a)], [0.0, r * math.sin(a)], [100.0, 200 * beta])
        seen += detect.classify_detection(plot, cond)[1]
    p = detect.detection_probability(plot, 1, cond)
    print(f"{name:>7}: detected {seen / angles.size:.4f}, probability {p:.4f}")

# the union of several shadows, seen on one circle
stems = [StemDisc(PlanePoint(3 * math.cos(a), 3 * math.sin(a)), 0.3) for a in (0.0, 0.15, 2.0)]
arcs = geom.occluded_arcs(stems, 9.0, MorphTransform.identity())
print("\nhidden arcs at r = 9 behind three stems:")
for lo, hi in arcs.intervals:
    print(f"  [{lo:.4f}, {hi:.4f}]")
