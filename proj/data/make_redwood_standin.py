"""Generate redwood.csv: a 195-point clustered pattern on the unit square.

The original redwood coordinates are not redistributed here. This script draws
a Matern cluster pattern with a fixed seed so the file is reproducible.
"""
import numpy as np

N_POINTS = 195
rng = np.random.default_rng(1977)

pts = []
while len(pts) < N_POINTS:
    parent = rng.uniform(0.0, 1.0, size=2)
    # thin out parents along a diagonal band, as in the sparse strip of the
    # real stand
    if abs(parent[0] - parent[1]) < 0.15 and rng.uniform() < 0.8:
        continue
    for _ in range(rng.poisson(8.0)):
        r = 0.08 * np.sqrt(rng.uniform())
        t = rng.uniform(0.0, 2.0 * np.pi)
        p = parent + r * np.array([np.cos(t), np.sin(t)])
        if np.all((p >= 0.0) & (p <= 1.0)):
            pts.append(p)

pts = np.array(pts[:N_POINTS])
with open("redwood.csv", "w") as f:
    f.write("x,y\n")
    for x, y in pts:
        f.write(f"{x:.4f},{y:.4f}\n")
