"""
Stability regions of the loop-delay contact
===========================================

Critical boundaries in the (h, b), (h, k) and (h, m) planes around the
operating point m = 60 kg, k = 1000 N/m, b = 50 N s/m, plus the families
obtained by varying a third parameter. Figures land in ``figures/``
(or the directory given as the first argument).
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from delaydock import PlantParams, boundary_curve, classify_grid, critical_delay, sensitivity_family

out = Path(sys.argv[1] if len(sys.argv) > 1 else "figures")
out.mkdir(parents=True, exist_ok=True)

p = PlantParams(60, 1000, 50)
print(f"critical delay at the operating point: {1e3 * critical_delay(p):.1f} ms")

# one boundary per plane; the stable side is to the left (smaller h)
curves = [
    boundary_curve("b", {"m": 60, "k": 1000}, (0, 400), 400),
    boundary_curve("k", {"m": 60, "b": 50}, (50, 3000), 400),
    boundary_curve("m", {"k": 1000, "b": 50}, (1, 500), 400),
]
fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
for ax, c in zip(axes, curves):
    ax.plot(1e3 * c.h, c.y)
    ax.set_xlabel("h [ms]")
    ax.set_ylabel(c.y_axis)
axes[0].plot(1e3 * critical_delay(p), 50, "ko")
fig.tight_layout()
fig.savefig(out / "regions.png", dpi=120)

# a classified grid shows the same boundary as filled cells
grid = classify_grid((0, 0.1), "b", (0, 150), 101, 76, {"m": 60, "k": 1000})
codes = np.vectorize({"S": 0, "N": 1, "U": 2}.get)(grid.letters())
fig, ax = plt.subplots(figsize=(5, 4))
ax.pcolormesh(1e3 * grid.h, grid.y, codes, shading="nearest", cmap="RdYlGn_r")
ax.set_xlabel("h [ms]")
ax.set_ylabel("b [N s/m]")
fig.savefig(out / "grid.png", dpi=120)

# stiffer contacts shrink the stable region, heavier masses barely move it at small b
fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
for ax, (param, values, fixed) in zip(
    axes, [("k", [500, 1000, 2000], {"m": 60}), ("m", [30, 60, 120], {"k": 1000})]
):
    for c in sensitivity_family("b", param, values, fixed, (0, 300), 300):
        ax.plot(1e3 * c.h, c.y, label=c.label)
    ax.set_xlabel("h [ms]")
    ax.set_ylabel("b [N s/m]")
    ax.legend()
fig.tight_layout()
fig.savefig(out / "sensitivity.png", dpi=120)
print(f"figures written to {out}/")
