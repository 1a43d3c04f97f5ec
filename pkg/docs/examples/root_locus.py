"""
Pade root loci
==============

The first-order Pade substitute for the delay turns the characteristic
quasi-polynomial into a cubic. Sweeping one parameter at a time shows
where its roots cross the imaginary axis.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from delaydock import PlantParams, critical_delay, pade_critical_delay, pade_crossing_frequency, root_locus

out = Path(sys.argv[1] if len(sys.argv) > 1 else "figures")
out.mkdir(parents=True, exist_ok=True)

p = PlantParams(60, 1000, 50)
print(f"Pade critical delay {1e3 * pade_critical_delay(p):.1f} ms "
      f"(exact {1e3 * critical_delay(p):.1f} ms), "
      f"crossing at {pade_crossing_frequency(p):.3f} rad/s")

sweeps = [
    ("h", PlantParams(60, 1000, 50), 0.0, 0.1),
    ("b", PlantParams(60, 1000, 0, 0.05), 0.0, 200.0),
    ("k", PlantParams(60, 1, 50, 0.05), 10.0, 2000.0),
    ("m", PlantParams(60, 1000, 50, 0.05), 1.0, 5000.0),
]
fig, axes = plt.subplots(2, 2, figsize=(9, 8))
for ax, (vary, base, lo, hi) in zip(axes.flat, sweeps):
    tr = root_locus(base, vary, lo, hi, 1000)
    for j in range(3):
        ax.plot(tr.roots[:, j].real, tr.roots[:, j].imag, ".", ms=1)
    ax.axvline(0, color="k", lw=0.5)
    ax.set_xlim(-20, 10)
    ax.set_ylim(-10, 10)
    ax.set_title(f"vary {vary} over [{lo:g}, {hi:g}]")

    # where does the rightmost root change sign?
    right = tr.rightmost_real()
    flips = np.flatnonzero(np.diff(np.sign(right)))
    print(f"{vary}: rightmost real part changes sign near {[f'{tr.values[i]:.4g}' for i in flips]}")
fig.tight_layout()
fig.savefig(out / "root_locus.png", dpi=120)
