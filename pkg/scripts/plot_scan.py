#!/usr/bin/env python3
"""Plot a spectrum CSV produced by `latticeclock scan`.

Usage: python scripts/plot_scan.py out/sr-breadboard/scan/spectrum.csv [out.png]
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

path = sys.argv[1]
out = sys.argv[2] if len(sys.argv) > 2 else "scan.png"

data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2)
detuning, excitation = data[:, 0], data[:, 1]

fig, (full, zoom) = plt.subplots(1, 2, figsize=(11, 4))
full.plot(detuning / 1e3, excitation, lw=0.8)
full.set_xlabel("detuning [kHz]")
full.set_ylabel("excitation fraction")
full.set_title("full scan (carrier + motional sidebands)")

center = np.abs(detuning) < 1500
zoom.plot(detuning[center], excitation[center], lw=0.8)
zoom.set_xlabel("detuning [Hz]")
zoom.set_title("carrier")

fig.tight_layout()
fig.savefig(out, dpi=150)
print(f"wrote {out}")
