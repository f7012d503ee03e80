#!/usr/bin/env python3
"""Overlay stability curves from `latticeclock allan` outputs on log-log axes.

Usage: python scripts/plot_stability.py curve1.csv [curve2.csv ...] [-o out.png]
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

parser = argparse.ArgumentParser()
parser.add_argument("curves", nargs="+")
parser.add_argument("-o", "--out", default="stability.png")
args = parser.parse_args()

fig, ax = plt.subplots(figsize=(6, 4.5))
for path in args.curves:
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2)
    data = np.atleast_2d(data)
    ax.loglog(data[:, 0], data[:, 1], "o-", ms=3, lw=0.8, label=path)

ax.set_xlabel("averaging time tau [s]")
ax.set_ylabel("Allan deviation sigma_y")
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(args.out, dpi=150)
print(f"wrote {args.out}")
