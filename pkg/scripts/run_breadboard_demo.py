#!/usr/bin/env python3
"""End-to-end demo: run every subcommand for one scenario into out/<name>/.

Usage: python scripts/run_breadboard_demo.py [sr-breadboard|yb-breadboard]
"""

import sys
from pathlib import Path

from latticeclock.cli import main

SCENARIO = sys.argv[1] if len(sys.argv) > 1 else "sr-breadboard"
BASE = Path("out") / SCENARIO

for command in ("prep", "scan", "lock", "budget", "search"):
    out = BASE / command
    code = main([command, "--scenario", SCENARIO, "--out", str(out)])
    if code != 0:
        sys.exit(code)

# stability of the locked vs free-running oscillator
for trace in ("locked_trace", "free_trace"):
    code = main(["allan", "--input", str(BASE / "lock" / f"{trace}.csv"),
                 "--out", str(BASE / f"allan-{trace}")])
    if code != 0:
        sys.exit(code)

print(f"\nartifacts under {BASE}/")
