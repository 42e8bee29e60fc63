#!/usr/bin/env python3
"""Time-domain runs: the stable/unstable pair at the quoted boundary, the
irregular large-biomass run, and the extinction scenario.

Each run writes trajectory.csv (with the state-dependent lag and the
conservation residual as columns) plus a metadata sidecar carrying the
termination reason and the fitted oscillation frequency.
"""

import argparse
import sys

from tde_plankton.cli import main as cli_main

PRESETS = ("fig6-stable", "fig6-unstable", "fig7", "extinction")


def run(out: str) -> int:
    for preset in PRESETS:
        code = cli_main(["simulate", "--preset", preset, "--out", f"{out}/{preset}"])
        if code != 0:
            return code
        print(f"{preset}: wrote trajectory to {out}/{preset}")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out", help="output root directory")
    sys.exit(run(ap.parse_args().out))
