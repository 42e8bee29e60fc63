#!/usr/bin/env python3
"""Equilibrium-vs-biomass sweeps for both juvenile-mortality settings.

Writes one CSV per maturity level under <out>/fig1-left (no juvenile
mortality) and <out>/fig1-right (juvenile mortality equal to the mature
rate).  Plot n_star/p_star/z_star against n_total on log-x axes to see the
three regimes and their breakpoints.
"""

import argparse
import sys

from tde_plankton.cli import main as cli_main


def run(out: str) -> int:
    for preset in ("fig1-left", "fig1-right"):
        code = cli_main(["equilibria", "--preset", preset, "--out", f"{out}/{preset}"])
        if code != 0:
            return code
        print(f"{preset}: wrote sweeps to {out}/{preset}")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out", help="output root directory")
    sys.exit(run(ap.parse_args().out))
