#!/usr/bin/env python3
"""Gain/bandwidth trade-off versus the input-cavity coupling g1.

Bandwidth (the impedance-matched kappa1) grows as g1^2 while the gain drops
reciprocally; the sweep makes the trade-off explicit.
"""

import sys

from spt.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "gain",
        "--omega", "2", "--kappa2", "1",
        "--sweep", "g1", "log:0.02:0.3:12",
        "-o", "gain_tradeoff.csv",
    ]))
