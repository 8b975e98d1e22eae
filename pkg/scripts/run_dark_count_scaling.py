#!/usr/bin/env python3
"""Dark-count rates versus anharmonicity (steady inversion + no-jump numerics).

Pass --trajectories N on the command line of spt dark-counts for the
stochastic estimate as well; the default here keeps to the fast analytics.
"""

import sys

from spt.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "dark-counts",
        "--g1", "0.2", "--omega", "2", "--kappa2", "0.1",
        "--anharmonicity", "50",
        "--a-grid", "log:30:100:9",
        "-o", "dark_count_scaling.csv",
    ]))
