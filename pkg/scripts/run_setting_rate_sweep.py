#!/usr/bin/env python3
"""Setting rate vs cavity-2 decay: numeric inversion against the closed forms.

Reproduces the converged-truncation sweep (kappa2/g2 from 0.5 to 4 at
Omega/g2 = 2, g1/g2 = 0.05) as CSV.
"""

import sys

from spt.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "setting-rate",
        "--g1", "0.05", "--omega", "2",
        "--kappa2-grid", "0.5:4:50",
        "--n2", "10",
        "-o", "setting_rate_sweep.csv",
    ]))
