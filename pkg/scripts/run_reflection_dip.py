#!/usr/bin/env python3
"""Reflection coefficient of the input cavity over two decades of kappa1.

The dip at kappa1 = Gamma_set is the impedance-matching condition; the CSV
carries the full numeric steady-state result next to the Lambda-system
closed form.
"""

import sys

from spt.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "reflection",
        "--g1", "0.05", "--omega", "2", "--kappa2", "2",
        "--kappa1-grid", "log",
        "-o", "reflection_dip.csv",
    ]))
