#!/usr/bin/env python3
"""Heterodyne threshold sweep (ROC) for the gain-200 / 90-mode scenario."""

import sys

from spt.cli import main

if __name__ == "__main__":
    sys.exit(main([
        "detection",
        "--gain-photons", "200", "--modes", "90",
        "--zeta-grid", "0:4:41",
        "-o", "detection_roc.csv",
    ]))
