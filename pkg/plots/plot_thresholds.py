#!/usr/bin/env python3
"""Render the threshold-comparison figure from thresholds.csv.

Usage: python plots/plot_thresholds.py --in thresholds.csv --out thresholds.svg
"""

import sys

from figspec import script_main

if __name__ == "__main__":
    sys.exit(script_main("thresholds"))
