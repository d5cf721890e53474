#!/usr/bin/env python3
"""Render the sensitivity-curve figure from tv_curves.csv.

Usage: python plots/plot_tv_curves.py --in tv_curves.csv --out tv_curves.svg
"""

import sys

from figspec import script_main

if __name__ == "__main__":
    sys.exit(script_main("tv-curves"))
