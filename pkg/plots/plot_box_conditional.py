#!/usr/bin/env python3
"""Render the box-conditional triptych from box_conditional_k*.csv files.

Usage:
    python plots/plot_box_conditional.py \
        --in box_conditional_k3.csv box_conditional_k4.csv box_conditional_k5.csv \
        --out box_conditional.svg

One panel per input file, each showing the vacant-boundary curve, the
occupied-boundary curve and their difference.
"""

import sys

from figspec import script_main

if __name__ == "__main__":
    sys.exit(script_main("box-conditional"))
