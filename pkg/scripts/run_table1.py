"""Trend grid (A x T) for the reservoir variants and the AR baseline.

Usage: python scripts/run_table1.py [--seeds 0,1,2,3,4] [--out runs/table1]
"""

import argparse
import sys

from spikecast.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--out", default="runs/table1")
    p.add_argument("--models", default="wass,rmse,ar")
    a = p.parse_args()
    sys.exit(main(["table1", "--seeds", a.seeds, "--out", a.out, "--models", a.models]))
