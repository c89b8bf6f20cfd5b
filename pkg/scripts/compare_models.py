"""All four models on the canonical series, averaged over seeds.

Usage: python scripts/compare_models.py [--seeds 0,1,2,3,4] [--out runs/compare]
"""

import argparse
import sys

from spikecast.cli import main

if __name__ == "__main__":
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--out", default="runs/compare")
    a = p.parse_args()
    sys.exit(main(["compare", "--seeds", a.seeds, "--out", a.out, "--models", "wass,rmse,ar,naive"]))
