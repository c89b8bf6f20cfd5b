"""Neuron sampling ablation for the Wasserstein variant.

Compares betweenness top-k recording against an equal-count random set at
n=500, and against recording every neuron at n=200.

Usage: python scripts/sampling_ablation.py [--seeds 0,1,2,3,4] [--out runs/sampling]
"""

import argparse
import dataclasses
from pathlib import Path

import numpy as np

from spikecast.config import RunConfig
from spikecast.experiments import load_dataset
from spikecast.io import write_json
from spikecast.pipeline import ModelSpec, run_model

ARMS = (("betweenness", 500), ("random", 500), ("betweenness", 200), ("all", 200))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--out", default="runs/sampling")
    a = p.parse_args()
    seeds = [int(s) for s in a.seeds.split(",")]
    cfg = RunConfig()
    results = {f"{s}@{n}": [] for s, n in ARMS}
    for seed in seeds:
        _, z, _ = load_dataset(dataclasses.replace(cfg, seed=seed))
        for sampling, n in ARMS:
            pipe = dataclasses.replace(cfg.pipeline(), neurons=n, sampling=sampling)
            rec = run_model(z, ModelSpec("wass", "wasserstein"), pipe, seed, cfg.window)
            results[f"{sampling}@{n}"].append(rec.summary(cfg.epsilon)["avg_rmse"])
    rows = [
        {"arm": k, "mean": float(np.mean(v)), "std": float(np.std(v)), "per_seed": v}
        for k, v in results.items()
    ]
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "sampling.json", rows)
    for r in rows:
        print(f"{r['arm']:<16} {r['mean']:.4f} ± {r['std']:.4f}")


if __name__ == "__main__":
    main()
