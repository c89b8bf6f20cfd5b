"""Experiment orchestration: single runs, model comparisons and the
trend-grid table."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import OnlineAr
from .config import RunConfig, emit_config
from .dynamics import Affine, TimeSeries, TrendSpec, apply_trend, generate_evolving, normalize
from .io import load_csv, write_json, write_record
from .pipeline import ModelSpec, model_spec, run_model

TABLE1_AMPLITUDES = (0.0, 3.0, 5.0)
TABLE1_PERIODS = (100.0, 300.0, 500.0)


def load_dataset(cfg: RunConfig, trend: TrendSpec | None = None) -> tuple[TimeSeries, TimeSeries, Affine]:
    """Return ``(raw, normalized, affine)`` for the configured dataset."""
    if cfg.dataset.kind == "csv":
        raw = load_csv(cfg.dataset.path, cfg.dataset.column)
    else:
        raw = generate_evolving(cfg.schedule(), h=cfg.dataset.h, seed=cfg.seed, substeps=cfg.dataset.substeps)
        raw = apply_trend(raw, trend if trend is not None else cfg.trend())
    z, aff = normalize(raw)
    return raw, z, aff


def _ar(cfg: RunConfig) -> OnlineAr:
    return OnlineAr(p=cfg.ar.order, lr=cfg.ar.lr)


def _units(cfg: RunConfig, aff: Affine) -> tuple[float, float]:
    # file datasets report raw units, synthetic ones normalized units
    return (aff.scale, aff.offset) if cfg.dataset.kind == "csv" else (1.0, 0.0)


def _scaled_summary(summary: dict, scale: float) -> dict:
    out = dict(summary)
    for key in ("avg_rmse", "std_rmse", "avg_dw", "std_dw"):
        out[key] = summary[key] * scale
    for key in ("mode_rmse", "mode_dw"):
        out[key] = [v * scale for v in summary[key]]
    return out


def manifest(cfg: RunConfig, **extra) -> dict:
    return {
        "package": "spikecast",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "config_toml": emit_config(cfg),
        **extra,
    }


def run_experiment(cfg: RunConfig) -> int:
    """Run one model and write ``record.csv``, ``summary.json`` and ``manifest.json``."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    raw, z, aff = load_dataset(cfg)
    spec = cfg.model_spec()
    rec = run_model(z, spec, cfg.pipeline(), cfg.seed, cfg.window, ar=_ar(cfg))
    scale, offset = _units(cfg, aff)
    write_record(out / "record.csv", rec, scale, offset)
    summary = _scaled_summary(rec.summary(cfg.epsilon), scale)
    summary["units"] = "raw" if cfg.dataset.kind == "csv" else "normalized"
    summary["length"] = len(z)
    write_json(out / "summary.json", summary)
    write_json(out / "manifest.json", manifest(cfg, normalization={"offset": aff.offset, "scale": aff.scale}))
    return 0


def compare(cfg: RunConfig, models=("wass", "rmse", "ar", "naive"), seeds=None, trend: TrendSpec | None = None) -> list[dict]:
    """Rows of mean/std across modes per model, averaged over ``seeds``.

    Per-mode averages are first averaged over seeds, then summarized.
    """
    seeds = [cfg.seed] if seeds is None else list(seeds)
    specs = [model_spec(m) if isinstance(m, str) else m for m in models]
    per_model = {s.name: {"rmse": [], "dw": [], "refits": [], "conv": []} for s in specs}
    pipe = cfg.pipeline()
    for seed in seeds:
        run_cfg = dataclasses.replace(cfg, seed=seed)
        _, z, aff = load_dataset(run_cfg, trend)
        scale, _ = _units(cfg, aff)
        obs_cache: dict = {}
        dw_cache: dict = {}
        for spec in specs:
            if cfg.threshold and spec.kind in ("wasserstein", "rmse") and spec.threshold is None:
                spec = dataclasses.replace(spec, threshold=cfg.threshold)
            rec = run_model(z, spec, pipe, seed, cfg.window, obs_cache, dw_cache, ar=_ar(cfg))
            s = rec.summary(cfg.epsilon)
            row = per_model[spec.name]
            row["rmse"].append(np.array(s["mode_rmse"]) * scale)
            row["dw"].append(np.array(s["mode_dw"]) * scale)
            row["refits"].append(s["refit_count"])
            row["conv"].append(s["convergence_steps"])
    rows = []
    for name, row in per_model.items():
        r = np.mean(row["rmse"], axis=0)
        d = np.mean(row["dw"], axis=0)
        conv = np.mean(row["conv"], axis=0)
        rows.append(
            {
                "model": name,
                "avg_rmse": float(r.mean()),
                "std_rmse": float(r.std()),
                "avg_dw": float(d.mean()),
                "std_dw": float(d.std()),
                "refits": float(np.mean(row["refits"])),
                "convergence_mean": float(conv.mean()),
                "convergence_std": float(conv.std()),
                "seeds": len(seeds),
                "per_seed_rmse": [float(np.mean(v)) for v in row["rmse"]],
            }
        )
    return rows


def table1_grid(amplitudes=TABLE1_AMPLITUDES, periods=TABLE1_PERIODS) -> list[TrendSpec]:
    """A = 0 appears once; every other amplitude is crossed with every period."""
    grid = []
    for a in amplitudes:
        if a == 0:
            grid.append(TrendSpec(0.0, 1.0))
        else:
            grid.extend(TrendSpec(a, p) for p in periods)
    return grid


def emit_table1(cfg: RunConfig, models=("rmse", "wass", "ar"), seeds=None, amplitudes=TABLE1_AMPLITUDES, periods=TABLE1_PERIODS) -> list[dict]:
    """One row per (A, T, model) with mean +- std across modes."""
    rows = []
    for trend in table1_grid(amplitudes, periods):
        for r in compare(cfg, models, seeds, trend):
            rows.append(
                {
                    "amplitude": trend.amplitude,
                    "period": None if trend.amplitude == 0 else trend.period,
                    **r,
                }
            )
    return rows


def format_table1(rows: list[dict]) -> str:
    """Markdown table in the layout of the trend comparison: one line per (A, T)."""
    models = list(dict.fromkeys(r["model"] for r in rows))
    head = "| A | T | " + " | ".join(f"{m} RMSE | {m} d_W" for m in models) + " |"
    sep = "|" + "---|" * (2 + 2 * len(models))
    lines = [head, sep]
    keys = list(dict.fromkeys((r["amplitude"], r["period"]) for r in rows))
    for a, p in keys:
        cells = []
        for m in models:
            r = next(x for x in rows if x["model"] == m and x["amplitude"] == a and x["period"] == p)
            cells.append(f"{r['avg_rmse']:.3f} ± {r['std_rmse']:.3f}")
            cells.append(f"{r['avg_dw']:.3f} ± {r['std_dw']:.3f}")
        period = "-" if p is None else f"{p:g}"
        lines.append(f"| {a:g} | {period} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def format_comparison(rows: list[dict]) -> str:
    lines = ["model     avg_rmse        avg_dw          refits  conv_steps"]
    for r in rows:
        lines.append(
            f"{r['model']:<9} {r['avg_rmse']:.4f}±{r['std_rmse']:.4f}  {r['avg_dw']:.4f}±{r['std_dw']:.4f}"
            f"  {r['refits']:6.1f}  {r['convergence_mean']:.1f}±{r['convergence_std']:.1f}"
        )
    return "\n".join(lines) + "\n"
