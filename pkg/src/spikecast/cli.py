"""Command line entry point: ``spikecast {generate,run,compare,table1}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, apply_overrides, load_config
from .experiments import (
    compare,
    emit_table1,
    format_comparison,
    format_table1,
    load_dataset,
    manifest,
    run_experiment,
)
from .io import write_json, write_series


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override it")
    p.add_argument("--dataset", help="lorenz | csv:<path>")
    p.add_argument("--model", help="wass | rmse | ar | naive")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--neurons", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--threshold", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikecast", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    gen = sub.add_parser("generate", help="write the evolving Lorenz63 series as CSV")
    _common(gen)
    gen.add_argument("--amplitude", type=float, help="trend amplitude")
    gen.add_argument("--period", type=float, help="trend period in steps")
    run = sub.add_parser("run", help="run one model and write record/summary/manifest")
    _common(run)
    cmp_ = sub.add_parser("compare", help="compare several models on the same series")
    _common(cmp_)
    cmp_.add_argument("--models", default="wass,rmse,ar,naive")
    cmp_.add_argument("--seeds", help="comma-separated seeds (default: --seed)")
    tab = sub.add_parser("table1", help="trend grid A x T for several models")
    _common(tab)
    tab.add_argument("--models", default="rmse,wass,ar")
    tab.add_argument("--seeds", help="comma-separated seeds (default: --seed)")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = dict(
        dataset=args.dataset, model=args.model, seed=args.seed, out=args.out,
        neurons=args.neurons, window=args.window, threshold=args.threshold,
    )
    if getattr(args, "amplitude", None) is not None:
        cfg.dataset.trend_amplitude = args.amplitude
    if getattr(args, "period", None) is not None:
        cfg.dataset.trend_period = args.period
    return apply_overrides(cfg, **overrides)


def _seeds(text, cfg):
    if not text:
        return [cfg.seed]
    return [int(s) for s in text.split(",") if s.strip()]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        if args.command == "generate":
            out.mkdir(parents=True, exist_ok=True)
            raw, _, _ = load_dataset(cfg)
            write_series(out / "series.csv", raw)
            write_json(out / "manifest.json", manifest(cfg))
            return 0
        if args.command == "run":
            return run_experiment(cfg)
        models = [m.strip() for m in args.models.split(",") if m.strip()]
        seeds = _seeds(args.seeds, cfg)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "compare":
            rows = compare(cfg, models, seeds)
            write_json(out / "comparison.json", rows)
            text = format_comparison(rows)
            (out / "comparison.txt").write_text(text, encoding="utf-8")
        else:
            rows = emit_table1(cfg, models, seeds)
            write_json(out / "table1.json", rows)
            text = format_table1(rows)
            (out / "table1.md").write_text(text, encoding="utf-8")
        write_json(out / "manifest.json", manifest(cfg, models=models, seeds=seeds))
        sys.stdout.write(text)
        return 0
    except (ConfigError, ValueError, OSError, FloatingPointError) as exc:
        print(f"spikecast: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
