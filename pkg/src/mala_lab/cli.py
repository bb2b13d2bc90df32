"""Command line interface.

    mala-lab run <config.yaml> [--workers K] [--output-dir D] [--seed S]
    mala-lab validate <config.yaml>
    mala-lab curve --ell-min A --ell-max B --points P
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import ConfigError, parse_config
from .diagnostics import speed_and_optimum
from .experiments import run_experiment


def _load_config(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _cmd_run(args) -> int:
    try:
        cfg = _load_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg = cfg.with_overrides(master_seed=args.seed)
    if args.output_dir is not None:
        cfg = cfg.with_overrides(output_dir=args.output_dir)
    summary = run_experiment(cfg, workers=args.workers)
    print(f"wrote {summary.n_rows} rows to {summary.csv_path}")
    print(f"manifest: {summary.manifest_path}")
    if summary.failures:
        print(f"{len(summary.failures)} of {summary.n_cells} cells failed "
              f"(partial results kept):", file=sys.stderr)
        for rec in summary.failures:
            print(f"  N={rec['N']} gamma={rec['gamma']} ell={rec['ell']} "
                  f"replica={rec['replica']}", file=sys.stderr)
        return 1
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = _load_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    cells = len(cfg.n_grid) * len(cfg.gamma_grid) * len(cfg.ell_grid) * cfg.replicas
    print(f"OK: {cfg.experiment} over {cells} cells, output to {cfg.output_dir}")
    return 0


def _cmd_curve(args) -> int:
    if args.ell_min <= 0 or args.ell_max <= args.ell_min or args.points < 2:
        print("need 0 < ell-min < ell-max and points >= 2", file=sys.stderr)
        return 2
    grid = np.linspace(args.ell_min, args.ell_max, args.points)
    curve = speed_and_optimum(grid)
    print("ell,alpha,h,kind")
    for ell, alpha, speed in zip(curve.ells, curve.alphas, curve.speeds):
        print(f"{ell!r},{alpha!r},{speed!r},grid")
    print(f"{curve.ell_star!r},{curve.alpha_star!r},{curve.h_star!r},optimum")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mala-lab",
        description="Run scaling experiments for the preconditioned Langevin sampler.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="path to the YAML config")
    p_run.add_argument("--workers", type=int, default=1, help="worker processes")
    p_run.add_argument("--output-dir", default=None, help="override output_dir")
    p_run.add_argument("--seed", type=int, default=None, help="override master_seed")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config", help="path to the YAML config")
    p_val.set_defaults(func=_cmd_validate)

    p_curve = sub.add_parser("curve", help="print the theoretical speed curve as CSV")
    p_curve.add_argument("--ell-min", type=float, default=0.05)
    p_curve.add_argument("--ell-max", type=float, default=4.0)
    p_curve.add_argument("--points", type=int, default=200)
    p_curve.set_defaults(func=_cmd_curve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
