"""Command-line front end.

Verbs: calibrate, train, compare, sweep {crossover,sparsity,regularization},
hessian-report. Every verb takes --config pointing at a strict-JSON run
config; --seed, --out, and --mode override the corresponding config fields.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .config import load_run_config, save_run_config
from . import experiments


def _add_common(p):
    p.add_argument("--config", required=True, help="path to a JSON run config")
    p.add_argument("--seed", type=int, default=None, help="override config.seed")
    p.add_argument("--out", default=None, help="override config.out_dir")
    p.add_argument(
        "--mode",
        choices=["hybrid", "classical", "quantum", "sgd"],
        default=None,
        help="force optimizer/scheduler mode",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybrid-newton",
        description="Newton's-GD training with scheduled classical/quantum inversions",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("calibrate", "train", "compare", "hessian-report"):
        _add_common(sub.add_parser(verb))
    sweep = sub.add_parser("sweep")
    sweep.add_argument("kind", choices=["crossover", "sparsity", "regularization"])
    _add_common(sweep)
    return parser


def _load(args):
    cfg = load_run_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out_dir=args.out)
    if args.mode == "sgd":
        cfg = dataclasses.replace(cfg, optimizer="sgd")
    elif args.mode is not None:
        cfg = dataclasses.replace(cfg, optimizer="newton", scheduler_mode=args.mode)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _load(args)

    if args.verb == "calibrate":
        result = experiments.run_calibration(cfg)
        cfg = dataclasses.replace(
            cfg,
            cost_params=dataclasses.replace(
                cfg.cost_params, c1=result["c1"], c2=result["c2"]
            ),
        )
        save_run_config(cfg, args.config)  # persist c1, c2 into the run config
        print(json.dumps(result))
        return 0

    if args.verb == "train":
        summary = experiments.run_single(cfg, cfg.out_dir, mode=args.mode)
        print(f"wrote {cfg.out_dir}/steps.csv")
        print(json.dumps({k: summary[k] for k in ("steps_run", "final_loss", "final_accuracy")}))
        return 0

    if args.verb == "compare":
        summary = experiments.run_compare(cfg, cfg.out_dir)
        print(f"wrote {cfg.out_dir}/steps.csv and summary.json")
        for name, row in summary["table"].items():
            print(
                f"{name:>10}: steps={row['steps']:>5} "
                f"time/step={row['time_per_step_s']:.4g}s time={row['time_s']:.4g}s"
            )
        return 0

    if args.verb == "sweep":
        path = experiments.run_sweep(args.kind, cfg, cfg.out_dir)
        print(f"wrote {path}")
        return 0

    if args.verb == "hessian-report":
        path = experiments.hessian_report(cfg, cfg.out_dir)
        print(f"wrote {path}")
        return 0

    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
