#!/usr/bin/env python3
"""Desk-scale optimizer comparison (SGD vs classical/quantum/hybrid Newton).

Reproduces the steps/time-per-step/total-time table on the synthetic blob
task. Outputs land in --out (steps.csv, summary.json).
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hybrid_newton.config import load_run_config
from hybrid_newton.experiments import run_compare


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=str(Path(__file__).resolve().parent.parent / "configs" / "desk_blobs.json"))
    ap.add_argument("--out", default="runs/desk_compare")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    cfg = load_run_config(args.config)
    if args.seed is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, seed=args.seed)
    summary = run_compare(cfg, args.out)
    print(f"convergence bar (best SGD loss): {summary['convergence_bar']:.6f}")
    for name, row in summary["table"].items():
        print(
            f"{name:>10}: steps={row['steps']:>5}  "
            f"time/step={row['time_per_step_s']:.4g}s  time={row['time_s']:.4g}s  "
            f"final_loss={row['final_loss']:.4f}"
        )


if __name__ == "__main__":
    main()
