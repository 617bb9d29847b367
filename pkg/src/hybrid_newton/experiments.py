"""Experiment recipes over the training loop, with CSV/JSON outputs.

All recipes are deterministic for a fixed config: identical configs produce
byte-identical CSVs. Floats are written with repr (shortest round-trip,
decimal point, no locale).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import os

import numpy as np

from .config import RunConfig, run_config_to_dict
from .datasets import load_idx, make_synthetic
from .scheduler import calibrate_classical, decide
from .training import TrainLog, train

STEP_CSV_COLUMNS = [
    "step",
    "optimizer",
    "loss",
    "accuracy",
    "layer",
    "kappa_bound",
    "density",
    "decision",
    "billed_s",
    "cumulative_s",
]

ESTIMATOR_NOTE = (
    "billed times are simulated from the cost models; condition-number and "
    "density estimation costs are excluded from the ledger"
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def build_dataset(cfg: RunConfig):
    ds = dict(cfg.dataset)
    kind = ds.pop("kind", "gaussian_blobs")
    if kind == "idx":
        return load_idx(
            ds["images"],
            ds["labels"],
            downsample_to=ds.get("downsample_to"),
            holdout=float(ds.get("holdout", 0.1)),
        )
    seed = int(ds.pop("seed", cfg.seed))
    return make_synthetic(kind, ds, seed)


def run_training(cfg: RunConfig, dataset=None, **overrides) -> TrainLog:
    if dataset is None:
        dataset = build_dataset(cfg)
    return train(cfg.to_train_config(**overrides), dataset, layer_sizes=cfg.layer_sizes)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _step_rows(optimizer_name: str, log: TrainLog):
    rows = []
    for rec in log.records:
        if not rec.layers:
            rows.append(
                (rec.step, optimizer_name, rec.loss, rec.accuracy, -1, "", "", "sgd",
                 rec.cumulative_billed - (rows[-1][9] if rows else 0.0), rec.cumulative_billed)
            )
            continue
        for info in rec.layers:
            rows.append(
                (
                    rec.step,
                    optimizer_name,
                    rec.loss,
                    rec.accuracy,
                    info.layer,
                    info.kappa_bound,
                    info.density,
                    info.decision.processor.value,
                    info.billed_seconds,
                    rec.cumulative_billed,
                )
            )
    return rows


def _run_summary(cfg: RunConfig, extra: dict) -> dict:
    cfg_dict = run_config_to_dict(cfg)
    digest = hashlib.sha256(
        json.dumps(cfg_dict, sort_keys=True).encode("utf-8")
    ).hexdigest()[:12]
    summary = {"run_id": digest, "config": cfg_dict, "notes": ESTIMATOR_NOTE}
    summary.update(extra)
    return summary


def _write_summary(out_dir, name, summary):
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return path


def _json_default(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(f"cannot serialize {obj!r}")


def steps_to_best(losses) -> int:
    """1-based step count until the run first attains its minimum loss."""
    losses = list(losses)
    return losses.index(min(losses)) + 1 if losses else 0


def steps_to_reach(losses, bar: float) -> int | None:
    """1-based step count until loss <= bar, or None if never reached."""
    for i, loss in enumerate(losses):
        if loss <= bar:
            return i + 1
    return None


def run_compare(cfg: RunConfig, out_dir: str) -> dict:
    """SGD vs forced-classical vs forced-quantum vs hybrid Newton.

    SGD runs the full step budget and its best loss becomes the shared
    convergence bar; each Newton variant stops once it reaches the bar.
    Writes steps.csv and summary.json mirroring a steps/time-per-step/time
    table.
    """
    os.makedirs(out_dir, exist_ok=True)
    dataset = build_dataset(cfg)

    sgd_log = run_training(
        cfg, dataset, optimizer="sgd", learning_rate=cfg.sgd_learning_rate, target_loss=None
    )
    bar = float(min(r.loss for r in sgd_log.records)) if sgd_log.records else math.inf

    runs = {"sgd": sgd_log}
    for mode in ("classical", "quantum", "hybrid"):
        runs[mode] = run_training(
            cfg, dataset, optimizer="newton", scheduler_mode=mode, target_loss=bar
        )

    rows = []
    for name in ("sgd", "classical", "quantum", "hybrid"):
        rows.extend(_step_rows(name, runs[name]))
    csv_path = os.path.join(out_dir, "steps.csv")
    _write_csv(csv_path, STEP_CSV_COLUMNS, rows)

    table = {}
    for name, log in runs.items():
        if log.records:
            losses = [r.loss for r in log.records]
            steps = steps_to_best(losses) if name == "sgd" else (
                steps_to_reach(losses, bar) or len(losses)
            )
            total = log.records[-1].cumulative_billed
            reached = (min(losses) <= bar) if name != "sgd" else True
        else:
            steps, total, reached = 0, 0.0, False
        table[name] = {
            "steps": steps,
            "time_per_step_s": total / max(len(log.records), 1),
            "time_s": total,
            "final_loss": log.records[-1].loss if log.records else None,
            "final_accuracy": log.records[-1].accuracy if log.records else None,
            "reached_bar": reached,
        }
    summary = _run_summary(cfg, {"convergence_bar": bar, "table": table})
    _write_summary(out_dir, "summary.json", summary)
    return summary


def run_single(cfg: RunConfig, out_dir: str, mode: str | None = None) -> dict:
    """One training run (mode: hybrid|classical|quantum|sgd) -> steps.csv."""
    os.makedirs(out_dir, exist_ok=True)
    overrides = {}
    name = cfg.optimizer
    if mode == "sgd":
        overrides = {"optimizer": "sgd", "learning_rate": cfg.sgd_learning_rate}
        name = "sgd"
    elif mode in ("hybrid", "classical", "quantum"):
        overrides = {"optimizer": "newton", "scheduler_mode": mode}
        name = "newton"
    log = run_training(cfg, **overrides)
    csv_path = os.path.join(out_dir, "steps.csv")
    _write_csv(csv_path, STEP_CSV_COLUMNS, _step_rows(name, log))
    final = log.records[-1] if log.records else None
    summary = _run_summary(
        cfg,
        {
            "mode": mode or cfg.scheduler_mode,
            "steps_run": len(log.records),
            "final_loss": final.loss if final else None,
            "final_accuracy": final.accuracy if final else None,
            "billed_classical_s": log.ledger.billed_classical,
            "billed_quantum_s": log.ledger.billed_quantum,
        },
    )
    _write_summary(out_dir, "summary.json", summary)
    return summary


def run_sweep(kind: str, cfg: RunConfig, out_dir: str) -> str:
    """Crossover, sparsity, or regularization sweep -> CSV path."""
    os.makedirs(out_dir, exist_ok=True)
    if kind == "crossover":
        return _sweep_crossover(cfg, out_dir)
    if kind == "sparsity":
        return _sweep_sparsity(cfg, out_dir)
    if kind == "regularization":
        return _sweep_regularization(cfg, out_dir)
    raise ValueError(f"unknown sweep kind {kind!r}")


def _sweep_crossover(cfg: RunConfig, out_dir: str) -> str:
    rows = []
    params = cfg.cost_params
    for n in cfg.sweep.crossover_n:
        for kappa in cfg.sweep.crossover_kappa:
            for density in cfg.sweep.crossover_density:
                d = decide(int(n), float(kappa), float(density), params)
                rows.append(
                    (int(n), float(kappa), float(density),
                     d.t_classical_pred, d.t_quantum_pred, d.processor.value)
                )
    path = os.path.join(out_dir, "crossover.csv")
    _write_csv(path, ["n", "kappa", "density", "t_classical_s", "t_quantum_s", "decision"], rows)
    return path


def _kappa_bound_values(log: TrainLog):
    return [info.kappa_bound for rec in log.records for info in rec.layers]


def _mean_kappa_bound(log: TrainLog) -> float:
    values = _kappa_bound_values(log)
    return float(np.mean(values)) if values else math.nan


def _sweep_sparsity(cfg: RunConfig, out_dir: str) -> str:
    dataset = build_dataset(cfg)
    rows = []
    for target in cfg.sweep.sparsity_grid:
        prune = dataclasses.replace(cfg.prune, target_sparsity=float(target))
        log = run_training(cfg, dataset, optimizer="newton", prune=prune)
        final = log.records[-1]
        all_spd = all(info.spd for rec in log.records for info in rec.layers)
        rows.append(
            (float(target), final.loss, final.accuracy, _mean_kappa_bound(log), all_spd)
        )
    path = os.path.join(out_dir, "sparsity.csv")
    _write_csv(
        path,
        ["target_sparsity", "final_loss", "final_accuracy", "mean_kappa_bound", "all_spd"],
        rows,
    )
    return path


def _sweep_regularization(cfg: RunConfig, out_dir: str) -> str:
    dataset = build_dataset(cfg)
    rows = []
    for eps in cfg.sweep.epsilon_grid:
        log = run_training(cfg, dataset, optimizer="newton", epsilon_reg=float(eps))
        final = log.records[-1]
        rows.append((float(eps), final.loss, final.accuracy, _mean_kappa_bound(log)))
    path = os.path.join(out_dir, "regularization.csv")
    _write_csv(
        path, ["epsilon_reg", "final_loss", "final_accuracy", "mean_kappa_bound"], rows
    )
    return path


def hessian_report(cfg: RunConfig, out_dir: str) -> str:
    """Per-step raw-Hessian diagnostics: density and p%-count distributions.

    Reports the unconditioned layer Hessians as training encounters them,
    one row per (step, layer, p-level) with count statistics, alongside the
    conditioned kappa-bound the scheduler saw.
    """
    from .matrix import sparsity_report as _sparsity

    os.makedirs(out_dir, exist_ok=True)
    dataset = build_dataset(cfg)
    raw_stats = []

    def hook(step, layer, H):
        rep = _sparsity(H)
        raw_stats.append((step, layer, rep.density, rep.p_sparsity))

    log = train(cfg.to_train_config(optimizer="newton"), dataset,
                layer_sizes=cfg.layer_sizes, raw_hessian_hook=hook)

    sched_kappa = {
        (rec.step, info.layer): info.kappa_bound
        for rec in log.records
        for info in rec.layers
    }
    rows = []
    for step, layer, density, p_sparsity in raw_stats:
        for p, counts in p_sparsity.items():
            rows.append(
                (
                    step,
                    layer,
                    p,
                    density,
                    int(np.min(counts)),
                    float(np.median(counts)),
                    float(np.mean(counts)),
                    int(np.max(counts)),
                    sched_kappa.get((step, layer), math.nan),
                )
            )
    path = os.path.join(out_dir, "hessian_report.csv")
    _write_csv(
        path,
        ["step", "layer", "p_level", "raw_density", "count_min", "count_median",
         "count_mean", "count_max", "kappa_bound_conditioned"],
        rows,
    )
    return path


def run_calibration(cfg: RunConfig, sizes=(64, 128, 192, 256), repetitions: int = 5) -> dict:
    """Calibrate (c1, c2) on this machine; returns constants for persisting."""
    c1, c2 = calibrate_classical(sizes, repetitions)
    return {"c1": c1, "c2": c2, "sizes": list(sizes), "repetitions": repetitions}
