"""Run configuration: strict JSON load/save for reproducible experiments.

Unknown keys anywhere in the file are a load error, so config typos fail
fast instead of silently running defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .conditioning import PruneConfig
from .scheduler import CostModelParams
from .training import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    sparsity_grid: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.65, 0.7)
    epsilon_grid: tuple = (1e-3, 1e-2, 1e-1, 0.3, 0.9)
    crossover_n: tuple = (16, 64, 256, 1024)
    crossover_kappa: tuple = (1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6)
    crossover_density: tuple = (0.05, 0.1, 0.3, 0.5, 1.0)


@dataclass(frozen=True)
class RunConfig:
    optimizer: str = "newton"
    learning_rate: float = 1.0
    steps: int = 100
    batch_size: int = 128
    prune: PruneConfig = field(default_factory=PruneConfig)
    epsilon_reg: float = 1e-2
    cost_params: CostModelParams = field(default_factory=CostModelParams)
    scheduler_mode: str = "hybrid"
    seed: int = 0
    fd_step: float | None = None
    sgd_step_seconds: float = 0.1
    target_loss: float | None = None
    sgd_learning_rate: float = 0.1  # used for the SGD baseline in compare runs
    layer_sizes: tuple | None = None
    dataset: dict = field(default_factory=lambda: {"kind": "gaussian_blobs"})
    out_dir: str = "runs"
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def to_train_config(self, **overrides) -> TrainConfig:
        kwargs = dict(
            optimizer=self.optimizer,
            learning_rate=self.learning_rate,
            steps=self.steps,
            batch_size=self.batch_size,
            prune=self.prune,
            epsilon_reg=self.epsilon_reg,
            cost_params=self.cost_params,
            scheduler_mode=self.scheduler_mode,
            seed=self.seed,
            fd_step=self.fd_step,
            sgd_step_seconds=self.sgd_step_seconds,
            target_loss=self.target_loss,
        )
        kwargs.update(overrides)
        return TrainConfig(**kwargs)


def _check_keys(section: dict, allowed, where: str):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _parse_section(cls, data: dict, where: str, tuples=()):
    names = [f.name for f in dataclasses.fields(cls)]
    _check_keys(data, names, where)
    kwargs = {k: tuple(v) if k in tuples else v for k, v in data.items()}
    return cls(**kwargs)


def run_config_from_dict(data: dict) -> RunConfig:
    names = [f.name for f in dataclasses.fields(RunConfig)]
    _check_keys(data, names, "run config")
    kwargs = dict(data)
    if "prune" in kwargs:
        kwargs["prune"] = _parse_section(PruneConfig, kwargs["prune"], "prune")
    if "cost_params" in kwargs:
        kwargs["cost_params"] = _parse_section(CostModelParams, kwargs["cost_params"], "cost_params")
    if "sweep" in kwargs:
        kwargs["sweep"] = _parse_section(
            SweepConfig,
            kwargs["sweep"],
            "sweep",
            tuples=("sparsity_grid", "epsilon_grid", "crossover_n", "crossover_kappa", "crossover_density"),
        )
    if kwargs.get("layer_sizes") is not None:
        kwargs["layer_sizes"] = tuple(kwargs["layer_sizes"])
    if "dataset" in kwargs and not isinstance(kwargs["dataset"], dict):
        raise ConfigError("dataset must be a table of dataset parameters")
    return RunConfig(**kwargs)


def run_config_to_dict(cfg: RunConfig) -> dict:
    out = dataclasses.asdict(cfg)
    out["sweep"] = {k: list(v) for k, v in dataclasses.asdict(cfg.sweep).items()}
    if cfg.layer_sizes is not None:
        out["layer_sizes"] = list(cfg.layer_sizes)
    return out


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return run_config_from_dict(data)


def save_run_config(cfg: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(run_config_to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")
