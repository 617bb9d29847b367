"""Training loops: Newton's gradient descent with scheduled inversions, and SGD.

Each Newton step, per layer: assemble the layer Hessian from finite
differences of the analytic gradient, prune it, regularize it, estimate its
condition number and density, route the solve to the cheaper predicted
processor (or the forced one), and apply theta <- theta - lr * H^-1 g.
Billed times are simulated through the cost models; estimator costs are not
billed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conditioning import PruneConfig, merikoski_bound, prune_symmetric, regularize
from .matrix import NotPositiveDefinite, SingularMatrix, SymMatrix, sparsity_report
from .model import Batch, MlpModel, QuadraticBowl
from .scheduler import (
    CostModelParams,
    Processor,
    SchedulerDecision,
    TimeLedger,
    cost_classical,
    cost_quantum,
    decide,
    noisy_classical_solve,
    solve_classical,
)


class ZeroVector(ValueError):
    """hvp direction has zero norm."""


class SingularHessian(Exception):
    """The regularized Hessian could not be inverted; try a larger epsilon_reg."""


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "newton"  # "newton" | "sgd"
    learning_rate: float = 1.0
    steps: int = 100
    batch_size: int = 128
    prune: PruneConfig = field(default_factory=PruneConfig)
    epsilon_reg: float = 1e-2
    cost_params: CostModelParams = field(default_factory=CostModelParams)
    scheduler_mode: str = "hybrid"  # "hybrid" | "classical" | "quantum"
    seed: int = 0
    fd_step: float | None = None  # None: 1e-3 * (1 + ||theta_l||_inf) per layer
    sgd_step_seconds: float = 0.1  # billed per SGD step, reported not measured
    target_loss: float | None = None

    def __post_init__(self):
        if self.optimizer not in ("newton", "sgd"):
            raise ValueError("optimizer must be 'newton' or 'sgd'")
        if self.scheduler_mode not in ("hybrid", "classical", "quantum"):
            raise ValueError("scheduler_mode must be hybrid, classical, or quantum")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.steps < 0 or self.batch_size < 1:
            raise ValueError("steps must be >= 0 and batch_size >= 1")
        if self.fd_step is not None and self.fd_step <= 0:
            raise ValueError("fd_step must be > 0 when given")


@dataclass(frozen=True)
class LayerStepInfo:
    layer: int
    kappa_bound: float
    density: float
    decision: SchedulerDecision
    billed_seconds: float
    spd: bool  # regularized Hessian passed Cholesky


@dataclass(frozen=True)
class StepRecord:
    step: int
    loss: float
    accuracy: float
    layers: tuple
    cumulative_billed: float


@dataclass
class TrainLog:
    records: list
    ledger: TimeLedger
    model: object

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])


def loss_and_accuracy(model, batch) -> tuple[float, float]:
    return model.loss_and_accuracy(batch)


def gradient(model, batch) -> list[np.ndarray]:
    """Analytic per-layer gradients, one flat vector per layer."""
    return model.gradients(batch)


def default_fd_step(theta_flat: np.ndarray) -> float:
    return 1e-3 * (1.0 + float(np.abs(theta_flat).max(initial=0.0)))


def hvp(model, batch, layer: int, v, h: float) -> np.ndarray:
    """Hessian-vector product on one layer by central differences.

    Returns (grad(theta + h*v_hat) - grad(theta - h*v_hat)) * ||v|| / (2h)
    with v_hat = v/||v||; exact for quadratic losses up to round-off.
    """
    v = np.asarray(v, dtype=np.float64)
    norm_v = float(np.linalg.norm(v))
    if norm_v == 0.0:
        raise ZeroVector("hvp direction must be non-zero")
    if h <= 0:
        raise ValueError("h must be > 0")
    v_hat = v / norm_v
    theta = model.get_layer_flat(layer)
    try:
        model.set_layer_flat(layer, theta + h * v_hat)
        g_plus = gradient(model, batch)[layer]
        model.set_layer_flat(layer, theta - h * v_hat)
        g_minus = gradient(model, batch)[layer]
    finally:
        model.set_layer_flat(layer, theta)
    return (g_plus - g_minus) * (norm_v / (2.0 * h))


def layer_hessian(model, batch, layer: int, h: float | None = None) -> SymMatrix:
    """Assemble the layer's Hessian column by column via hvp on basis vectors.

    The raw assembly is symmetrized as (H + H')/2 before construction.
    """
    n = model.layer_param_count(layer)
    if h is None:
        h = default_fd_step(model.get_layer_flat(layer))
    H = np.empty((n, n))
    e = np.zeros(n)
    for i in range(n):
        e[i] = 1.0
        H[:, i] = hvp(model, batch, layer, e, h)
        e[i] = 0.0
    return SymMatrix((H + H.T) / 2.0)


def _quantum_seed(seed: int, step: int, layer: int) -> int:
    return ((seed * 1_000_003 + step) * 10_007 + layer) % (2**63)


def _condition_and_decide(H: SymMatrix, config: TrainConfig):
    """Prune, regularize, estimate features, and pick a processor."""
    pruned, _ = prune_symmetric(H, config.prune)
    H_reg = regularize(pruned, config.epsilon_reg)
    try:
        kappa = merikoski_bound(H_reg)
        spd = True
    except NotPositiveDefinite:
        kappa = math.inf  # ill-conditioned sentinel: forces the classical route
        spd = False
    density = max(sparsity_report(H_reg).density, 1.0 / (H_reg.n * H_reg.n))
    n = H_reg.n
    if config.scheduler_mode == "hybrid":
        decision = decide(n, max(kappa, 1.0), density, config.cost_params)
    else:
        t_c = cost_classical(n, config.cost_params)
        t_q = cost_quantum(n, max(kappa, 1.0), density, config.cost_params)
        forced = (
            Processor.CLASSICAL
            if config.scheduler_mode == "classical"
            else Processor.QUANTUM
        )
        decision = SchedulerDecision(forced, t_c, t_q, (n, kappa, density))
    return H_reg, kappa, density, spd, decision


def newton_step(
    model, batch, config: TrainConfig, ledger: TimeLedger, step: int = 0, eval_batch=None
) -> StepRecord:
    """One Newton's-GD step across all layers; returns the step record.

    Loss and accuracy are evaluated after the update, on eval_batch when
    given (the training loop passes the full split) else on the step batch.
    """
    grads = gradient(model, batch)
    # per-layer solves are independent reads of the pre-step parameters;
    # updates and ledger appends happen afterwards, in layer order
    layer_infos = []
    updates = []
    for layer in range(model.n_layers):
        H = layer_hessian(model, batch, layer, config.fd_step)
        H_reg, kappa, density, spd, decision = _condition_and_decide(H, config)
        g = grads[layer]
        try:
            if decision.processor is Processor.QUANTUM:
                # quantum emulation billed at decision.t_quantum_pred, which was
                # computed from the same (kappa, density) features
                u = noisy_classical_solve(
                    H_reg, g, config.cost_params.epsilon_prec,
                    _quantum_seed(config.seed, step, layer),
                )
            else:
                u = solve_classical(H_reg, g)
        except (SingularMatrix, NotPositiveDefinite) as exc:
            raise SingularHessian(
                f"layer {layer} inversion failed ({exc}); try a larger epsilon_reg"
            ) from exc
        updates.append(u)
        layer_infos.append(
            LayerStepInfo(layer, kappa, density, decision, decision.chosen_time, spd)
        )
    for layer, u in enumerate(updates):
        model.set_layer_flat(layer, model.get_layer_flat(layer) - config.learning_rate * u)
        ledger.record(layer_infos[layer].decision)
    loss, accuracy = loss_and_accuracy(model, eval_batch if eval_batch is not None else batch)
    return StepRecord(step, loss, accuracy, tuple(layer_infos), ledger.total)


def sgd_step(model, batch, config: TrainConfig, step: int = 0, eval_batch=None,
             cumulative_billed: float = 0.0) -> StepRecord:
    """One SGD step: theta <- theta - lr * grad; billed a flat configured time."""
    grads = gradient(model, batch)
    for layer in range(model.n_layers):
        model.set_layer_flat(
            layer, model.get_layer_flat(layer) - config.learning_rate * grads[layer]
        )
    loss, accuracy = loss_and_accuracy(model, eval_batch if eval_batch is not None else batch)
    return StepRecord(
        step, loss, accuracy, (), cumulative_billed + config.sgd_step_seconds
    )


def _build_model(config: TrainConfig, dataset, layer_sizes, rng_init):
    if isinstance(dataset, QuadraticBowl):
        dataset.set_layer_flat(0, rng_init.standard_normal(dataset.layer_param_count(0)))
        return dataset
    in_dim = dataset.inputs.shape[1]
    n_classes = int(dataset.labels.max()) + 1
    sizes = tuple(layer_sizes) if layer_sizes else (in_dim, 16, n_classes)
    if sizes[0] != in_dim:
        raise ValueError(f"model input {sizes[0]} does not match data dim {in_dim}")
    return MlpModel.init(sizes, rng_init)


def train(config: TrainConfig, dataset, layer_sizes=None, raw_hessian_hook=None) -> TrainLog:
    """Run the configured optimizer; deterministic for a fixed config.seed.

    dataset is either a Dataset (classification) or a QuadraticBowl. Stops
    after config.steps, or earlier once the post-step loss reaches
    config.target_loss. raw_hessian_hook(step, layer, H) is called on each
    unconditioned layer Hessian (diagnostics only).
    """
    ss = np.random.SeedSequence(config.seed)
    rng_init, rng_batch = (np.random.default_rng(c) for c in ss.spawn(2))
    model = _build_model(config, dataset, layer_sizes, rng_init)
    is_bowl = isinstance(dataset, QuadraticBowl)
    if not is_bowl:
        train_idx = np.asarray(dataset.train_idx)
        full = Batch(dataset.inputs[train_idx], dataset.labels[train_idx])

    ledger = TimeLedger()
    records = []
    for step in range(config.steps):
        if is_bowl:
            batch, eval_batch = None, None
        else:
            pick = rng_batch.choice(
                train_idx.size, size=min(config.batch_size, train_idx.size), replace=False
            )
            batch = Batch(full.inputs[pick], full.labels[pick])
            eval_batch = full
        if config.optimizer == "sgd":
            prev = records[-1].cumulative_billed if records else 0.0
            record = sgd_step(model, batch, config, step, eval_batch, prev)
        else:
            if raw_hessian_hook is not None:
                for layer in range(model.n_layers):
                    raw_hessian_hook(
                        step, layer, layer_hessian(model, batch, layer, config.fd_step)
                    )
            record = newton_step(model, batch, config, ledger, step, eval_batch)
        records.append(record)
        if config.target_loss is not None and record.loss <= config.target_loss:
            break
    return TrainLog(records, ledger, model)
