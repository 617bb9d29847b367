"""Newton's-GD neural network training with hybrid classical/quantum-emulated
matrix inversion scheduling."""

from .matrix import (
    MatrixError,
    NonConvergence,
    NotPositiveDefinite,
    SingularMatrix,
    SparsityReport,
    Spectrum,
    SymMatrix,
    eig_sym,
    exact_condition_number,
    logdet_spd,
    solve_classical,
    sparsity_report,
)
from .conditioning import (
    ConditioningReport,
    PruneConfig,
    merikoski_bound,
    prune_symmetric,
    regularize,
)
from .scheduler import (
    CalibrationFailed,
    CostModelParams,
    NoCrossover,
    Processor,
    SchedulerDecision,
    TimeLedger,
    calibrate_classical,
    cost_classical,
    cost_quantum,
    crossover_kappa,
    decide,
    emulate_quantum_solve,
    fit_cubic_cost,
)
from .model import Batch, LinearLeastSquares, MlpModel, QuadraticBowl
from .training import (
    SingularHessian,
    StepRecord,
    TrainConfig,
    TrainLog,
    ZeroVector,
    gradient,
    hvp,
    layer_hessian,
    loss_and_accuracy,
    newton_step,
    sgd_step,
    train,
)
from .datasets import (
    BadMagic,
    Dataset,
    DimensionMismatch,
    TruncatedFile,
    load_idx,
    make_gaussian_blobs,
    make_quadratic_bowl,
    make_synthetic,
)
from .config import RunConfig, SweepConfig, ConfigError, load_run_config, save_run_config

__all__ = [name for name in dir() if not name.startswith("_")]
