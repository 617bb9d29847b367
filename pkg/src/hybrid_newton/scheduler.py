"""Cost models, the routing decision, calibration, and quantum-solve emulation.

Classical inversion is billed as c1*n^3 + c2; the emulated quantum solver as
q1*density*kappa*log2(n/epsilon) + q2. Each solve is routed to the cheaper
predicted processor. The quantum path is an emulation: the numbers are
produced classically with epsilon-scaled noise injected, and only the billed
time follows the quantum cost model. Estimator costs (the condition-number
Cholesky and the density scan) are deliberately excluded from the ledger.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .conditioning import merikoski_bound
from .matrix import SymMatrix, solve_classical, sparsity_report


class SchedulerError(Exception):
    pass


class NoCrossover(SchedulerError):
    """Classical wins at every condition number (numerator < 0)."""


class CalibrationFailed(SchedulerError):
    pass


class Processor(enum.Enum):
    QUANTUM = "quantum"
    CLASSICAL = "classical"


@dataclass(frozen=True)
class CostModelParams:
    """Constants of the two cost formulas, all overridable by config.

    Defaults assume a laptop-class classical solver (c1=1e-10 s per n^3,
    c2=1e-4 s overhead) and an attosecond-gate quantum device with ~1e6
    gates per cost unit (q1=1e-12 s) plus 1e-4 s overhead. epsilon_prec is
    the emulated solver's solution precision; 0 means exact emulation (and
    makes the quantum cost infinite).
    """

    c1: float = 1e-10
    c2: float = 1e-4
    q1: float = 1e-12
    q2: float = 1e-4
    epsilon_prec: float = 1e-3

    def __post_init__(self):
        if self.c1 <= 0 or self.q1 <= 0:
            raise ValueError("c1 and q1 must be > 0")
        if self.c2 < 0 or self.q2 < 0:
            raise ValueError("c2 and q2 must be >= 0")
        if not 0.0 <= self.epsilon_prec < 1.0:
            raise ValueError("epsilon_prec must lie in [0, 1)")


@dataclass(frozen=True)
class SchedulerDecision:
    processor: Processor
    t_classical_pred: float
    t_quantum_pred: float
    features: tuple  # (n, kappa_estimate, density)

    @property
    def chosen_time(self) -> float:
        if self.processor is Processor.QUANTUM:
            return self.t_quantum_pred
        return self.t_classical_pred


@dataclass
class TimeLedger:
    """Cumulative simulated billing; append-only, single writer."""

    billed_classical: float = 0.0
    billed_quantum: float = 0.0
    decisions: list = field(default_factory=list)

    def record(self, decision: SchedulerDecision) -> None:
        self.decisions.append(decision)
        if decision.processor is Processor.QUANTUM:
            self.billed_quantum += decision.t_quantum_pred
        else:
            self.billed_classical += decision.t_classical_pred

    @property
    def total(self) -> float:
        return self.billed_classical + self.billed_quantum


def cost_classical(n: int, params: CostModelParams) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    return params.c1 * float(n) ** 3 + params.c2


def cost_quantum(n: int, kappa: float, density: float, params: CostModelParams) -> float:
    """q1 * density * kappa * log2(n / epsilon_prec) + q2.

    kappa = +inf (the degenerate-bound sentinel) yields +inf.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must lie in (0, 1]")
    if math.isinf(kappa) or params.epsilon_prec == 0.0:
        return math.inf
    return params.q1 * density * kappa * math.log2(n / params.epsilon_prec) + params.q2


def decide(n: int, kappa: float, density: float, params: CostModelParams) -> SchedulerDecision:
    """Route to the processor with the lower predicted time; ties go classical."""
    t_c = cost_classical(n, params)
    t_q = cost_quantum(n, kappa, density, params)
    proc = Processor.QUANTUM if t_q < t_c else Processor.CLASSICAL
    return SchedulerDecision(proc, t_c, t_q, (n, kappa, density))


def crossover_kappa(n: int, density: float, params: CostModelParams) -> float:
    """Condition number where the two predicted times meet.

    decide() returns Quantum strictly below the returned value and Classical
    at or above it. Raises NoCrossover when classical wins even at kappa=0.
    A zero numerator returns 0.0 (quantum is never selected).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 < density <= 1.0:
        raise ValueError("density must lie in (0, 1]")
    numerator = params.c1 * float(n) ** 3 + params.c2 - params.q2
    if numerator < 0.0:
        raise NoCrossover("classical is cheaper at every condition number")
    if params.epsilon_prec == 0.0:
        return 0.0
    return numerator / (params.q1 * density * math.log2(n / params.epsilon_prec))


def fit_cubic_cost(sizes, timings) -> tuple[float, float]:
    """Least-squares (c1, c2) for t ~ c1*n^3 + c2 with c1 > 0, c2 >= 0.

    A negative intercept is clamped to zero and c1 refit through the origin.
    """
    ns = np.asarray(sizes, dtype=np.float64)
    ts = np.asarray(timings, dtype=np.float64)
    design = np.stack([ns**3, np.ones_like(ns)], axis=1)
    (c1, c2), *_ = np.linalg.lstsq(design, ts, rcond=None)
    if c2 < 0.0:
        c2 = 0.0
        c1 = float(np.dot(ts, ns**3) / np.dot(ns**3, ns**3))
    if c1 <= 0.0:
        raise CalibrationFailed(f"fitted c1 = {c1:.3e} is not positive")
    return float(c1), float(c2)


def calibrate_classical(
    sizes, repetitions: int = 5, rng: np.random.Generator | None = None
) -> tuple[float, float]:
    """Time solve_classical on random SPD systems and fit the cubic model.

    Takes the median of `repetitions` wall-clock timings per size. Requires
    at least 3 distinct sizes, each >= 16.
    """
    distinct = sorted(set(int(s) for s in sizes))
    if len(distinct) < 3:
        raise ValueError("calibration needs >= 3 distinct sizes")
    if min(distinct) < 16:
        raise ValueError("calibration sizes must each be >= 16")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    medians = []
    for n in distinct:
        m = rng.standard_normal((n, n))
        A = SymMatrix(m @ m.T + n * np.eye(n))
        b = rng.standard_normal(n)
        samples = []
        for _ in range(repetitions):
            t0 = time.perf_counter()
            solve_classical(A, b)
            samples.append(time.perf_counter() - t0)
        medians.append(float(np.median(samples)))
    return fit_cubic_cost(distinct, medians)


def noisy_classical_solve(A: SymMatrix, b, epsilon_prec: float, rng_seed: int) -> np.ndarray:
    """Classical solve plus seeded isotropic noise of relative norm epsilon_prec."""
    x0 = solve_classical(A, b)
    norm_x0 = float(np.linalg.norm(x0))
    if epsilon_prec == 0.0 or norm_x0 == 0.0:
        return x0
    g = np.random.default_rng(rng_seed).standard_normal(A.n)
    norm_g = float(np.linalg.norm(g))
    if norm_g == 0.0:
        return x0
    return x0 + g * (epsilon_prec * norm_x0 / norm_g)


def emulate_quantum_solve(
    A: SymMatrix, b, params: CostModelParams, rng_seed: int
) -> tuple[np.ndarray, float]:
    """Emulated quantum linear solve.

    The solution is computed classically and perturbed with seeded isotropic
    noise scaled to ||noise|| = epsilon_prec * ||x||; the billed time follows
    the quantum cost model with the Merikoski kappa bound and the measured
    density. Deterministic for a fixed seed.
    """
    kappa = merikoski_bound(A)
    density = max(sparsity_report(A).density, 1.0 / (A.n * A.n))
    billed = cost_quantum(A.n, max(kappa, 1.0), density, params)
    return noisy_classical_solve(A, b, params.epsilon_prec, rng_seed), billed
