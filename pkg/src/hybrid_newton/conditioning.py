"""Hessian conditioning: condition-number bound, symmetric pruning, regularization.

Reshapes a matrix toward the properties the quantum cost model rewards:
low condition number (estimated cheaply from trace and determinant) and
low density, while keeping it positive definite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrix import NotPositiveDefinite, SymMatrix, is_spd, logdet_spd

DEGENERATE_X = 1.0 - 1e-15


@dataclass(frozen=True)
class PruneConfig:
    """target_sparsity is the fraction of off-diagonal entry pairs to zero."""

    target_sparsity: float = 0.0
    pd_check: bool = False

    def __post_init__(self):
        if not 0.0 <= self.target_sparsity < 1.0:
            raise ValueError("target_sparsity must lie in [0, 1)")


@dataclass(frozen=True)
class ConditioningReport:
    kappa_bound: float
    achieved_sparsity: float
    retained_for_pd: int
    epsilon_reg: float
    kappa_exact: float | None = None

    def __post_init__(self):
        if not (self.kappa_bound >= 1.0):
            raise ValueError("kappa_bound must be >= 1")
        if not 0.0 <= self.achieved_sparsity <= 1.0:
            raise ValueError("achieved_sparsity must lie in [0, 1]")


def merikoski_bound(A: SymMatrix) -> float:
    """Condition-number upper bound (1+x)/(1-x), x = sqrt(1 - (n/tr)^n det).

    Evaluated in the log domain so (n/tr)^n survives large n. The inner
    value is clamped to [0, 1] against round-off. Returns +inf when x
    reaches 1 - 1e-15: the bound is degenerate and the matrix should be
    treated as ill-conditioned.
    """
    n = A.n
    tr = A.trace()
    if tr <= 0.0:
        raise NotPositiveDefinite(f"trace {tr:.3e} is not positive")
    log_inner = n * (math.log(n) - math.log(tr)) + logdet_spd(A)
    log_inner = min(log_inner, 0.0)
    inner = math.exp(log_inner)
    x = math.sqrt(1.0 - inner)
    if x >= DEGENERATE_X:
        return math.inf
    return (1.0 + x) / (1.0 - x)


def regularize(A: SymMatrix, epsilon_reg: float) -> SymMatrix:
    """A + epsilon_reg * I; off-diagonals untouched."""
    if epsilon_reg < 0.0:
        raise ValueError("epsilon_reg must be >= 0")
    if epsilon_reg == 0.0:
        return A
    entries = np.array(A.entries)
    idx = np.arange(A.n)
    entries[idx, idx] += epsilon_reg
    return SymMatrix(entries)


def prune_symmetric(
    A: SymMatrix, cfg: PruneConfig
) -> tuple[SymMatrix, ConditioningReport]:
    """Zero the smallest-magnitude off-diagonal pairs, symmetrically.

    Ranks pairs {(i,j),(j,i)}, i<j, by |A_ij| ascending (ties broken
    lexicographically by (i,j)) and zeroes the smallest
    round(target_sparsity * n(n-1)/2) of them; rounding (rather than floor)
    keeps small matrices prunable at high targets. The diagonal is never
    touched. With pd_check on, a failed Cholesky after bulk pruning is
    repaired greedily: pruned pairs are restored one at a time in
    descending magnitude until the factorization succeeds.
    """
    n = A.n
    total_pairs = n * (n - 1) // 2
    k = int(math.floor(cfg.target_sparsity * total_pairs + 0.5))

    if cfg.pd_check and not is_spd(A):
        raise NotPositiveDefinite("unpruned matrix already fails Cholesky")

    if k == 0:
        return A, ConditioningReport(
            kappa_bound=_bound_or_inf(A),
            achieved_sparsity=0.0,
            retained_for_pd=0,
            epsilon_reg=0.0,
        )

    iu, ju = np.triu_indices(n, 1)
    mags = np.abs(A.entries[iu, ju])
    order = np.lexsort((ju, iu, mags))
    to_zero = order[:k]

    entries = np.array(A.entries)
    entries[iu[to_zero], ju[to_zero]] = 0.0
    entries[ju[to_zero], iu[to_zero]] = 0.0

    retained = 0
    if cfg.pd_check:
        while not is_spd(SymMatrix(entries)):
            # restore the largest still-pruned pair
            idx = to_zero[k - 1 - retained]
            i, j = int(iu[idx]), int(ju[idx])
            entries[i, j] = A.entries[i, j]
            entries[j, i] = A.entries[j, i]
            retained += 1

    pruned = SymMatrix(entries)
    report = ConditioningReport(
        kappa_bound=_bound_or_inf(pruned),
        achieved_sparsity=(k - retained) / total_pairs,
        retained_for_pd=retained,
        epsilon_reg=0.0,
    )
    return pruned, report


def _bound_or_inf(A: SymMatrix) -> float:
    try:
        return merikoski_bound(A)
    except NotPositiveDefinite:
        return math.inf
