"""Dense symmetric matrix core.

Holds the SymMatrix container plus the classical solve path (LU with partial
pivoting), a cyclic-Jacobi eigenvalue oracle, Cholesky-based log-determinant,
and the sparsity metrics fed to the quantum cost model.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.linalg
from numba import njit

PIVOT_TOL = 1e-12
SYMMETRY_RTOL = 1e-12
JACOBI_MAX_SWEEPS = 100
P_LEVELS = (50, 75, 90, 95)


class MatrixError(Exception):
    """Base class for numerical failures in this module."""


class SingularMatrix(MatrixError):
    """A pivot underflowed the factorization threshold."""


class NotPositiveDefinite(MatrixError):
    """Cholesky hit a non-positive pivot, or an eigenvalue is <= 0."""


class NonConvergence(MatrixError):
    """The Jacobi sweep budget was exhausted before convergence."""


class SymMatrix:
    """Immutable dense symmetric n-by-n matrix, row-major float64.

    Construction validates symmetry to 1e-12 relative tolerance (measured
    against the largest entry magnitude) and stores an exactly symmetric,
    read-only array.
    """

    __slots__ = ("entries",)

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64, order="C")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("matrix dimension must be >= 1")
        if not np.isfinite(a).all():
            raise ValueError("matrix entries must be finite")
        if not np.array_equal(a, a.T):
            scale = float(np.abs(a).max())
            asym = float(np.abs(a - a.T).max())
            if asym > SYMMETRY_RTOL * scale:
                raise ValueError(
                    f"asymmetry {asym:.3e} exceeds {SYMMETRY_RTOL:.0e} relative tolerance"
                )
            a = (a + a.T) / 2.0
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    def __setattr__(self, name, value):
        raise AttributeError("SymMatrix is immutable")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(np.eye(n))

    @classmethod
    def diagonal(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    def trace(self) -> float:
        return float(np.trace(self.entries))

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


class Spectrum:
    """Eigenvalues of a symmetric matrix, sorted non-increasing."""

    __slots__ = ("eigenvalues",)

    def __init__(self, eigenvalues):
        ev = np.asarray(eigenvalues, dtype=np.float64)
        if ev.ndim != 1 or ev.size < 1:
            raise ValueError("eigenvalues must be a non-empty vector")
        if np.any(np.diff(ev) > 0):
            raise ValueError("eigenvalues must be sorted non-increasing")
        ev = ev.copy()
        ev.flags.writeable = False
        object.__setattr__(self, "eigenvalues", ev)

    def __setattr__(self, name, value):
        raise AttributeError("Spectrum is immutable")

    @property
    def largest(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def smallest(self) -> float:
        return float(self.eigenvalues[-1])


class SparsityReport:
    """Density above a tolerance plus per-row p%-magnitude counts.

    The p%-count of a row is the minimum number of entries (taken in
    descending absolute magnitude) whose absolute values sum to at least p%
    of the row's total absolute magnitude; 0 for an all-zero row.
    """

    __slots__ = ("density", "p_sparsity")

    def __init__(self, density: float, p_sparsity: dict):
        if not 0.0 <= density <= 1.0:
            raise ValueError("density must lie in [0, 1]")
        object.__setattr__(self, "density", float(density))
        object.__setattr__(self, "p_sparsity", p_sparsity)

    def __setattr__(self, name, value):
        raise AttributeError("SparsityReport is immutable")


@njit(cache=True)
def _jacobi_eigen(a, off_tol, max_sweeps):
    """Cyclic Jacobi rotations in place; returns sweeps used or -1."""
    n = a.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        off = math.sqrt(2.0 * off)
        if off <= off_tol:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = c * aip - s * aiq
                        a[p, i] = a[i, p]
                        a[i, q] = s * aip + c * aiq
                        a[q, i] = a[i, q]
    return -1


def eig_sym(A: SymMatrix, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Spectrum:
    """Eigenvalues of A by cyclic Jacobi, sorted descending.

    Iterates whole sweeps until the off-diagonal Frobenius norm drops below
    1e-12 * ||A||_F; raises NonConvergence if the sweep budget runs out.
    """
    a = np.array(A.entries, dtype=np.float64)
    if a.shape[0] == 1:
        return Spectrum(np.diag(a))
    off_tol = 1e-12 * float(np.linalg.norm(a))
    sweeps = _jacobi_eigen(a, off_tol, max_sweeps)
    if sweeps < 0:
        raise NonConvergence(f"Jacobi did not converge within {max_sweeps} sweeps")
    return Spectrum(np.sort(np.diag(a))[::-1])


def exact_condition_number(A: SymMatrix) -> float:
    """lambda_max / lambda_min via the Jacobi oracle; requires SPD."""
    spec = eig_sym(A)
    if spec.smallest <= 0.0:
        raise NotPositiveDefinite(
            f"smallest eigenvalue {spec.smallest:.3e} is not positive"
        )
    return spec.largest / spec.smallest


def cholesky_spd(A: SymMatrix) -> np.ndarray:
    """Lower Cholesky factor; NotPositiveDefinite on a non-positive pivot."""
    try:
        return np.linalg.cholesky(A.entries)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc


def is_spd(A: SymMatrix) -> bool:
    try:
        cholesky_spd(A)
        return True
    except NotPositiveDefinite:
        return False


def logdet_spd(A: SymMatrix) -> float:
    """log det(A) as 2 * sum(log L_ii) from the Cholesky factor."""
    L = cholesky_spd(A)
    return float(2.0 * np.sum(np.log(np.diag(L))))


def solve_classical(A: SymMatrix, b) -> np.ndarray:
    """Solve A x = b by LU with partial pivoting (the classical processor).

    Raises SingularMatrix when any pivot magnitude is <= 1e-12.
    """
    rhs = np.asarray(b, dtype=np.float64)
    if rhs.ndim != 1 or rhs.shape[0] != A.n:
        raise ValueError(f"rhs length {rhs.shape} does not match dimension {A.n}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A.entries, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= PIVOT_TOL:
        raise SingularMatrix(
            f"pivot magnitude {pivots.min():.3e} underflows threshold {PIVOT_TOL:.0e}"
        )
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def default_density_tol(A: SymMatrix) -> float:
    """Default 'non-zero' cutoff: 1e-10 times the largest entry magnitude."""
    return 1e-10 * float(np.abs(A.entries).max())


def sparsity_report(A: SymMatrix, tol: float | None = None) -> SparsityReport:
    """Density (fraction of |entries| > tol) and per-row p%-counts.

    p%-count per row: sort absolute values descending and take the smallest
    prefix whose sum reaches p% of the row's absolute sum.
    """
    if tol is None:
        tol = default_density_tol(A)
    if tol < 0:
        raise ValueError("tol must be >= 0")
    absa = np.abs(A.entries)
    n = A.n
    density = float(np.count_nonzero(absa > tol)) / float(n * n)
    desc = -np.sort(-absa, axis=1)
    prefix = np.cumsum(desc, axis=1)
    totals = absa.sum(axis=1)
    zero_rows = totals == 0.0
    p_sparsity = {}
    for p in P_LEVELS:
        target = (p / 100.0) * totals
        counts = (prefix < target[:, None]).sum(axis=1) + 1
        counts[zero_rows] = 0
        p_sparsity[p] = counts.astype(np.int64)
    return SparsityReport(density, p_sparsity)
