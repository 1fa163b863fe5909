"""Dense linear algebra kernel: Cholesky factorization, solves, inverses, and
the element-wise maximum, Frobenius, and maximum-row-sum norms.

Matrices are plain two-dimensional float64 numpy arrays (row-major).
``as_matrix`` is the validating entry point for user-supplied data; internal
callers pass arrays through unchecked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric

# Pivots at or below PD_PIVOT_RTOL x (largest diagonal entry) count as zero,
# so rank-deficient residual covariances (T < N) are flagged rather than
# silently factored.
PD_PIVOT_RTOL = 1e-12
SYMMETRY_RTOL = 1e-12


def as_matrix(obj) -> np.ndarray:
    """Coerce user input to a 2-D float64 array, rejecting NaN/Inf entries."""
    a = np.asarray(obj, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return a


def check_symmetric(a: np.ndarray, rtol: float = SYMMETRY_RTOL) -> None:
    """Raise NotSymmetric if max |A - A'| exceeds rtol x max |A|."""
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix is not square: {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - a.T)) > rtol * max(scale, 1e-300):
        raise NotSymmetric("matrix is asymmetric beyond tolerance")


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with A = L L'."""

    lower: np.ndarray

    @property
    def size(self) -> int:
        return self.lower.shape[0]


def cholesky(a: np.ndarray) -> CholeskyFactor:
    """Factor a symmetric positive definite matrix as L L'.

    Raises NotSymmetric on asymmetry beyond tolerance and NotPositiveDefinite
    when factorization fails or any pivot is at most PD_PIVOT_RTOL times the
    largest diagonal entry.
    """
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    check_symmetric(a)
    diag = np.diagonal(a)
    threshold = PD_PIVOT_RTOL * (np.max(diag) if diag.size else 0.0)
    if np.min(diag) <= threshold:
        raise NotPositiveDefinite("diagonal entry at or below pivot threshold")
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    # pivots of the outer-product recurrence are the squared factor diagonal
    if np.min(np.diagonal(lower)) ** 2 <= threshold:
        raise NotPositiveDefinite("pivot at or below threshold")
    return CholeskyFactor(lower)


def solve(chol: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Solve A x = b given the factor of A, for vector or matrix b."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != chol.size:
        raise DimensionMismatch(f"factor size {chol.size} does not match rhs rows {b.shape[0]}")
    y = solve_triangular(chol.lower, b, lower=True, check_finite=False)
    return solve_triangular(chol.lower, y, lower=True, trans="T", check_finite=False)


def inverse(chol: CholeskyFactor) -> np.ndarray:
    """Invert via the factor; output symmetrized by averaging with its transpose."""
    inv = solve(chol, np.eye(chol.size))
    return (inv + inv.T) / 2.0


def norm_max(a: np.ndarray) -> float:
    """Element-wise maximum norm: max |a_ij|."""
    return float(np.max(np.abs(a)))


def norm_frobenius(a: np.ndarray) -> float:
    """Frobenius norm: sqrt(sum a_ij^2)."""
    return float(np.sqrt(np.sum(np.square(a))))


def norm_rowsum(a: np.ndarray) -> float:
    """Maximum absolute row sum norm: max_i sum_j |a_ij|."""
    return float(np.max(np.sum(np.abs(a), axis=1)))


def read_matrix_csv(path) -> np.ndarray:
    """Read a plain comma-separated numeric matrix (no header)."""
    rows: list[list[float]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(tok) for tok in line.split(",")])
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: non-numeric entry") from exc
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DimensionMismatch(f"{path}: ragged rows")
    return as_matrix(rows)


def write_matrix_csv(path, a: np.ndarray) -> None:
    """Write a matrix as plain comma-separated rows (no header, round-trip exact)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        for row in a:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")
