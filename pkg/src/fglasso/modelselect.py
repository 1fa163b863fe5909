"""Penalty selection by k-fold cross-validation.

Periods are partitioned into folds (seeded random permutation split into
contiguous chunks; a flag switches to contiguous time blocks instead).  For
each fold and each grid penalty, the feasible weighted estimator is fitted on
the training periods and scored by mean squared prediction error on the
validation periods; the penalty minimizing the fold-averaged error wins, ties
going to the largest (sparsest) penalty.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dgp import CounterStream
from .errors import (
    FglassoError,
    RankDeficientRegressors,
    RankDeficientTrainingSplit,
)
from .glasso import GlassoConfig, GlassoResult, glasso_solve
from .sur import SurDataset, fit_gls, fit_ols, residual_covariance

#: tie-breaking window on the mean validation MSE
TIE_TOL = 1e-12


@dataclass(frozen=True)
class CvSpec:
    """Cross-validation settings.

    ``lambda_grid`` may be left None to derive a log-spaced grid of
    ``n_grid_points`` penalties from the full-sample residual covariance.
    ``contiguous_folds`` assigns folds as consecutive time blocks instead of
    the default seeded random partition.
    """

    n_folds: int = 5
    lambda_grid: tuple[float, ...] | None = None
    n_grid_points: int = 20
    seed: int = 0
    contiguous_folds: bool = False

    def __post_init__(self):
        if self.n_folds < 2:
            raise ValueError("need at least two folds")
        if self.n_grid_points < 2:
            raise ValueError("need at least two grid points")
        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if not grid:
                raise ValueError("lambda grid must be nonempty")
            if any(v <= 0.0 for v in grid):
                raise ValueError("lambda grid entries must be positive")
            if any(b >= a for a, b in zip(grid[:-1], grid[1:])):
                raise ValueError("lambda grid must be strictly descending")
            object.__setattr__(self, "lambda_grid", grid)


@dataclass
class CvResult:
    best_lambda: float
    mse_by_lambda: list[tuple[float, float]]
    fold_assignment: np.ndarray
    excluded: list[tuple[float, int, str]] = field(default_factory=list)


def default_lambda_grid(sigma_hat: np.ndarray, n_points: int) -> list[float]:
    """Log-spaced grid from the largest absolute off-diagonal down two decades.

    A diagonal input has no usable scale; a degenerate single-point grid
    {1e-8} is returned since every penalty then yields the same solution.
    """
    if n_points < 2:
        raise ValueError("need at least two grid points")
    sigma_hat = np.asarray(sigma_hat, dtype=np.float64)
    off = sigma_hat - np.diag(np.diagonal(sigma_hat))
    lam_max = float(np.max(np.abs(off)))
    if lam_max == 0.0:
        return [1e-8]
    return list(np.exp(np.linspace(np.log(lam_max), np.log(0.01 * lam_max), n_points)))


def assign_folds(n_periods: int, n_folds: int, seed: int, contiguous: bool = False) -> np.ndarray:
    """Fold index per period; a partition with sizes differing by at most one."""
    if n_periods < n_folds:
        raise ValueError(f"cannot split {n_periods} periods into {n_folds} folds")
    if contiguous:
        order = np.arange(n_periods)
    else:
        order = _seeded_permutation(n_periods, seed)
    sizes = np.full(n_folds, n_periods // n_folds)
    sizes[: n_periods % n_folds] += 1
    assignment = np.empty(n_periods, dtype=np.intp)
    start = 0
    for fold, size in enumerate(sizes):
        assignment[order[start : start + size]] = fold
        start += size
    return assignment


def _seeded_permutation(n: int, seed: int) -> np.ndarray:
    # Fisher-Yates on the package's counter-based stream: frozen algorithm,
    # so fold layouts never drift with numpy versions
    stream = CounterStream(seed, 0xF01D5)
    u = stream.uniform(n)
    order = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(u[n - 1 - i] * (i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def cross_validate(data: SurDataset, spec: CvSpec, glasso_config: GlassoConfig) -> CvResult:
    """Select the penalty for the feasible weighted estimator.

    For each fold, the residual covariance of the training periods feeds a
    warm-started descending sweep over the grid; each solution's weighted fit
    is scored on the held-out periods by (1 / (N * T_fold)) sum of squared
    prediction errors.  Penalties whose solve or fit fails on any fold are
    excluded (recorded in the result).  Training splits that lose full rank
    raise RankDeficientTrainingSplit naming the fold and equation.
    """
    if data.n_periods < spec.n_folds:
        raise ValueError("fewer periods than folds")
    if spec.lambda_grid is not None:
        grid = list(spec.lambda_grid)
    else:
        sigma_full = residual_covariance(fit_ols(data))
        grid = default_lambda_grid(sigma_full, spec.n_grid_points)

    assignment = assign_folds(data.n_periods, spec.n_folds, spec.seed, spec.contiguous_folds)
    mse_sum = np.zeros(len(grid))
    failed: dict[int, list[tuple[int, str]]] = {}

    for fold in range(spec.n_folds):
        val_mask = assignment == fold
        train_idx = np.flatnonzero(~val_mask)
        val_idx = np.flatnonzero(val_mask)
        try:
            train = data.subset_periods(train_idx)
        except RankDeficientRegressors as exc:
            raise RankDeficientTrainingSplit(fold, exc.equation) from exc
        sigma_train = residual_covariance(fit_ols(train))
        x_val = data.x[:, val_idx, :]
        y_val = data.y[:, val_idx]
        warm: GlassoResult | None = None
        for g, lam in enumerate(grid):
            try:
                warm_candidate = glasso_solve(
                    sigma_train, replace(glasso_config, lam=lam), warm_start=warm
                )
                fit = fit_gls(train, warm_candidate.omega_hat, tag="FGLasso")
            except FglassoError as exc:
                failed.setdefault(g, []).append((fold, str(exc)))
                continue
            warm = warm_candidate
            per_eq = fit.beta_hat.reshape(data.n_equations, data.k_per_equation)
            errors = y_val - np.einsum("itk,ik->it", x_val, per_eq)
            mse_sum[g] += float(np.mean(errors * errors))

    mse_by_lambda = []
    excluded = []
    for g, lam in enumerate(grid):
        if g in failed:
            excluded.extend((lam, fold, msg) for fold, msg in failed[g])
        else:
            mse_by_lambda.append((lam, mse_sum[g] / spec.n_folds))
    if not mse_by_lambda:
        raise FglassoError("every grid penalty failed on some fold")

    best_mse = min(mse for _, mse in mse_by_lambda)
    # ties go to the largest penalty; the grid is descending, so take the first
    best_lambda = next(lam for lam, mse in mse_by_lambda if mse <= best_mse + TIE_TOL)
    return CvResult(best_lambda, mse_by_lambda, assignment, excluded)
