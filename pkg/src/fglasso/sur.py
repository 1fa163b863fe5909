"""Estimators for stacked seemingly-unrelated-regression systems.

The system has N equations observed over T periods, each with K regressors:

    y[i, t] = beta_i' x[i, t, :] + u[i, t]

``fit_ols`` runs equation-by-equation least squares.  ``fit_gls`` weights the
stacked normal equations by a precision matrix over equations, assembling the
KN x KN system blockwise as omega_ij * (X_i' X_j) instead of materializing the
NT x NT Kronecker weight.  ``fit_fgls`` plugs in the inverse of the OLS
residual covariance; ``fit_fglasso`` plugs in the penalized precision
estimate, which also covers the T < N regime where the residual covariance is
singular.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    RankDeficientRegressors,
    SingularNormalMatrix,
    SingularSigmaHat,
)
from .glasso import GlassoConfig, GlassoResult, glasso_solve
from .linalg import check_symmetric, cholesky, inverse, solve

RANK_PIVOT_RTOL = 1e-10


class SurDataset:
    """Immutable container for the N-equation system.

    Parameters
    ----------
    x_blocks : sequence of N arrays of shape (T, K), or one (N, T, K) array
    y : (N, T) array of responses

    Every equation must share the same regressor count K and have a full-rank
    regressor block (smallest Gram pivot above RANK_PIVOT_RTOL times the
    largest), raising RankDeficientRegressors with the offending index.
    """

    def __init__(self, x_blocks, y):
        x = np.asarray(x_blocks, dtype=np.float64)
        if x.ndim != 3:
            raise DimensionMismatch(
                f"x_blocks must stack to (N, T, K), got shape {x.shape}"
            )
        y = np.asarray(y, dtype=np.float64)
        if y.ndim != 2 or y.shape != x.shape[:2]:
            raise DimensionMismatch(
                f"y shape {y.shape} does not match x blocks {x.shape[:2]}"
            )
        if x.shape[0] < 1 or x.shape[1] < 1 or x.shape[2] < 1:
            raise DimensionMismatch("need N >= 1, T >= 1, K >= 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("dataset entries must be finite")
        self.x = x
        self.y = y
        self._check_ranks()
        self._gram = None
        self._cross = None

    @property
    def n_equations(self) -> int:
        return self.x.shape[0]

    @property
    def n_periods(self) -> int:
        return self.x.shape[1]

    @property
    def k_per_equation(self) -> int:
        return self.x.shape[2]

    @property
    def x_blocks(self) -> list[np.ndarray]:
        return [self.x[i] for i in range(self.n_equations)]

    def _check_ranks(self) -> None:
        grams = np.einsum("itk,itl->ikl", self.x, self.x)
        for i in range(self.n_equations):
            try:
                lower = np.linalg.cholesky(grams[i])
            except np.linalg.LinAlgError:
                raise RankDeficientRegressors(i) from None
            pivots = np.diagonal(lower) ** 2
            if np.min(pivots) <= RANK_PIVOT_RTOL * np.max(pivots):
                raise RankDeficientRegressors(i)

    def subset_periods(self, periods) -> "SurDataset":
        """New dataset restricted to the given period indices (revalidated)."""
        idx = np.asarray(periods, dtype=np.intp)
        return SurDataset(self.x[:, idx, :], self.y[:, idx])

    # cross-equation moments, cached: the GLS normal system reuses them for
    # every precision matrix tried on the same data (e.g. along a CV grid)
    def cross_gram(self) -> np.ndarray:
        """(N, N, K, K) array of X_i' X_j."""
        if self._gram is None:
            self._gram = np.einsum("itk,jtl->ijkl", self.x, self.x)
        return self._gram

    def cross_moment(self) -> np.ndarray:
        """(N, N, K) array of X_i' Y_j."""
        if self._cross is None:
            self._cross = np.einsum("itk,jt->ijk", self.x, self.y)
        return self._cross


@dataclass
class FitResult:
    """Stacked coefficient estimate with per-period residuals.

    beta_hat is length K*N, equation blocks in order; residuals[i, t] is
    y[i, t] minus the fitted value.
    """

    beta_hat: np.ndarray
    residuals: np.ndarray
    estimator_tag: str
    omega_used: np.ndarray | None = None
    solver_meta: GlassoResult | None = None


def _residuals(data: SurDataset, beta: np.ndarray) -> np.ndarray:
    per_eq = beta.reshape(data.n_equations, data.k_per_equation)
    return data.y - np.einsum("itk,ik->it", data.x, per_eq)


def fit_ols(data: SurDataset) -> FitResult:
    """Equation-by-equation least squares (the stacked system is block
    diagonal, so this equals the joint estimator)."""
    grams = np.einsum("itk,itl->ikl", data.x, data.x)
    rhs = np.einsum("itk,it->ik", data.x, data.y)
    try:
        beta = np.linalg.solve(grams, rhs[..., np.newaxis])[..., 0].ravel()
    except np.linalg.LinAlgError as exc:  # construction already checks rank
        raise RankDeficientRegressors(-1, str(exc)) from exc
    return FitResult(beta, _residuals(data, beta), "OLS")


def _normal_system(data: SurDataset, omega: np.ndarray):
    """Assemble the KN x KN GLS normal matrix and right-hand side."""
    n, k = data.n_equations, data.k_per_equation
    if omega.shape != (n, n):
        raise DimensionMismatch(
            f"omega shape {omega.shape} does not match {n} equations"
        )
    check_symmetric(omega)
    kn = n * k
    a = (omega[:, :, np.newaxis, np.newaxis] * data.cross_gram())
    a = a.transpose(0, 2, 1, 3).reshape(kn, kn)
    rhs = (omega[:, :, np.newaxis] * data.cross_moment()).sum(axis=1).ravel()
    return a, rhs


def fit_gls(data: SurDataset, omega: np.ndarray, tag: str = "GLS",
            solver_meta: GlassoResult | None = None) -> FitResult:
    """Weighted estimator for a given precision matrix over equations."""
    a, rhs = _normal_system(data, omega)
    try:
        factor = cholesky(a)
    except NotPositiveDefinite as exc:
        raise SingularNormalMatrix(str(exc)) from exc
    beta = solve(factor, rhs)
    return FitResult(beta, _residuals(data, beta), tag, omega_used=omega,
                     solver_meta=solver_meta)


def residual_covariance(fit: FitResult) -> np.ndarray:
    """Average outer product of the per-period residual vectors."""
    u = fit.residuals
    return (u @ u.T) / u.shape[1]


def fit_fgls(data: SurDataset) -> FitResult:
    """Feasible GLS: weight by the inverse of the OLS residual covariance.

    Raises SingularSigmaHat when that covariance fails Cholesky, which is
    guaranteed for T < N (rank deficiency) and for exact-fit data.
    """
    sigma_hat = residual_covariance(fit_ols(data))
    try:
        omega = inverse(cholesky(sigma_hat))
    except NotPositiveDefinite as exc:
        raise SingularSigmaHat(str(exc)) from exc
    return fit_gls(data, omega, tag="FGLS")


def fit_fglasso(data: SurDataset, config: GlassoConfig) -> FitResult:
    """Feasible GLS with the penalized precision estimate.

    Pipeline: equationwise OLS, residual covariance, penalized precision
    solve, then the weighted fit.  Works for T < N provided config.lam > 0.
    """
    sigma_hat = residual_covariance(fit_ols(data))
    result = glasso_solve(sigma_hat, config)
    return fit_gls(data, result.omega_hat, tag="FGLasso", solver_meta=result)


def gls_standard_errors(data: SurDataset, omega: np.ndarray) -> np.ndarray:
    """Plug-in asymptotic standard deviations of the weighted estimator.

    Element i is sqrt of the i-th diagonal entry of the inverse normal matrix,
    which equals sqrt([(sum_t X_t Omega X_t' / T)^{-1}]_ii / T).
    """
    a, _ = _normal_system(data, omega)
    try:
        factor = cholesky(a)
    except NotPositiveDefinite as exc:
        raise SingularNormalMatrix(str(exc)) from exc
    return np.sqrt(np.diagonal(inverse(factor)))
