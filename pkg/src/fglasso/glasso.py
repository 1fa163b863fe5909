"""L1-penalized precision matrix estimation.

Solves

    min_{Omega > 0, symmetric}  tr(Omega S) - logdet(Omega) + lam * |Omega|_1,off

by block coordinate descent on the dual covariance iterate W: columns are
cycled, each column update solving a lasso on the reduced problem by
coordinate descent (the classic graphical-lasso scheme).  The penalty excludes
the diagonal, so at the optimum diag(W) equals diag(S).

First-order optimality can be certified independently with ``kkt_residual``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import glasso_sweep
from .errors import NotPositiveDefinite, SingularInput
from .linalg import check_symmetric, cholesky, inverse

#: entries of the recovered precision matrix smaller than this are structural
#: zeros for edge-set purposes (coordinate descent yields exact zeros; the
#: final column-wise recovery can leave dust of this order).
ZERO_TOL = 1e-10


class NoConvergenceWarning(UserWarning):
    """Sweep budget exhausted before the convergence criterion was met."""


@dataclass(frozen=True)
class GlassoConfig:
    """Solver settings.  ``lam`` is the off-diagonal l1 penalty weight."""

    lam: float
    max_sweeps: int = 200
    tol: float = 1e-5
    inner_max_iter: int = 1000
    inner_tol: float = 1e-7

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValueError("penalty weight lam must be non-negative")
        if self.tol <= 0.0 or self.inner_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_sweeps < 1 or self.inner_max_iter < 1:
            raise ValueError("iteration limits must be positive")


@dataclass
class GlassoResult:
    """Solver output.

    omega_hat : symmetric positive definite precision estimate
    w_hat : dual covariance iterate (omega_hat's inverse up to solver tolerance)
    coefs : per-column lasso coefficients, reusable as a warm start
    objective_history : per-sweep objective values when tracking was requested
    """

    omega_hat: np.ndarray
    w_hat: np.ndarray
    lam: float
    sweeps_used: int
    converged: bool
    objective: float
    coefs: np.ndarray
    objective_history: list[float] = field(default_factory=list)


def objective_value(sigma_hat: np.ndarray, omega: np.ndarray, lam: float) -> float:
    """tr(Omega S) - logdet(Omega) + lam * sum_{i != j} |Omega_ij|."""
    if not np.all(np.isfinite(omega)):
        return np.inf
    sign, logdet = np.linalg.slogdet(omega)
    if sign <= 0:
        return np.inf
    off_l1 = np.sum(np.abs(omega)) - np.sum(np.abs(np.diagonal(omega)))
    return float(np.sum(sigma_hat * omega) - logdet + lam * off_l1)


def _recover_omega(w: np.ndarray, b: np.ndarray, strict: bool = False) -> np.ndarray:
    """Rebuild the precision matrix column-by-column from the final lasso
    coefficients, preserving exact zeros, then symmetrize.

    With ``strict``, a lost-definiteness iterate (non-finite entries or a
    non-positive Schur complement) raises NotPositiveDefinite instead of
    propagating NaN/Inf downstream.
    """
    # column j: omega_jj = 1 / (w_jj - w12' beta_j), omega_{.j} = -omega_jj beta_j
    denom = np.diagonal(w) - np.einsum("ji,ji->j", b, w)
    if strict and (not np.all(np.isfinite(denom)) or np.any(denom <= 0.0)):
        raise NotPositiveDefinite("dual iterate lost positive definiteness")
    with np.errstate(divide="ignore", invalid="ignore"):
        omega_diag = 1.0 / denom
        omega = -b.T * omega_diag[np.newaxis, :]
    np.fill_diagonal(omega, omega_diag)
    return (omega + omega.T) / 2.0


def glasso_solve(
    sigma_hat: np.ndarray,
    config: GlassoConfig,
    warm_start: GlassoResult | None = None,
    track_objective: bool = False,
) -> GlassoResult:
    """Minimize the penalized negative Gaussian log-likelihood over PD matrices.

    Parameters
    ----------
    sigma_hat : symmetric PSD matrix with strictly positive diagonal.  Must be
        positive definite when ``config.lam == 0``.
    config : solver settings.
    warm_start : previous result for the same ``sigma_hat`` (typically at a
        larger penalty); its dual iterate and coefficients seed the solver.
    track_objective : record the objective after every sweep (used by tests to
        check monotone descent; costs one logdet per sweep).

    Convergence is declared when the mean absolute change of W's off-diagonal
    entries over one full sweep drops to ``tol`` times the mean absolute
    off-diagonal of ``sigma_hat`` (plus a small epsilon guarding the diagonal
    case).  If the sweep budget runs out a ``NoConvergenceWarning`` is emitted
    and the result is returned with ``converged=False``.
    """
    sigma = np.array(sigma_hat, dtype=np.float64)
    check_symmetric(sigma)
    n = sigma.shape[0]
    if np.min(np.diagonal(sigma)) <= 0.0:
        raise ValueError("sigma_hat must have a strictly positive diagonal")
    lam = float(config.lam)
    if lam == 0.0:
        # the unpenalized minimizer is the plain inverse; solve it exactly
        try:
            factor = cholesky(sigma)
        except Exception as exc:
            raise SingularInput(
                "lam = 0 requires a positive definite sigma_hat"
            ) from exc
        omega = inverse(factor)
        # per-column coefficients consistent with the dual iterate W = sigma,
        # so a descending path can warm-start off this solution
        coefs = -(omega / np.diagonal(omega)[np.newaxis, :]).T
        np.fill_diagonal(coefs, 0.0)
        return GlassoResult(
            omega_hat=omega,
            w_hat=sigma.copy(),
            lam=0.0,
            sweeps_used=0,
            converged=True,
            objective=objective_value(sigma, omega, 0.0),
            coefs=coefs,
        )

    if n == 1:
        omega = np.array([[1.0 / sigma[0, 0]]])
        return GlassoResult(
            omega_hat=omega,
            w_hat=sigma.copy(),
            lam=lam,
            sweeps_used=0,
            converged=True,
            objective=objective_value(sigma, omega, lam),
            coefs=np.zeros((1, 1)),
        )

    if warm_start is not None:
        w = np.array(warm_start.w_hat, dtype=np.float64)
        b = np.array(warm_start.coefs, dtype=np.float64)
    else:
        w = sigma + lam * np.eye(n)
        b = np.zeros((n, n))

    off_mask = ~np.eye(n, dtype=bool)
    threshold = config.tol * (float(np.mean(np.abs(sigma[off_mask]))) + 1e-12)

    history: list[float] = []
    converged = False
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        w_prev = w.copy()
        glasso_sweep(sigma, lam, w, b, config.inner_max_iter, config.inner_tol)
        sweep_delta = float(np.mean(np.abs((w - w_prev)[off_mask])))
        if not np.isfinite(sweep_delta):
            break  # diverged; reported below
        if track_objective:
            history.append(objective_value(sigma, _recover_omega(w, b), lam))
        if sweep_delta <= threshold:
            converged = True
            break
    if not np.all(np.isfinite(w)):
        raise NotPositiveDefinite(
            f"solver diverged (lam={lam:g}; penalized problem may be unidentified)"
        )
    if not converged:
        warnings.warn(
            f"no convergence in {config.max_sweeps} sweeps (lam={lam:g})",
            NoConvergenceWarning,
        )

    omega = _recover_omega(w, b, strict=True)
    return GlassoResult(
        omega_hat=omega,
        w_hat=w,
        lam=lam,
        sweeps_used=sweeps,
        converged=converged,
        objective=objective_value(sigma, omega, lam),
        coefs=b,
        objective_history=history,
    )


def kkt_residual(
    sigma_hat: np.ndarray,
    omega_hat: np.ndarray,
    lam: float,
    zero_tol: float = ZERO_TOL,
) -> float:
    """Largest violation of the first-order conditions at ``omega_hat``.

    Stationarity of the objective requires S - Omega^{-1} + lam * sign(Omega)
    to vanish entry-wise off the diagonal (with |S - Omega^{-1}| <= lam where
    Omega is zero) and S_ii = (Omega^{-1})_ii on the diagonal.  Raises
    NotPositiveDefinite when ``omega_hat`` fails Cholesky.
    """
    omega = np.asarray(omega_hat, dtype=np.float64)
    resid = np.asarray(sigma_hat, dtype=np.float64) - inverse(cholesky(omega))
    n = omega.shape[0]
    off = ~np.eye(n, dtype=bool)
    active = off & (np.abs(omega) > zero_tol)
    inactive = off & ~active
    worst = float(np.max(np.abs(np.diagonal(resid))))
    if np.any(active):
        worst = max(worst, float(np.max(np.abs(resid[active] + lam * np.sign(omega[active])))))
    if np.any(inactive):
        worst = max(worst, float(np.max(np.maximum(np.abs(resid[inactive]) - lam, 0.0))))
    return worst


def regularization_path(
    sigma_hat: np.ndarray,
    lambdas,
    config: GlassoConfig,
    track_objective: bool = False,
) -> list[GlassoResult]:
    """Solve along a strictly descending penalty grid, warm-starting each
    point with the previous solution."""
    lams = [float(v) for v in lambdas]
    if not lams:
        raise ValueError("empty penalty grid")
    if any(v < 0.0 for v in lams):
        raise ValueError("penalties must be non-negative")
    if any(later >= earlier for later, earlier in zip(lams[1:], lams[:-1])):
        raise ValueError("penalty grid must be strictly descending")
    results: list[GlassoResult] = []
    previous: GlassoResult | None = None
    for lam in lams:
        previous = glasso_solve(
            sigma_hat,
            replace(config, lam=lam),
            warm_start=previous,
            track_objective=track_objective,
        )
        results.append(previous)
    return results
