"""Compiled inner loops for the penalized precision solver.

Kept free of Python objects so numba can cache machine code; callers own all
validation. fastmath stays off so results are bit-reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def glasso_sweep(sigma, lam, w, b, inner_max_iter, inner_tol):
    """One block-coordinate-descent sweep over all columns of the dual iterate.

    For each column j the reduced problem

        minimize_beta  0.5 beta' W11 beta - s12' beta + lam |beta|_1

    (W11 = w with row/column j removed, s12 = sigma[:, j] without entry j)
    is solved by cyclic coordinate descent, then the off-diagonal part of
    column j of ``w`` is replaced by W11 beta.  The diagonal of ``w`` is fixed
    at the diagonal of ``sigma`` because the penalty excludes the diagonal.

    ``w`` (symmetric) and ``b`` (row j holds column j's coefficients, with
    b[j, j] == 0) are updated in place.  Returns total inner passes used.
    """
    n = sigma.shape[0]
    g = np.zeros(n)
    passes = 0
    for j in range(n):
        w[j, j] = sigma[j, j]
        beta = b[j]
        # g = W11 beta embedded in full coordinates (beta[j] == 0)
        for k in range(n):
            g[k] = 0.0
        for l in range(n):
            bl = beta[l]
            if bl != 0.0:
                for k in range(n):
                    g[k] += bl * w[l, k]
        for _ in range(inner_max_iter):
            max_delta = 0.0
            for k in range(n):
                if k == j:
                    continue
                wkk = w[k, k]
                r = sigma[k, j] - (g[k] - wkk * beta[k])
                if r > lam:
                    new = (r - lam) / wkk
                elif r < -lam:
                    new = (r + lam) / wkk
                else:
                    new = 0.0
                delta = new - beta[k]
                if delta != 0.0:
                    beta[k] = new
                    ad = -delta if delta < 0.0 else delta
                    if ad > max_delta:
                        max_delta = ad
                    for t in range(n):
                        g[t] += delta * w[k, t]
            passes += 1
            if max_delta <= inner_tol:
                break
        for k in range(n):
            if k != j:
                w[k, j] = g[k]
                w[j, k] = g[k]
    return passes
