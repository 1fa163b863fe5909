"""True precision designs and the simulation data-generating process.

Four precision (or covariance) patterns over N equations:

* ``band``: unit diagonal, 0.6 on the first off-diagonal, 0.3 on the second.
* ``lattice4nn``: rook-neighbor grid on a sqrt(N) x sqrt(N) lattice, unit
  diagonal, 0.25 per edge (N must be a perfect square).
* ``ar1``: entries 0.6^|i-j| (dense for small N, effectively banded for large).
* ``dense``: precision obtained by inverting a banded covariance with unit
  diagonal and 0.2 on the first off-diagonals.

Simulation draws X entries iid standard normal, coefficients iid uniform on
[-1, 1], and error columns iid N(0, Sigma) with Sigma the inverse of the
design precision, via its Cholesky factor.

Randomness comes from a Philox counter-based generator keyed by a 64-bit
seed; independent streams are derived by hashing (seed, index...) tuples, so
parallel replications reproduce bit-for-bit regardless of scheduling.  Normal
deviates use the Box-Muller transform on the uniform stream (fixed here for
cross-platform stability; the generator's own normal sampler is not used).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPerfectSquare, NotPositiveDefinite
from .linalg import cholesky, inverse
from .sur import SurDataset

DESIGN_KINDS = ("band", "lattice4nn", "ar1", "dense")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> int:
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(*parts: int) -> int:
    """Stable 64-bit hash of an integer tuple, for per-stream sub-seeds."""
    state = 0
    for part in parts:
        state = _splitmix64(state ^ (int(part) & _MASK64))
    return state


class CounterStream:
    """Seedable counter-based random stream (Philox backend).

    ``uniform`` draws from [low, high); ``normal`` applies Box-Muller to
    consecutive uniform pairs, consuming an even number of variates so the
    stream position stays deterministic.
    """

    def __init__(self, seed: int, *path: int):
        key = derive_seed(seed, *path) if path else (int(seed) & _MASK64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        return low + (high - low) * self._gen.random(n)

    def normal(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u1 = self._gen.random(pairs)
        u2 = self._gen.random(pairs)
        radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 in (0, 1], log finite
        angle = 2.0 * np.pi * u2
        return np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]


@dataclass(frozen=True)
class PrecisionDesign:
    """Named pattern and system size for a true precision matrix."""

    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ValueError(f"unknown design kind {self.kind!r}; choose from {DESIGN_KINDS}")
        if self.n < 1:
            raise ValueError("system size must be positive")
        if self.kind == "lattice4nn" and round(self.n**0.5) ** 2 != self.n:
            raise NotPerfectSquare(f"lattice design needs a square N, got {self.n}")


def build_precision(design: PrecisionDesign) -> np.ndarray:
    """Construct the design's true precision matrix (always PD)."""
    n = design.n
    if design.kind == "band":
        omega = np.eye(n)
        for offset, value in ((1, 0.6), (2, 0.3)):
            idx = np.arange(n - offset)
            omega[idx, idx + offset] = value
            omega[idx + offset, idx] = value
    elif design.kind == "lattice4nn":
        side = round(n**0.5)
        omega = np.eye(n)
        for node in range(n):
            row, col = divmod(node, side)
            if col + 1 < side:
                omega[node, node + 1] = omega[node + 1, node] = 0.25
            if row + 1 < side:
                omega[node, node + side] = omega[node + side, node] = 0.25
    elif design.kind == "ar1":
        idx = np.arange(n)
        omega = 0.6 ** np.abs(idx[:, np.newaxis] - idx[np.newaxis, :])
    else:  # dense: invert a banded covariance
        sigma = np.eye(n)
        idx = np.arange(n - 1)
        sigma[idx, idx + 1] = sigma[idx + 1, idx] = 0.2
        omega = inverse(cholesky(sigma))
    try:
        cholesky(omega)
    except NotPositiveDefinite:
        raise NotPositiveDefinite(f"constructed {design.kind} precision is not PD")
    return omega


@dataclass(frozen=True)
class SimSpec:
    """One simulated dataset: design, panel length, regressors, seed."""

    design: PrecisionDesign
    n_periods: int
    k_per_equation: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_periods < 2:
            raise ValueError("need at least two periods")
        if self.k_per_equation < 1:
            raise ValueError("need at least one regressor per equation")


def simulate(spec: SimSpec):
    """Draw one dataset.  Returns (dataset, true_beta, true_omega).

    Deterministic given the seed; draw order is fixed as X, then beta, then
    the error innovations.
    """
    n, t, k = spec.design.n, spec.n_periods, spec.k_per_equation
    omega = build_precision(spec.design)
    sigma = inverse(cholesky(omega))
    scale = cholesky(sigma).lower
    stream = CounterStream(spec.seed)
    x = stream.normal(n * t * k).reshape(n, t, k)
    beta = stream.uniform(n * k, -1.0, 1.0)
    innovations = stream.normal(n * t).reshape(n, t)
    u = scale @ innovations
    y = np.einsum("itk,ik->it", x, beta.reshape(n, k)) + u
    return SurDataset(x, y), beta, omega
