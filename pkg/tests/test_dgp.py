import numpy as np
import pytest

from fglasso.dgp import (
    CounterStream,
    PrecisionDesign,
    SimSpec,
    build_precision,
    derive_seed,
    simulate,
)
from fglasso.errors import NotPerfectSquare
from fglasso.linalg import cholesky, inverse, norm_max

# 9-node lattice pattern: rook neighbors on a 3x3 grid, 0.25 per edge
LATTICE_9 = np.array(
    [
        [1, 0.25, 0, 0.25, 0, 0, 0, 0, 0],
        [0.25, 1, 0.25, 0, 0.25, 0, 0, 0, 0],
        [0, 0.25, 1, 0, 0, 0.25, 0, 0, 0],
        [0.25, 0, 0, 1, 0.25, 0, 0.25, 0, 0],
        [0, 0.25, 0, 0.25, 1, 0.25, 0, 0.25, 0],
        [0, 0, 0.25, 0, 0.25, 1, 0, 0, 0.25],
        [0, 0, 0, 0.25, 0, 0, 1, 0.25, 0],
        [0, 0, 0, 0, 0.25, 0, 0.25, 1, 0.25],
        [0, 0, 0, 0, 0, 0.25, 0, 0.25, 1],
    ]
)


class TestBuildPrecision:
    def test_band_4(self):
        expected = np.array(
            [
                [1.0, 0.6, 0.3, 0.0],
                [0.6, 1.0, 0.6, 0.3],
                [0.3, 0.6, 1.0, 0.6],
                [0.0, 0.3, 0.6, 1.0],
            ]
        )
        np.testing.assert_array_equal(build_precision(PrecisionDesign("band", 4)), expected)

    def test_lattice_9(self):
        np.testing.assert_array_equal(build_precision(PrecisionDesign("lattice4nn", 9)), LATTICE_9)

    def test_ar1_3(self):
        expected = np.array([[1.0, 0.6, 0.36], [0.6, 1.0, 0.6], [0.36, 0.6, 1.0]])
        np.testing.assert_allclose(build_precision(PrecisionDesign("ar1", 3)), expected)

    def test_dense_inverts_banded_covariance(self):
        omega = build_precision(PrecisionDesign("dense", 6))
        sigma = np.eye(6)
        idx = np.arange(5)
        sigma[idx, idx + 1] = sigma[idx + 1, idx] = 0.2
        np.testing.assert_allclose(omega @ sigma, np.eye(6), atol=1e-10)

    def test_lattice_requires_square(self):
        with pytest.raises(NotPerfectSquare):
            PrecisionDesign("lattice4nn", 12)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            PrecisionDesign("circulant", 4)

    @pytest.mark.parametrize("kind", ["band", "ar1", "dense"])
    @pytest.mark.parametrize("n", [4, 9, 25, 49, 100])
    def test_all_designs_pd(self, kind, n):
        cholesky(build_precision(PrecisionDesign(kind, n)))

    @pytest.mark.parametrize("n", [4, 9, 25, 49, 100])
    def test_lattice_pd(self, n):
        cholesky(build_precision(PrecisionDesign("lattice4nn", n)))

    @pytest.mark.parametrize("n", [9, 25, 100])
    def test_sparsity_counts(self, n):
        band = build_precision(PrecisionDesign("band", n))
        lattice = build_precision(PrecisionDesign("lattice4nn", n))
        band_counts = np.sum(band != 0, axis=1)
        lattice_counts = np.sum(lattice != 0, axis=1)
        assert np.max(band_counts) <= 5 and np.max(lattice_counts) <= 5
        # interior rows carry the full pattern
        assert np.all(band_counts[2 : n - 2] == 5)
        side = round(n**0.5)
        interior = [r * side + c for r in range(1, side - 1) for c in range(1, side - 1)]
        assert np.all(lattice_counts[interior] == 5)


class TestCounterStream:
    def test_deterministic(self):
        a = CounterStream(42).normal(16)
        b = CounterStream(42).normal(16)
        np.testing.assert_array_equal(a, b)

    def test_distinct_paths_differ(self):
        assert CounterStream(42, 0).normal(4)[0] != CounterStream(42, 1).normal(4)[0]

    def test_uniform_range(self):
        u = CounterStream(7).uniform(10_000, -1.0, 1.0)
        assert np.min(u) >= -1.0 and np.max(u) < 1.0
        assert abs(np.mean(u)) < 0.05

    def test_normal_moments(self):
        z = CounterStream(8).normal(200_001)  # odd count exercises truncation
        assert abs(np.mean(z)) < 0.01
        assert abs(np.std(z) - 1.0) < 0.01

    def test_derive_seed_order_sensitive(self):
        assert derive_seed(1, 2) != derive_seed(2, 1)
        assert derive_seed(5) == derive_seed(5)


class TestSimulate:
    def test_same_seed_bit_identical(self):
        spec = SimSpec(PrecisionDesign("band", 5), n_periods=30, seed=99)
        d1, b1, o1 = simulate(spec)
        d2, b2, o2 = simulate(spec)
        np.testing.assert_array_equal(d1.x, d2.x)
        np.testing.assert_array_equal(d1.y, d2.y)
        np.testing.assert_array_equal(b1, b2)
        np.testing.assert_array_equal(o1, o2)

    def test_distinct_seeds_differ(self):
        spec_a = SimSpec(PrecisionDesign("band", 5), n_periods=10, seed=1)
        spec_b = SimSpec(PrecisionDesign("band", 5), n_periods=10, seed=2)
        assert simulate(spec_a)[0].x[0, 0, 0] != simulate(spec_b)[0].x[0, 0, 0]

    def test_error_covariance_matches_inverse_precision(self):
        spec = SimSpec(PrecisionDesign("band", 3), n_periods=100_000, seed=17)
        data, beta, omega = simulate(spec)
        u = data.y - np.einsum("itk,ik->it", data.x, beta.reshape(3, 1))
        sample_cov = (u @ u.T) / spec.n_periods
        target = inverse(cholesky(omega))
        assert norm_max(sample_cov - target) <= 0.02

    def test_error_mean_zero(self):
        spec = SimSpec(PrecisionDesign("band", 3), n_periods=100_000, seed=23)
        data, beta, _ = simulate(spec)
        u = data.y - np.einsum("itk,ik->it", data.x, beta.reshape(3, 1))
        assert np.max(np.abs(np.mean(u, axis=1))) <= 0.02

    def test_beta_within_support(self):
        _, beta, _ = simulate(SimSpec(PrecisionDesign("ar1", 8), n_periods=5, seed=3))
        assert np.all(np.abs(beta) <= 1.0)

    def test_multi_regressor_shapes(self):
        data, beta, _ = simulate(
            SimSpec(PrecisionDesign("dense", 4), n_periods=12, k_per_equation=3, seed=5)
        )
        assert data.x.shape == (4, 12, 3)
        assert beta.shape == (12,)
