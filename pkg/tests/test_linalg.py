import numpy as np
import pytest

from fglasso import linalg
from fglasso.errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric


def random_spd(rng, n):
    a = rng.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


class TestCholesky:
    def test_identity(self):
        chol = linalg.cholesky(np.eye(3))
        np.testing.assert_allclose(chol.lower, np.eye(3))

    def test_hand_expanded_2x2(self):
        # L L' = [[4,2],[2,3]] expands to L = [[2,0],[1,sqrt(2)]]
        chol = linalg.cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
        np.testing.assert_allclose(chol.lower, [[2.0, 0.0], [1.0, np.sqrt(2.0)]])

    def test_indefinite_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            linalg.cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_asymmetric_rejected(self):
        with pytest.raises(NotSymmetric):
            linalg.cholesky(np.array([[1.0, 0.5], [0.1, 1.0]]))

    def test_zero_matrix_rejected(self):
        with pytest.raises(NotPositiveDefinite):
            linalg.cholesky(np.zeros((3, 3)))

    def test_rank_deficient_rejected(self):
        v = np.ones((4, 1))
        with pytest.raises(NotPositiveDefinite):
            linalg.cholesky(v @ v.T)

    def test_reconstruction(self):
        rng = np.random.default_rng(0)
        for n in (2, 5, 17, 50):
            a = random_spd(rng, n)
            chol = linalg.cholesky(a)
            np.testing.assert_allclose(chol.lower @ chol.lower.T, a, rtol=1e-10)


class TestSolve:
    def test_identity(self):
        chol = linalg.cholesky(np.eye(2))
        b = np.array([[3.0], [4.0]])
        np.testing.assert_allclose(linalg.solve(chol, b), b)

    def test_hand_example(self):
        # A [1,1]' = [6,5]' for A = [[4,2],[2,3]]
        chol = linalg.cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
        x = linalg.solve(chol, np.array([[6.0], [5.0]]))
        np.testing.assert_allclose(x, [[1.0], [1.0]], atol=1e-12)

    def test_dimension_mismatch(self):
        chol = linalg.cholesky(np.eye(2))
        with pytest.raises(DimensionMismatch):
            linalg.solve(chol, np.ones((3, 1)))

    def test_residual_bound(self):
        rng = np.random.default_rng(1)
        for n in (3, 10, 40):
            a = random_spd(rng, n)
            b = rng.standard_normal((n, 2))
            x = linalg.solve(linalg.cholesky(a), b)
            assert linalg.norm_max(a @ x - b) <= 1e-8 * (1.0 + linalg.norm_max(b))


class TestInverse:
    def test_identity(self):
        np.testing.assert_allclose(linalg.inverse(linalg.cholesky(np.eye(4))), np.eye(4))

    def test_diagonal(self):
        inv = linalg.inverse(linalg.cholesky(np.diag([2.0, 4.0])))
        np.testing.assert_allclose(inv, np.diag([0.5, 0.25]))

    def test_adjugate_2x2(self):
        # inverse of [[4,2],[2,3]] is adj/det = (1/8) [[3,-2],[-2,4]]
        inv = linalg.inverse(linalg.cholesky(np.array([[4.0, 2.0], [2.0, 3.0]])))
        np.testing.assert_allclose(inv, np.array([[3.0, -2.0], [-2.0, 4.0]]) / 8.0)

    def test_round_trip_identity(self):
        rng = np.random.default_rng(2)
        for n in (2, 9, 33, 50):
            a = random_spd(rng, n)
            inv = linalg.inverse(linalg.cholesky(a))
            np.testing.assert_allclose(a @ inv, np.eye(n), atol=1e-8)

    def test_output_symmetric(self):
        rng = np.random.default_rng(3)
        a = random_spd(rng, 12)
        inv = linalg.inverse(linalg.cholesky(a))
        assert np.array_equal(inv, inv.T)


class TestNorms:
    @pytest.mark.parametrize(
        "a,expected",
        [
            ([[1.0, -3.0], [2.0, 0.0]], 3.0),
            ([[0.0, 0.0], [0.0, 0.0]], 0.0),
            ([[0.25, -0.6]], 0.6),
        ],
    )
    def test_norm_max(self, a, expected):
        assert linalg.norm_max(np.array(a)) == expected

    def test_norm_frobenius(self):
        assert linalg.norm_frobenius(np.array([[3.0, 4.0]])) == 5.0
        assert linalg.norm_frobenius(np.eye(4)) == 2.0
        assert linalg.norm_frobenius(np.zeros((3, 3))) == 0.0

    def test_norm_rowsum(self):
        assert linalg.norm_rowsum(np.array([[1.0, -2.0], [0.0, 1.0]])) == 3.0
        assert linalg.norm_rowsum(np.eye(5)) == 1.0
        assert linalg.norm_rowsum(np.array([[0.6, 1.0, 0.6]])) == pytest.approx(2.2)

    def test_max_bounded_by_rowsum(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            a = rng.standard_normal((rng.integers(1, 8), rng.integers(1, 8)))
            assert linalg.norm_max(a) <= linalg.norm_rowsum(a) + 1e-15

    def test_absolute_homogeneity(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            a = rng.standard_normal((4, 6))
            c = float(rng.uniform(-10.0, 10.0))
            for norm in (linalg.norm_max, linalg.norm_frobenius, linalg.norm_rowsum):
                assert norm(c * a) == pytest.approx(abs(c) * norm(a), rel=1e-12)


class TestMatrixIo:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((5, 3)) * np.pi
        path = tmp_path / "m.csv"
        linalg.write_matrix_csv(path, a)
        np.testing.assert_array_equal(linalg.read_matrix_csv(path), a)

    def test_no_header_format(self, tmp_path):
        path = tmp_path / "m.csv"
        linalg.write_matrix_csv(path, np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert path.read_text() == "1,2\n3,4\n"

    def test_ragged_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3\n")
        with pytest.raises(DimensionMismatch):
            linalg.read_matrix_csv(path)

    def test_non_finite_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,nan\n")
        with pytest.raises(ValueError):
            linalg.read_matrix_csv(path)


def test_as_matrix_rejects_bad_shapes():
    with pytest.raises(DimensionMismatch):
        linalg.as_matrix(np.ones(3))
    with pytest.raises(ValueError):
        linalg.as_matrix([[1.0, np.inf]])
