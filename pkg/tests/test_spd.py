import numpy as np
import pytest
from scipy import linalg

from robust_scatter.errors import DimensionMismatch, NotPositiveDefinite
from robust_scatter.spd import (
    cholesky,
    geodesic_point,
    is_spd,
    is_symmetric,
    log_det,
    normalized_sq_frobenius_error,
    relative_frobenius,
    spd_inverse,
    sym_power,
)


def _spd(p, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((p, p))
    return A @ A.T / p + 0.2 * np.eye(p)


class TestCholesky:
    def test_reconstructs(self):
        S = _spd(6, 0)
        C = cholesky(S)
        assert np.allclose(np.triu(C, 1), 0)
        np.testing.assert_allclose(C @ C.T, S, rtol=1e-13, atol=1e-14)

    @pytest.mark.parametrize("M", [
        np.diag([1.0, -1.0]),
        np.array([[1.0, 2.0], [2.0, 1.0]]),
        np.zeros((3, 3)),
    ])
    def test_rejects_indefinite(self, M):
        with pytest.raises(NotPositiveDefinite):
            cholesky(M)
        assert not is_spd(M)

    def test_rejects_asymmetric(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky(np.array([[2.0, 1.0], [0.0, 2.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatch):
            cholesky(np.ones((2, 3)))

    def test_symmetry_tolerance_is_relative(self):
        M = 1e6 * np.eye(2)
        M[0, 1] = 1e-7
        assert is_symmetric(M)


class TestInverseAndLogDet:
    @pytest.mark.parametrize("p", [1, 2, 5, 9])
    def test_inverse_matches_scipy(self, p):
        S = _spd(p, p)
        np.testing.assert_allclose(spd_inverse(S), linalg.inv(S), rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("p", [1, 3, 7])
    def test_log_det_matches_slogdet(self, p):
        S = _spd(p, 10 + p)
        sign, ref = np.linalg.slogdet(S)
        assert sign == 1
        assert log_det(S) == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_log_det_diagonal(self):
        assert log_det(np.diag([2.0, 3.0, 0.5])) == pytest.approx(np.log(3.0), abs=1e-15)


class TestGeodesic:
    def test_endpoints(self):
        A, B = _spd(4, 1), _spd(4, 2)
        np.testing.assert_allclose(geodesic_point(A, B, 0.0), A, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(geodesic_point(A, B, 1.0), B, rtol=1e-10, atol=1e-12)

    def test_commuting_case_is_elementwise_power(self):
        A, B = np.diag([1.0, 4.0, 9.0]), np.diag([4.0, 1.0, 1.0])
        np.testing.assert_allclose(geodesic_point(A, B, 0.5), np.diag([2.0, 2.0, 3.0]),
                                   rtol=1e-12)

    @pytest.mark.parametrize("t", [0.1, 0.5, 0.8, 1.7])
    def test_log_det_is_linear(self, t):
        A, B = _spd(5, 3), _spd(5, 4)
        expected = (1 - t) * log_det(A) + t * log_det(B)
        assert log_det(geodesic_point(A, B, t)) == pytest.approx(expected, rel=1e-10)

    def test_midpoint_is_geometric_mean(self):
        # the geometric mean M solves M A^{-1} M = B
        A, B = _spd(4, 5), _spd(4, 6)
        M = geodesic_point(A, B, 0.5)
        np.testing.assert_allclose(M @ spd_inverse(A) @ M, B, rtol=1e-9, atol=1e-11)

    def test_symmetric_in_endpoints(self):
        A, B = _spd(3, 7), _spd(3, 8)
        np.testing.assert_allclose(geodesic_point(A, B, 0.3), geodesic_point(B, A, 0.7),
                                   rtol=1e-10)

    def test_sym_power_inverse(self):
        S = _spd(4, 9)
        np.testing.assert_allclose(sym_power(S, -1.0), spd_inverse(S), rtol=1e-9)


class TestErrors:
    def test_normalized_error(self):
        truth = np.diag([2.0, 2.0])
        est = np.diag([3.0, 2.0])
        assert normalized_sq_frobenius_error(est, truth) == pytest.approx(1.0 / 8.0)

    def test_relative_frobenius_zero(self):
        S = _spd(3, 0)
        assert relative_frobenius(S, S) == 0.0
