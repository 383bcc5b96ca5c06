import math
from functools import reduce

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.data.function.kron_algebra import (chol_factorwise, logdet_kron, trace_product_kron, inv_factors,
                                            rank1_quad_form, kron_to_dense, kron_matvec, factor_multiplicities,
                                            lower_from_unconstrained, lower_to_unconstrained,
                                            lower_grad_from_covariance_grad, unconstrained_lower_grad,
                                            covariance_grad_from_chol_grad)
from src.data.model.kronecker import KroneckerMatrix, KroneckerChol
from src.util.error import DecompositionError, InvalidArgumentError, ShapeMismatchError, ResourceLimitError
from tests.oracle import central_difference, relative_error


def _spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


def _kron(*factors):
    return KroneckerMatrix(factors=list(factors))


class TestCholesky:

    def test_identity(self):
        chol = chol_factorwise(_kron(np.eye(2), np.eye(3)))
        for lower, n in zip(chol.lower_factors, (2, 3)):
            assert_allclose(lower, np.eye(n))

    def test_diagonal_factor(self):
        chol = chol_factorwise(_kron(np.diag([4.0, 9.0])))
        assert_allclose(chol.lower_factors[0], np.diag([2.0, 3.0]))

    def test_reconstruction(self, rng):
        factor = _spd(rng, 4)
        lower = chol_factorwise(_kron(factor)).lower_factors[0]
        assert relative_error(lower @ lower.T, factor) < 1e-10

    def test_names_the_failing_dimension(self, rng):
        with pytest.raises(DecompositionError) as info:
            chol_factorwise(_kron(_spd(rng, 3), np.diag([1.0, -1.0])))
        assert info.value.dimension == 1

    def test_rejects_non_symmetric(self):
        with pytest.raises(InvalidArgumentError, match="symmetric"):
            chol_factorwise(_kron(np.array([[2.0, 1.0], [0.0, 2.0]])))

    def test_lower_factors_are_validated(self):
        with pytest.raises(InvalidArgumentError, match="lower-triangular"):
            KroneckerChol(lower_factors=[np.array([[1.0, 1.0], [0.0, 1.0]])])


class TestLogdet:

    def test_identity(self):
        assert logdet_kron(_kron(np.eye(2), np.eye(3))) == 0.0

    def test_scaled_identity(self):
        assert logdet_kron(_kron(2.0 * np.eye(2), np.eye(3))) == pytest.approx(math.log(64.0), abs=1e-12)

    def test_matches_dense(self, rng):
        factors = [_spd(rng, 3), _spd(rng, 2)]
        _, expected = np.linalg.slogdet(reduce(np.kron, factors))
        assert logdet_kron(_kron(*factors)) == pytest.approx(expected, abs=1e-9)

    def test_inverse_cancels(self, rng):
        matrix = _kron(_spd(rng, 3), _spd(rng, 4), _spd(rng, 2))
        inverse = inv_factors(chol_factorwise(matrix))
        assert logdet_kron(matrix) + logdet_kron(inverse) == pytest.approx(0.0, abs=1e-8)

    def test_multiplicities(self):
        assert_allclose(factor_multiplicities((2, 3, 4)), [12.0, 8.0, 6.0])


class TestTrace:

    def test_identity(self):
        assert trace_product_kron(_kron(np.eye(2), np.eye(2)), _kron(np.eye(2), np.eye(2))) == 4.0

    def test_diagonal_example(self):
        a = _kron(np.diag([1.0, 2.0]), np.eye(2))
        b = _kron(np.diag([3.0, 4.0]), np.eye(2))
        assert trace_product_kron(a, b) == pytest.approx(22.0)

    def test_matches_dense(self, rng):
        a = [rng.normal(size=(4, 4)), rng.normal(size=(3, 3))]
        b = [rng.normal(size=(4, 4)), rng.normal(size=(3, 3))]
        expected = np.trace(reduce(np.kron, a) @ reduce(np.kron, b))
        assert trace_product_kron(_kron(*a), _kron(*b)) == pytest.approx(expected, rel=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            trace_product_kron(_kron(np.eye(2)), _kron(np.eye(3)))


class TestInverse:

    def test_identity(self):
        assert_allclose(inv_factors(chol_factorwise(_kron(np.eye(3)))).factors[0], np.eye(3))

    def test_diagonal(self):
        assert_allclose(inv_factors(chol_factorwise(_kron(np.diag([2.0, 4.0])))).factors[0], np.diag([0.5, 0.25]))

    def test_residual(self, rng):
        factors = [_spd(rng, 4), _spd(rng, 3)]
        inverse = inv_factors(chol_factorwise(_kron(*factors)))
        assert_allclose(factors[0] @ inverse.factors[0], np.eye(4), atol=1e-9)
        assert_allclose(reduce(np.kron, factors) @ kron_to_dense(inverse), np.eye(12), atol=1e-8)


class TestRankOneQuadForm:

    def test_identity_basis(self):
        assert rank1_quad_form(_kron(np.eye(2), np.eye(3)), [np.eye(2)[1], np.eye(3)[0]]) == 1.0

    def test_example(self):
        matrix = _kron(np.diag([1.0, 2.0]), np.eye(2))
        assert rank1_quad_form(matrix, [np.array([1.0, 1.0]), np.array([1.0, 0.0])]) == pytest.approx(3.0)

    def test_zero_vector(self, rng):
        matrix = _kron(_spd(rng, 2), _spd(rng, 3))
        assert rank1_quad_form(matrix, [np.zeros(2), rng.normal(size=3)]) == 0.0

    def test_matches_dense(self, rng):
        factors = [_spd(rng, n) for n in (5, 4, 10)]
        w = [rng.normal(size=n) for n in (5, 4, 10)]
        vector = reduce(np.kron, w)
        expected = vector @ reduce(np.kron, factors) @ vector
        assert rank1_quad_form(_kron(*factors), w) == pytest.approx(expected, rel=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            rank1_quad_form(_kron(np.eye(2)), [np.ones(3)])


class TestDenseHelpers:

    def test_matvec_matches_dense(self, rng):
        factors = [rng.normal(size=(n, n)) for n in (3, 4, 2)]
        vector = rng.normal(size=24)
        assert_allclose(kron_matvec(factors, vector), reduce(np.kron, factors) @ vector, rtol=1e-10)

    def test_size_cap(self):
        with pytest.raises(ResourceLimitError):
            kron_to_dense([np.eye(10), np.eye(10)], size_cap=9999)


class TestLogCholesky:

    def test_round_trip(self, rng):
        lower = np.tril(rng.normal(size=(4, 4)), -1) + np.diag(rng.uniform(0.5, 2.0, size=4))
        assert_allclose(lower_from_unconstrained(lower_to_unconstrained(lower)), lower, rtol=1e-14)

    def test_gradient_chain(self, rng):
        raw = np.tril(rng.normal(size=(3, 3)))
        target = rng.normal(size=(3, 3))

        def objective(value):
            lower = lower_from_unconstrained(np.tril(value))
            return float(np.sum(target * (lower @ lower.T)))

        lower = lower_from_unconstrained(raw)
        analytic = unconstrained_lower_grad(lower, lower_grad_from_covariance_grad(lower, target))
        numeric = np.tril(central_difference(objective, raw))
        assert relative_error(analytic, numeric) < 1e-6

    def test_cholesky_backward(self, rng):
        matrix = _spd(rng, 4)
        target = rng.normal(size=(4, 4))

        def objective(value):
            lower = np.linalg.cholesky(0.5 * (value + value.T))
            return float(np.sum(target * lower))

        analytic = covariance_grad_from_chol_grad(np.linalg.cholesky(matrix), target)
        assert_allclose(analytic, analytic.T)
        numeric = central_difference(objective, matrix)
        assert relative_error(analytic, numeric) < 1e-6

    def test_cholesky_backward_of_log_determinant(self, rng):
        matrix = _spd(rng, 3)
        lower = np.linalg.cholesky(matrix)
        # log det A = 2·Σ log L_ii, whose gradient is A⁻¹
        lower_grad = np.diag(2.0 / np.diag(lower))
        assert_allclose(covariance_grad_from_chol_grad(lower, lower_grad), np.linalg.inv(matrix), rtol=1e-10)
