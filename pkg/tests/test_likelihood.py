import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import log_softmax

from src.data.function.likelihood import (LatentMoments, GaussianLikelihood, SoftmaxLikelihood, select_likelihood)
from src.util.error import InvalidArgumentError
from tests.oracle import central_difference, relative_error


def _moments(mean, kernel_quad, sigma_quad, kernel_diag):
    return LatentMoments(mean=np.asarray(mean, dtype=np.float64), kernel_quad=np.asarray(kernel_quad, dtype=np.float64),
                         sigma_quad=np.asarray(sigma_quad, dtype=np.float64),
                         kernel_diag=np.asarray(kernel_diag, dtype=np.float64))


def _random_moments(rng, n, num_classes):
    variance = rng.uniform(0.5, 2.0, size=num_classes)
    kernel_quad = variance * rng.uniform(0.6, 0.95, size=(n, num_classes))
    return _moments(rng.normal(size=(n, num_classes)), kernel_quad, rng.uniform(0.05, 0.5, size=(n, num_classes)),
                    variance)


class TestMoments:

    def test_variance_is_floored(self):
        moments = _moments([[0.0, 0.0]], [[1.5, 0.2]], [[0.1, 0.1]], [1.0, 1.0])
        assert_allclose(moments.excess_variance, [[-0.4, 0.9]])
        assert_allclose(moments.variance, [[0.0, 0.9]])


class TestGaussianLikelihood:

    def test_value(self):
        moments = _moments([[0.5], [1.0]], [[0.8], [0.7]], [[0.2], [0.1]], [1.0])
        y = np.array([1.0, 0.0])
        noise = 0.25
        expected = sum(-0.5 * math.log(2 * math.pi * noise) - ((yi - mi) ** 2 + ei) / (2 * noise)
                       for yi, mi, ei in [(1.0, 0.5, 0.4), (0.0, 1.0, 0.4)])
        terms = GaussianLikelihood().evaluate(moments, y, math.log(noise))
        assert terms.value == pytest.approx(expected, rel=1e-12)

    def test_excess_is_not_floored(self):
        moments = _moments([[0.0]], [[1.2]], [[0.0]], [1.0])
        terms = GaussianLikelihood().evaluate(moments, np.zeros(1), 0.0)
        assert terms.value == pytest.approx(-0.5 * math.log(2 * math.pi) + 0.1, rel=1e-12)

    def test_gradients(self, rng):
        base = _random_moments(rng, 6, 1)
        y = rng.normal(size=6)
        log_noise = -0.7
        terms = GaussianLikelihood().evaluate(base, y, log_noise)

        def value(field):
            def evaluate(array):
                changed = base.model_copy(update={field: array})
                return GaussianLikelihood().evaluate(changed, y, log_noise).value

            return evaluate

        assert relative_error(terms.mean_grad, central_difference(value("mean"), base.mean)) < 1e-6
        assert relative_error(terms.kernel_quad_grad, central_difference(value("kernel_quad"), base.kernel_quad)) < 1e-6
        assert relative_error(terms.sigma_quad_grad, central_difference(value("sigma_quad"), base.sigma_quad)) < 1e-6
        assert relative_error(terms.kernel_diag_grad, central_difference(value("kernel_diag"), base.kernel_diag)) < 1e-6
        numeric = central_difference(
            lambda v: GaussianLikelihood().evaluate(base, y, float(v[0])).value, np.array([log_noise]))
        assert terms.log_noise_grad == pytest.approx(numeric[0], rel=1e-6)

    def test_requires_noise(self):
        with pytest.raises(InvalidArgumentError, match="noise"):
            GaussianLikelihood().evaluate(_moments([[0.0]], [[1.0]], [[0.0]], [1.0]), np.zeros(1))


class TestSoftmaxLikelihood:

    def test_deterministic_latents_are_exact(self, rng):
        mean = rng.normal(size=(5, 3))
        moments = _moments(mean, np.ones((5, 3)), np.zeros((5, 3)), np.ones(3))
        y = np.array([0, 2, 1, 1, 0], dtype=np.float64)
        expected = np.sum(log_softmax(mean, axis=1)[np.arange(5), y.astype(int)])
        assert SoftmaxLikelihood().evaluate(moments, y).value == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("s", [0.0, 0.3, 2.0])
    def test_symmetric_two_classes(self, s):
        moments = _moments([[0.0, 0.0]], [[1.0 - s, 1.0 - s]], [[0.0, 0.0]], [1.0, 1.0])
        value = SoftmaxLikelihood().evaluate(moments, np.array([1.0])).value
        assert value == pytest.approx(-math.log(2.0) - s / 2.0, rel=1e-12)

    def test_bound_below_monte_carlo(self, rng):
        likelihood = SoftmaxLikelihood()
        for _ in range(5):
            moments = _random_moments(rng, 1, 3)
            label = int(rng.integers(3))
            bound = likelihood.evaluate(moments, np.array([float(label)])).value
            samples = moments.mean[0] + np.sqrt(moments.variance[0]) * rng.standard_normal((100_000, 3))
            log_probabilities = log_softmax(samples, axis=1)[:, label]
            estimate = log_probabilities.mean()
            error = log_probabilities.std() / math.sqrt(samples.shape[0])
            assert bound <= estimate + 3.0 * error

    def test_gradients(self, rng):
        base = _random_moments(rng, 4, 3)
        y = np.array([0.0, 2.0, 1.0, 2.0])
        terms = SoftmaxLikelihood().evaluate(base, y)

        def value(field):
            return lambda array: SoftmaxLikelihood().evaluate(base.model_copy(update={field: array}), y).value

        assert relative_error(terms.mean_grad, central_difference(value("mean"), base.mean)) < 1e-6
        assert relative_error(terms.kernel_quad_grad, central_difference(value("kernel_quad"), base.kernel_quad)) < 1e-6
        assert relative_error(terms.sigma_quad_grad, central_difference(value("sigma_quad"), base.sigma_quad)) < 1e-6
        assert relative_error(terms.kernel_diag_grad, central_difference(value("kernel_diag"), base.kernel_diag)) < 1e-6

    def test_floored_variance_has_no_gradient(self):
        moments = _moments([[0.0, 1.0]], [[2.0, 0.5]], [[0.1, 0.1]], [1.0, 1.0])
        terms = SoftmaxLikelihood().evaluate(moments, np.array([0.0]))
        assert terms.sigma_quad_grad[0, 0] == 0.0
        assert terms.sigma_quad_grad[0, 1] < 0.0

    @pytest.mark.parametrize("labels", [[0.0, 3.0], [-1.0, 0.0], [0.5, 1.0]])
    def test_invalid_labels(self, labels):
        with pytest.raises(InvalidArgumentError, match="integers"):
            SoftmaxLikelihood().validate_targets(np.array(labels), 3)


def test_select_likelihood():
    assert isinstance(select_likelihood(1), GaussianLikelihood)
    assert isinstance(select_likelihood(4), SoftmaxLikelihood)
