import logging
import math
from abc import ABC, abstractmethod

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import logsumexp

from ...util.error import InvalidArgumentError, ShapeMismatchError

logger = logging.getLogger(__name__)


class LatentMoments(BaseModel):
    """
    Per-point quantities of q(f_i^c): the mean m and the two Kronecker quadratic
    forms a = wᵀK_mm w and b = wᵀΣw, all of shape (n, C), plus σ_f² per class.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: np.ndarray
    kernel_quad: np.ndarray
    sigma_quad: np.ndarray
    kernel_diag: np.ndarray

    @property
    def excess_variance(self) -> np.ndarray:
        """σ_f² − a + b, not floored."""
        return self.kernel_diag[None, :] - self.kernel_quad + self.sigma_quad

    @property
    def variance(self) -> np.ndarray:
        return np.maximum(self.excess_variance, 0.0)


class LikelihoodTerms(BaseModel):
    """
    Summed expected log-likelihood of a batch and its derivatives with respect
    to every per-point moment.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    value: float
    mean_grad: np.ndarray
    kernel_quad_grad: np.ndarray
    sigma_quad_grad: np.ndarray
    kernel_diag_grad: np.ndarray
    log_noise_grad: float = 0.0


# noinspection PyTypeHints
class ILikelihood(ABC):

    @abstractmethod
    def validate_targets(self, targets: np.ndarray, num_classes: int):
        """
        Checks that targets suit this likelihood.

        Raises:
            InvalidArgumentError: If any target is invalid.
        """
        pass

    @abstractmethod
    def evaluate(self, moments: LatentMoments, targets: np.ndarray,
                 log_noise_variance: float | None = None) -> LikelihoodTerms:
        """
        Computes the batch sum of the (bounded) expected log-likelihood.

        Args:
            moments: Latent moments of the batch.
            targets: Target vector of length n.
            log_noise_variance: log ν², regression only.

        Returns:
            The value and its gradients.
        """
        pass


class GaussianLikelihood(ILikelihood):
    """
    E_q[log N(y | f, ν²)] = log N(y | m, ν²) − (σ_f² − a + b) / (2ν²).
    """

    def validate_targets(self, targets: np.ndarray, num_classes: int):
        if num_classes != 1:
            raise InvalidArgumentError("The Gaussian likelihood handles a single output.")
        if not np.all(np.isfinite(targets)):
            raise InvalidArgumentError("Regression targets must be finite.")

    def evaluate(self, moments: LatentMoments, targets: np.ndarray,
                 log_noise_variance: float | None = None) -> LikelihoodTerms:
        if log_noise_variance is None:
            raise InvalidArgumentError("The Gaussian likelihood requires a noise variance.")
        if moments.mean.shape != (targets.size, 1):
            raise ShapeMismatchError(f"Expected moments of shape ({targets.size}, 1), got {moments.mean.shape}.")
        noise = math.exp(log_noise_variance)
        residual = targets - moments.mean[:, 0]
        excess = moments.excess_variance[:, 0]
        num_points = targets.size
        value = (-0.5 * num_points * math.log(2.0 * math.pi * noise)
                 - float(np.sum(residual ** 2 + excess)) / (2.0 * noise))
        constant = np.full((num_points, 1), 1.0 / (2.0 * noise))
        return LikelihoodTerms(
            value=value,
            mean_grad=(residual / noise)[:, None],
            kernel_quad_grad=constant,
            sigma_quad_grad=-constant,
            kernel_diag_grad=np.array([-num_points / (2.0 * noise)]),
            log_noise_grad=-0.5 * num_points + float(np.sum(residual ** 2 + excess)) / (2.0 * noise),
        )


class SoftmaxLikelihood(ILikelihood):
    """
    Lower bound E_q[f_y] − log Σ_c exp(m_c + s_c/2) on E_q[log softmax_y(f)],
    with s_c = max(σ_f² − a_c + b_c, 0).
    """

    def validate_targets(self, targets: np.ndarray, num_classes: int):
        if num_classes < 2:
            raise InvalidArgumentError("The softmax likelihood needs at least two classes.")
        if targets.size == 0:
            return
        if np.any(targets != np.round(targets)) or targets.min() < 0 or targets.max() >= num_classes:
            raise InvalidArgumentError(f"Class labels must be integers in [0, {num_classes}).")

    def evaluate(self, moments: LatentMoments, targets: np.ndarray,
                 log_noise_variance: float | None = None) -> LikelihoodTerms:
        num_points, num_classes = moments.mean.shape
        if targets.shape != (num_points,):
            raise ShapeMismatchError(f"Expected {num_points} labels, got shape {targets.shape}.")
        labels = targets.astype(np.int64)
        excess = moments.excess_variance
        active = excess > 0.0
        logits = moments.mean + 0.5 * np.where(active, excess, 0.0)
        normalizer = logsumexp(logits, axis=1)
        probabilities = np.exp(logits - normalizer[:, None])
        rows = np.arange(num_points)
        value = float(np.sum(moments.mean[rows, labels] - normalizer))

        one_hot = np.zeros((num_points, num_classes))
        one_hot[rows, labels] = 1.0
        excess_grad = np.where(active, -0.5 * probabilities, 0.0)
        return LikelihoodTerms(
            value=value,
            mean_grad=one_hot - probabilities,
            kernel_quad_grad=-excess_grad,
            sigma_quad_grad=excess_grad,
            kernel_diag_grad=excess_grad.sum(axis=0),
        )


def select_likelihood(num_classes: int) -> ILikelihood:
    return GaussianLikelihood() if num_classes == 1 else SoftmaxLikelihood()
