"""
Dimension-factorized RBF kernel on the inducing grid and the linear embedding
that maps raw features into the grid's coordinate system.

k(x, x') = σ_f² Π_d exp(−(x_d − x'_d)² / (2 l_d²)); each factor carries σ_f^{2/D}
so that the Kronecker product of the factor matrices is exactly K_mm.
"""
import logging
import math

import numpy as np

from ..model.kernel import RBFParams, LinearEmbedding
from ...util.constant import EMBEDDING_SPREAD
from ...util.error import InvalidArgumentError, ShapeMismatchError
from ...util.function import get_jitter

logger = logging.getLogger(__name__)


def _check_dim(params: RBFParams, dim: int):
    if not 0 <= dim < params.ndim:
        raise InvalidArgumentError(f"Kernel dimension {dim} out of range [0, {params.ndim}).")


def _factor_variance(params: RBFParams) -> float:
    return math.exp(params.log_variance / params.ndim)


def k_dim_eval(params: RBFParams, dim: int, a: float, b: float) -> float:
    _check_dim(params, dim)
    lengthscale = math.exp(params.log_lengthscales[dim])
    return _factor_variance(params) * math.exp(-0.5 * (a - b) ** 2 / lengthscale ** 2)


def _check_points(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 1 or points.size == 0:
        raise ShapeMismatchError(f"Grid points must be a non-empty vector, got shape {points.shape}.")
    if np.any(np.diff(points) <= 0.0):
        raise InvalidArgumentError("Grid points must be strictly increasing.")
    return points


def _raw_factor(params: RBFParams, dim: int, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lengthscale = math.exp(params.log_lengthscales[dim])
    scaled_sq = ((points[:, None] - points[None, :]) / lengthscale) ** 2
    return _factor_variance(params) * np.exp(-0.5 * scaled_sq), scaled_sq


def k_dim_matrix(params: RBFParams, dim: int, grid_points: np.ndarray, jitter: float | None = None) -> np.ndarray:
    """
    Factor matrix K_d with entries k_d(z_p, z_q) plus a relative diagonal jitter.

    The jitter is `jitter` times the mean diagonal, so it scales with σ_f^{2/D}.
    """
    _check_dim(params, dim)
    points = _check_points(grid_points)
    jitter = get_jitter() if jitter is None else jitter
    matrix, _ = _raw_factor(params, dim, points)
    matrix[np.diag_indices_from(matrix)] += jitter * _factor_variance(params)
    return matrix


def k_dim_matrix_grad(params: RBFParams, dim: int, grid_points: np.ndarray,
                      jitter: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Entrywise derivatives of K_d with respect to log l_d and log σ_f².

    Returns:
        (∂K_d/∂log l_d, ∂K_d/∂log σ_f²)
    """
    _check_dim(params, dim)
    points = _check_points(grid_points)
    raw, scaled_sq = _raw_factor(params, dim, points)
    return raw * scaled_sq, k_dim_matrix(params, dim, points, jitter) / params.ndim


def rbf_matrix(params: RBFParams, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Dense cross-covariance between the rows of x1 and x2, no jitter."""
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    if x1.shape[1] != params.ndim or x2.shape[1] != params.ndim:
        raise ShapeMismatchError(f"Inputs must have {params.ndim} columns.")
    scaled_sq = np.zeros((x1.shape[0], x2.shape[0]))
    for d, lengthscale in enumerate(params.lengthscales):
        scaled_sq += ((x1[:, d, None] - x2[None, :, d]) / lengthscale) ** 2
    return params.variance * np.exp(-0.5 * scaled_sq)


def rbf_eval(params: RBFParams, x: np.ndarray, x2: np.ndarray) -> float:
    return float(rbf_matrix(params, np.reshape(x, (1, -1)), np.reshape(x2, (1, -1)))[0, 0])


def init_embedding(input_dim: int, output_dim: int, rng: np.random.Generator) -> LinearEmbedding:
    """P with entries uniform in [−1/√D, 1/√D] and identity renormalization."""
    bound = 1.0 / math.sqrt(input_dim)
    return LinearEmbedding(
        projection=rng.uniform(-bound, bound, size=(output_dim, input_dim)),
        shift=np.zeros(output_dim),
        scale=np.ones(output_dim),
    )


def _check_inputs(embedding: LinearEmbedding, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != embedding.input_dim or x.ndim not in (1, 2):
        raise ShapeMismatchError(f"Embedding expects {embedding.input_dim} input features, got shape {x.shape}.")
    return x


def embed(embedding: LinearEmbedding, x: np.ndarray) -> np.ndarray:
    """P·x for one point (D,) or a batch (n, D)."""
    x = _check_inputs(embedding, x)
    return x @ embedding.projection.T


def embed_grad(embedding: LinearEmbedding, x: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """∂/∂P of Σ_i upstream_i·(P·x_i); for one point this is the outer product upstream ⊗ x."""
    x = _check_inputs(embedding, x)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.ndim == 1:
        return np.outer(upstream, x)
    return upstream.T @ x


def embedded_inputs(embedding: LinearEmbedding, x: np.ndarray) -> np.ndarray:
    """Renormalized projection (P·x − shift) / scale, the coordinates fed to the grid."""
    return (embed(embedding, x) - embedding.shift) / embedding.scale


def update_embedding_statistics(embedding: LinearEmbedding, x: np.ndarray, momentum: float) -> LinearEmbedding:
    """
    Refresh the running shift/scale of P·x from a batch.

    The first batch sets the statistics outright; later batches blend them in
    with weight `momentum`. The scale is EMBEDDING_SPREAD standard deviations so
    the bulk of the batch lands inside the fixed [−1, 1] grid.
    """
    projected = np.atleast_2d(embed(embedding, x))
    if projected.shape[0] == 0:
        return embedding
    mean = projected.mean(axis=0)
    std = projected.std(axis=0)
    std = np.where(std > 1e-12, std, 1.0)
    scale = EMBEDDING_SPREAD * std
    if embedding.initialized:
        mean = (1.0 - momentum) * embedding.shift + momentum * mean
        scale = (1.0 - momentum) * embedding.scale + momentum * scale
    return embedding.model_copy(update={"shift": mean, "scale": scale, "initialized": True})
