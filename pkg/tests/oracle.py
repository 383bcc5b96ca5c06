"""
Brute-force dense counterparts of the structured computations, and model
factories for tiny random instances.
"""
from functools import reduce

import numpy as np
from scipy.special import logsumexp

from src.data.function.interpolation import grid_build, weights_nd
from src.data.function.kernels import k_dim_matrix, embedded_inputs, init_embedding, update_embedding_statistics
from src.data.function.tt_algebra import tt_to_dense
from src.data.function.variational_gp import init_model, model_parameters, with_parameters
from src.data.model.gp import TTGPModel
from src.data.model.kernel import RBFParams


def make_model(rng: np.random.Generator, ndim: int = 2, m0: int = 5, rank: int = 2, num_classes: int = 1,
               input_dim: int | None = None, per_class: bool = False, tied: bool = False,
               lengthscale: float = 0.8, variance: float = 1.3, noise_variance: float = 0.3) -> TTGPModel:
    """Prior-matched model on a [-1, 1] grid; `input_dim` adds a linear embedding onto `ndim` dimensions."""
    grid = grid_build([(-1.0, 1.0)] * ndim, m0)
    count = num_classes if per_class and num_classes > 1 else 1
    kernels = [
        RBFParams.create(
            lengthscales=np.full(ndim, lengthscale) * (1.0 if tied else rng.uniform(0.8, 1.2, size=ndim)),
            variance=variance * rng.uniform(0.8, 1.2),
            noise_variance=noise_variance if num_classes == 1 else None,
            tied=tied,
        )
        for _ in range(count)
    ]
    embedding = init_embedding(input_dim, ndim, rng) if input_dim is not None else None
    return init_model(grid, kernels, num_classes, rank, rng, embedding)


def randomize(model: TTGPModel, rng: np.random.Generator, mu_scale: float = 0.5,
              sigma_scale: float = 0.1) -> TTGPModel:
    """Random variational parameters: Gaussian whitened TT cores and a perturbed whitened log-Cholesky Σ."""
    blocks = model_parameters(model)
    for name, value in blocks.items():
        if name.startswith("mu/"):
            blocks[name] = rng.normal(0.0, mu_scale, size=value.shape)
        elif name.startswith("sigma/"):
            blocks[name] = np.tril(value + rng.normal(0.0, sigma_scale, size=value.shape))
    return with_parameters(model, blocks)


def with_embedding_statistics(model: TTGPModel, x: np.ndarray) -> TTGPModel:
    return model.model_copy(update={"embedding": update_embedding_statistics(model.embedding, x, 0.1)})


def interior_inputs(rng: np.random.Generator, n: int, ndim: int, bound: float = 0.9) -> np.ndarray:
    return rng.uniform(-bound, bound, size=(n, ndim))


def dense_interpolation(model: TTGPModel, x: np.ndarray) -> np.ndarray:
    """W with row i equal to w_i^1 ⊗ … ⊗ w_i^D."""
    inputs = embedded_inputs(model.embedding, x) if model.embedding is not None else x
    weights = weights_nd(model.grid, inputs)
    rows = np.ones((inputs.shape[0], 1))
    for d in range(model.grid.ndim):
        factor = weights.factor_matrix(d).toarray()
        rows = (rows[:, :, None] * factor[:, None, :]).reshape(inputs.shape[0], -1)
    return rows


def dense_kernel(model: TTGPModel, c: int = 0) -> np.ndarray:
    params = model.kernel_for(c)
    return reduce(np.kron, [k_dim_matrix(params, d, model.grid.points[d]) for d in range(model.grid.ndim)])


def dense_sigma(model: TTGPModel, c: int = 0) -> np.ndarray:
    return reduce(np.kron, [lower @ lower.T for lower in model.sigma_chol[c].lower_factors])


def dense_mu(model: TTGPModel, c: int = 0) -> np.ndarray:
    return tt_to_dense(model.mu[c]).ravel()


def dense_moments(model: TTGPModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Latent means and unfloored variances (n, C) from materialized W, K_mm, Σ, μ."""
    w = dense_interpolation(model, x)
    means, variances = [], []
    for c in range(model.num_classes):
        means.append(w @ dense_mu(model, c))
        kernel, sigma = dense_kernel(model, c), dense_sigma(model, c)
        quad = np.einsum("im,mk,ik->i", w, sigma - kernel, w)
        variances.append(model.kernel_for(c).variance + quad)
    return np.stack(means, axis=1), np.stack(variances, axis=1)


def dense_kl(model: TTGPModel, c: int = 0) -> float:
    kernel, sigma, mu = dense_kernel(model, c), dense_sigma(model, c), dense_mu(model, c)
    _, logdet_kernel = np.linalg.slogdet(kernel)
    _, logdet_sigma = np.linalg.slogdet(sigma)
    kernel_inv = np.linalg.inv(kernel)
    return 0.5 * (logdet_kernel - logdet_sigma - mu.size + np.trace(kernel_inv @ sigma) + mu @ kernel_inv @ mu)


def dense_elbo(model: TTGPModel, x: np.ndarray, y: np.ndarray, n_total: int) -> float:
    kl = sum(dense_kl(model, c) for c in range(model.num_classes))
    if x.shape[0] == 0:
        return -kl
    means, variances = dense_moments(model, x)
    if model.is_regression:
        noise = model.kernels[0].noise_variance
        data = np.sum(-0.5 * np.log(2.0 * np.pi * noise) - ((y - means[:, 0]) ** 2 + variances[:, 0]) / (2 * noise))
    else:
        labels = y.astype(np.int64)
        logits = means + 0.5 * np.maximum(variances, 0.0)
        data = np.sum(means[np.arange(y.size), labels] - logsumexp(logits, axis=1))
    return n_total / x.shape[0] * data - kl


def collapsed_bound(model: TTGPModel, x: np.ndarray, y: np.ndarray) -> float:
    """
    max over q of the regression bound (n_total = n): log N(y | 0, W K Wᵀ + ν²I) − Σ_i K̃_ii / (2ν²).
    """
    w = dense_interpolation(model, x)
    kernel = dense_kernel(model)
    noise = model.kernels[0].noise_variance
    covariance = w @ kernel @ w.T + noise * np.eye(x.shape[0])
    _, logdet = np.linalg.slogdet(covariance)
    fit = y @ np.linalg.solve(covariance, y)
    correction = model.kernels[0].variance - np.einsum("im,mk,ik->i", w, kernel, w)
    return -0.5 * (x.shape[0] * np.log(2.0 * np.pi) + logdet + fit) - np.sum(correction) / (2.0 * noise)


def central_difference(function, value: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function of an array."""
    value = np.array(value, dtype=np.float64)
    grad = np.zeros_like(value)
    for index in np.ndindex(value.shape):
        original = value[index]
        value[index] = original + step
        upper = function(value)
        value[index] = original - step
        lower = function(value)
        value[index] = original
        grad[index] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(actual: np.ndarray, expected: np.ndarray, floor: float = 1e-6) -> float:
    return float(np.linalg.norm(actual - expected) / max(np.linalg.norm(expected), floor))
