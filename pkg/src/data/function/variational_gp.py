"""
TT-GP: variational GP with grid inducing inputs, a TT-format variational mean
and a Kronecker-factored variational covariance.

Every quantity of the evidence lower bound is computed through the TT/Kronecker
structure; no m×m matrix is ever formed. Gradients are analytic and expressed in
the unconstrained parameter space returned by `model_parameters`, which whitens
the variational parameters with the Cholesky factors of K_mm.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property

import numpy as np
from scipy import linalg, sparse
from scipy.special import softmax

from .interpolation import weights_nd
from .kernels import k_dim_matrix, k_dim_matrix_grad, embedded_inputs, embed_grad
from .kron_algebra import (chol_factorwise, factor_multiplicities, lower_from_unconstrained, lower_to_unconstrained,
                           lower_grad_from_covariance_grad, covariance_grad_from_chol_grad, unconstrained_lower_grad)
from .likelihood import LatentMoments, ILikelihood, select_likelihood
from .tt_algebra import TTBatchContraction, QuadFormSweep, tt_random, tt_apply_factors, tt_solve_lower
from ..model.dataset import DatasetStatistics
from ..model.gp import TTGPModel
from ..model.grid import Grid
from ..model.kernel import RBFParams, LinearEmbedding
from ..model.kronecker import KroneckerMatrix, KroneckerChol
from ..model.tt_vector import TTVector
from ...util import ParameterBlocks
from ...util.constant import MU_INIT_SCALE
from ...util.error import InvalidArgumentError, ShapeMismatchError
from ...util.function import prod_except

logger = logging.getLogger(__name__)

PREDICT_CHUNK_SIZE = 4096


def mu_block(c: int, d: int) -> str:
    return f"mu/{c}/{d}"


def sigma_block(c: int, d: int) -> str:
    return f"sigma/{c}/{d}"


def kernel_block(k: int, name: str) -> str:
    return f"kernel/{k}/{name}"


PROJECTION_BLOCK = "embedding/projection"


class _KernelPrior:
    """K_mm = K_1 ⊗ … ⊗ K_D of one kernel on the grid."""

    def __init__(self, params: RBFParams, grid: Grid):
        self.params = params
        self.grid = grid
        self.matrix = KroneckerMatrix(factors=[k_dim_matrix(params, d, grid.points[d]) for d in range(grid.ndim)])

    @cached_property
    def chol(self) -> KroneckerChol:
        return chol_factorwise(self.matrix)


def _whiten_lower(kernel_lower: np.ndarray, sigma_lower: np.ndarray) -> np.ndarray:
    return np.tril(linalg.solve_triangular(kernel_lower, sigma_lower, lower=True))


class _ClassPrior:
    """
    KL(q(u^c) || p(u^c)) in whitened coordinates μ̃ = L⁻¹μ and S_d = L_d⁻¹·chol(Σ_d),
    L = L_1 ⊗ … ⊗ L_D the Cholesky factor of K_mm. There it reads
    ½(‖μ̃‖² + Π_d‖S_d‖²_F − m − log|SSᵀ|) and does not involve K_mm.
    """

    def __init__(self, mu: TTVector, sigma_chol: KroneckerChol, kernel: _KernelPrior):
        self.kernel = kernel
        self.sigma_chol = sigma_chol
        self.sigma = sigma_chol.to_matrix()
        kernel_lowers = kernel.chol.lower_factors
        self.mu_white = tt_solve_lower(mu, kernel_lowers)
        self.sigma_white = [_whiten_lower(k_lower, s_lower)
                            for k_lower, s_lower in zip(kernel_lowers, sigma_chol.lower_factors)]
        self.multiplicities = factor_multiplicities(sigma_chol.sizes)
        self.norms = np.array([np.sum(lower ** 2) for lower in self.sigma_white])
        self.quad = QuadFormSweep(self.mu_white, KroneckerMatrix(factors=[np.eye(n) for n in sigma_chol.sizes]))
        logdet = sum(2.0 * c * np.sum(np.log(np.diag(lower)))
                     for c, lower in zip(self.multiplicities, self.sigma_white))
        num_inducing = float(np.prod(np.asarray(sigma_chol.sizes, dtype=np.float64)))
        self.value = 0.5 * (self.quad.value + float(np.prod(self.norms)) - num_inducing - logdet)

    def subtract_grads(self, acc: "_Accumulator", c: int):
        # ½·log|SSᵀ| is added per log-diagonal entry in _to_blocks
        norms_except = prod_except(self.norms)
        for d, grad in enumerate(self.quad.core_grads()):
            acc.add(("mu_white", c, d), -0.5 * grad)
        for d, lower in enumerate(self.sigma_white):
            acc.add(("sigma_white", c, d), -norms_except[d] * lower)


class _Accumulator:
    """Objective value with gradients keyed by (kind, index...) before mapping to parameter blocks."""

    def __init__(self, value: float = 0.0):
        self.value = value
        self.grads: dict[tuple, np.ndarray] = {}

    def add(self, key: tuple, grad):
        current = self.grads.get(key)
        self.grads[key] = np.asarray(grad, dtype=np.float64) if current is None else current + grad

    def merge(self, other: "_Accumulator"):
        self.value += other.value
        for key, grad in other.grads.items():
            self.add(key, grad)

    def scaled(self, factor: float) -> "_Accumulator":
        result = _Accumulator(self.value * factor)
        result.grads = {key: grad * factor for key, grad in self.grads.items()}
        return result


def _row_dots(weights: sparse.csr_matrix, dense: np.ndarray) -> np.ndarray:
    return np.asarray(weights.multiply(dense).sum(axis=1)).ravel()


def _weighted_gram(weights: sparse.csr_matrix, coefficients: np.ndarray) -> np.ndarray:
    """Wᵀ·diag(c)·W as a dense matrix."""
    return (weights.T @ sparse.diags(coefficients) @ weights).toarray()


def _grid_inputs(model: TTGPModel, x: np.ndarray) -> np.ndarray:
    return embedded_inputs(model.embedding, x) if model.embedding is not None else x


class _Forward:
    """Interpolation weights, TT contractions and Kronecker quadratic forms of one batch."""

    def __init__(self, model: TTGPModel, kernels: list[_KernelPrior], sigmas: list[KroneckerMatrix], x: np.ndarray):
        self.inputs = _grid_inputs(model, x)
        self.weights = weights_nd(model.grid, self.inputs)
        ndim = model.grid.ndim
        self.factor_matrices = [self.weights.factor_matrix(d) for d in range(ndim)]
        self.kernel_applied = [[w @ kernel.matrix.factors[d] for d, w in enumerate(self.factor_matrices)]
                               for kernel in kernels]
        self.sigma_applied = [[w @ sigma.factors[d] for d, w in enumerate(self.factor_matrices)]
                              for sigma in sigmas]
        self.kernel_terms = [np.stack([_row_dots(w, wk) for w, wk in zip(self.factor_matrices, applied)], axis=1)
                             for applied in self.kernel_applied]
        self.sigma_terms = [np.stack([_row_dots(w, ws) for w, ws in zip(self.factor_matrices, applied)], axis=1)
                            for applied in self.sigma_applied]
        self.contractions = [TTBatchContraction(mu, self.factor_matrices) for mu in model.mu]

        classes = range(model.num_classes)
        self.moments = LatentMoments(
            mean=np.stack([t.values for t in self.contractions], axis=1),
            kernel_quad=np.stack([self.kernel_terms[model.kernel_index(c)].prod(axis=1) for c in classes], axis=1),
            sigma_quad=np.stack([terms.prod(axis=1) for terms in self.sigma_terms], axis=1),
            kernel_diag=np.array([model.kernel_for(c).variance for c in classes]),
        )


def _data_pass(model: TTGPModel, kernels: list[_KernelPrior], sigmas: list[KroneckerMatrix],
               x: np.ndarray, y: np.ndarray, likelihood: ILikelihood, with_grad: bool) -> _Accumulator:
    forward = _Forward(model, kernels, sigmas, x)
    terms = likelihood.evaluate(forward.moments, y, model.kernels[0].log_noise_variance)
    acc = _Accumulator(terms.value)
    if not with_grad:
        return acc

    kernel_except = [prod_except(t) for t in forward.kernel_terms]
    sigma_except = [prod_except(t) for t in forward.sigma_terms]
    for c in range(model.num_classes):
        k = model.kernel_index(c)
        for d, grad in enumerate(forward.contractions[c].core_grads(terms.mean_grad[:, c])):
            acc.add(("mu", c, d), grad)
        for d, w in enumerate(forward.factor_matrices):
            acc.add(("sigma", c, d), _weighted_gram(w, terms.sigma_quad_grad[:, c] * sigma_except[c][:, d]))
            acc.add(("kernel", k, d), _weighted_gram(w, terms.kernel_quad_grad[:, c] * kernel_except[k][:, d]))
        acc.add(("kernel_diag", k), terms.kernel_diag_grad[c])
    if model.is_regression:
        acc.add(("log_noise",), terms.log_noise_grad)

    if model.embedding is not None:
        n, ndim = forward.inputs.shape
        weight_grads = [t.weight_grads() for t in forward.contractions]
        input_grad = np.zeros((n, ndim))
        for d in range(ndim):
            upstream = np.zeros((n, model.grid.sizes[d]))
            for c in range(model.num_classes):
                k = model.kernel_index(c)
                upstream += terms.mean_grad[:, c, None] * weight_grads[c][d]
                upstream += (2.0 * terms.kernel_quad_grad[:, c] * kernel_except[k][:, d])[:, None] \
                    * forward.kernel_applied[k][d]
                upstream += (2.0 * terms.sigma_quad_grad[:, c] * sigma_except[c][:, d])[:, None] \
                    * forward.sigma_applied[c][d]
            input_grad[:, d] = _row_dots(forward.weights.derivative_matrix(d), upstream)
        # shift and scale are running statistics, held constant here
        acc.add(("projection",), embed_grad(model.embedding, x, input_grad / model.embedding.scale))
    return acc


def _data_terms(model: TTGPModel, kernels: list[_KernelPrior], sigmas: list[KroneckerMatrix],
                x: np.ndarray, y: np.ndarray, likelihood: ILikelihood, with_grad: bool, workers: int) -> _Accumulator:
    if workers <= 1 or x.shape[0] < 2 * workers:
        return _data_pass(model, kernels, sigmas, x, y, likelihood, with_grad)
    chunks = np.array_split(np.arange(x.shape[0]), workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        parts = list(executor.map(
            lambda index: _data_pass(model, kernels, sigmas, x[index], y[index], likelihood, with_grad), chunks))
    total = parts[0]
    for part in parts[1:]:
        total.merge(part)
    return total


def _check_inputs(model: TTGPModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1 and x.size == model.input_dim:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ShapeMismatchError(f"Expected inputs with {model.input_dim} features, got shape {x.shape}.")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("Inputs must be finite.")
    return x


def _evaluate(model: TTGPModel, x: np.ndarray, y: np.ndarray, n_total: int,
              with_grad: bool, workers: int = 1) -> tuple[_Accumulator, list[_KernelPrior], list[_ClassPrior]]:
    x = _check_inputs(model, x)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != x.shape[0]:
        raise ShapeMismatchError(f"Got {x.shape[0]} inputs but {y.shape[0]} targets.")
    if x.shape[0] == 0 and n_total > 0:
        raise InvalidArgumentError("Empty batch with a non-empty training set.")
    if n_total < x.shape[0]:
        raise InvalidArgumentError(f"n_total ({n_total}) is smaller than the batch ({x.shape[0]}).")

    kernels = [_KernelPrior(params, model.grid) for params in model.kernels]
    priors = [_ClassPrior(model.mu[c], model.sigma_chol[c], kernels[model.kernel_index(c)])
              for c in range(model.num_classes)]
    acc = _Accumulator()
    if x.shape[0] > 0:
        likelihood = select_likelihood(model.num_classes)
        likelihood.validate_targets(y, model.num_classes)
        sigmas = [prior.sigma for prior in priors]
        data = _data_terms(model, kernels, sigmas, x, y, likelihood, with_grad, workers)
        acc.merge(data.scaled(n_total / x.shape[0]))
    data_value = acc.value
    for c, prior in enumerate(priors):
        acc.value -= prior.value
        if with_grad:
            prior.subtract_grads(acc, c)
    logger.debug("ELBO %.6f = data %.6f − KL %.6f", acc.value, data_value, data_value - acc.value)
    return acc, kernels, priors


def _to_blocks(model: TTGPModel, acc: _Accumulator, kernels: list[_KernelPrior],
               priors: list[_ClassPrior]) -> ParameterBlocks:
    """
    Chain rule from (μ, Σ_d, K_d) to the whitened blocks μ̃, S_d and the kernel
    hyperparameters, with μ = (⊗L_d)μ̃, Σ_d = L_d·S_d·S_dᵀ·L_dᵀ and L_d = chol(K_d).
    """
    ndim = model.grid.ndim
    blocks: ParameterBlocks = {}
    for c in range(model.num_classes):
        k = model.kernel_index(c)
        prior = priors[c]
        kernel_lowers = kernels[k].chol.lower_factors
        for d, (kernel_lower, white_core) in enumerate(zip(kernel_lowers, prior.mu_white.cores)):
            core_grad = acc.grads.get(("mu", c, d), np.zeros_like(white_core))
            blocks[mu_block(c, d)] = np.einsum("nk,anb->akb", kernel_lower, core_grad) \
                + acc.grads[("mu_white", c, d)]
            acc.add(("kernel_chol", k, d), np.einsum("anb,akb->nk", core_grad, white_core))
        for d, (kernel_lower, white) in enumerate(zip(kernel_lowers, prior.sigma_white)):
            covariance_grad = acc.grads.get(("sigma", c, d), np.zeros_like(white))
            white_grad = lower_grad_from_covariance_grad(white, kernel_lower.T @ covariance_grad @ kernel_lower)
            raw = unconstrained_lower_grad(white, white_grad + acc.grads[("sigma_white", c, d)])
            # +½·log|SSᵀ| contributes c_d per log-diagonal entry
            raw[np.diag_indices_from(raw)] += prior.multiplicities[d]
            blocks[sigma_block(c, d)] = raw
            sigma_lower = prior.sigma_chol.lower_factors[d]
            acc.add(("kernel_chol", k, d), (covariance_grad + covariance_grad.T) @ sigma_lower @ white.T)

    for k, params in enumerate(model.kernels):
        lengthscale_grad = np.zeros(ndim)
        variance_grad = float(acc.grads.get(("kernel_diag", k), 0.0)) * params.variance
        for d in range(ndim):
            matrix_grad = covariance_grad_from_chol_grad(kernels[k].chol.lower_factors[d],
                                                         acc.grads[("kernel_chol", k, d)])
            if ("kernel", k, d) in acc.grads:
                matrix_grad = matrix_grad + acc.grads[("kernel", k, d)]
            d_lengthscale, d_variance = k_dim_matrix_grad(params, d, model.grid.points[d])
            lengthscale_grad[d] = np.sum(matrix_grad * d_lengthscale)
            variance_grad += float(np.sum(matrix_grad * d_variance))
        if params.tied:
            lengthscale_grad = np.full(ndim, lengthscale_grad.sum())
        blocks[kernel_block(k, "log_lengthscales")] = lengthscale_grad
        blocks[kernel_block(k, "log_variance")] = np.array([variance_grad])
        if params.log_noise_variance is not None:
            blocks[kernel_block(k, "log_noise_variance")] = np.array([float(acc.grads.get(("log_noise",), 0.0))])

    if model.embedding is not None:
        blocks[PROJECTION_BLOCK] = acc.grads.get(("projection",), np.zeros_like(model.embedding.projection))
    return blocks


def init_model(grid: Grid, kernels: list[RBFParams], num_classes: int, tt_rank: int, rng: np.random.Generator,
               embedding: LinearEmbedding | None = None, statistics: DatasetStatistics | None = None) -> TTGPModel:
    """
    Prior-matched start: the whitened mean μ̃^c has N(0, (0.05/√r)²) core entries
    and S^c = I, so μ^c = Lμ̃^c and Σ^c = K_mm factor by factor.
    """
    scale = MU_INIT_SCALE / math.sqrt(tt_rank)
    priors = [_KernelPrior(params, grid) for params in kernels]
    chols = [priors[0 if len(kernels) == 1 else c].chol for c in range(num_classes)]
    mu = [tt_apply_factors(tt_random(grid.sizes, tt_rank, rng, scale), chol.lower_factors) for chol in chols]
    model = TTGPModel(grid=grid, kernels=kernels, embedding=embedding, num_classes=num_classes,
                      mu=mu, sigma_chol=chols, statistics=statistics)
    logger.info("Initialized TT-GP with grid %s, TT-ranks %s, %d class(es).", grid.sizes, model.tt_ranks, num_classes)
    return model


def model_parameters(model: TTGPModel) -> ParameterBlocks:
    """
    Named unconstrained parameter blocks: whitened TT cores μ̃ = L⁻¹μ, log-Cholesky
    whitened covariance factors S_d = L_d⁻¹·chol(Σ_d), log-hyperparameters, P.
    """
    kernels = [_KernelPrior(params, model.grid) for params in model.kernels]
    blocks: ParameterBlocks = {}
    for c in range(model.num_classes):
        kernel_lowers = kernels[model.kernel_index(c)].chol.lower_factors
        for d, core in enumerate(tt_solve_lower(model.mu[c], kernel_lowers).cores):
            blocks[mu_block(c, d)] = core
        for d, (kernel_lower, lower) in enumerate(zip(kernel_lowers, model.sigma_chol[c].lower_factors)):
            blocks[sigma_block(c, d)] = lower_to_unconstrained(_whiten_lower(kernel_lower, lower))
    for k, params in enumerate(model.kernels):
        blocks[kernel_block(k, "log_lengthscales")] = params.log_lengthscales.copy()
        blocks[kernel_block(k, "log_variance")] = np.array([params.log_variance])
        if params.log_noise_variance is not None:
            blocks[kernel_block(k, "log_noise_variance")] = np.array([params.log_noise_variance])
    if model.embedding is not None:
        blocks[PROJECTION_BLOCK] = model.embedding.projection.copy()
    return blocks


def _block_shapes(model: TTGPModel) -> dict[str, tuple[int, ...]]:
    shapes = {}
    for c in range(model.num_classes):
        for d, core in enumerate(model.mu[c].cores):
            shapes[mu_block(c, d)] = core.shape
        for d, lower in enumerate(model.sigma_chol[c].lower_factors):
            shapes[sigma_block(c, d)] = lower.shape
    for k, params in enumerate(model.kernels):
        shapes[kernel_block(k, "log_lengthscales")] = params.log_lengthscales.shape
        shapes[kernel_block(k, "log_variance")] = (1,)
        if params.log_noise_variance is not None:
            shapes[kernel_block(k, "log_noise_variance")] = (1,)
    if model.embedding is not None:
        shapes[PROJECTION_BLOCK] = model.embedding.projection.shape
    return shapes


def with_parameters(model: TTGPModel, blocks: ParameterBlocks) -> TTGPModel:
    """
    The model with every trainable parameter replaced from unconstrained blocks;
    μ and the Σ factors are recolored with the Cholesky factors of the new kernels.
    """
    expected = _block_shapes(model)
    if set(blocks) != set(expected):
        raise ShapeMismatchError(f"Parameter blocks differ: {sorted(set(blocks) ^ set(expected))}.")
    for name, shape in expected.items():
        if np.shape(blocks[name]) != shape:
            raise ShapeMismatchError(f"Block {name} has shape {np.shape(blocks[name])}, expected {shape}.")

    kernels = []
    for k, params in enumerate(model.kernels):
        noise_name = kernel_block(k, "log_noise_variance")
        kernels.append(RBFParams(
            log_lengthscales=blocks[kernel_block(k, "log_lengthscales")],
            log_variance=float(blocks[kernel_block(k, "log_variance")][0]),
            log_noise_variance=float(blocks[noise_name][0]) if noise_name in blocks else None,
            tied=params.tied,
        ))
    chols = [_KernelPrior(params, model.grid).chol for params in kernels]

    ndim = model.grid.ndim
    mu, sigma_chol = [], []
    for c in range(model.num_classes):
        kernel_lowers = chols[model.kernel_index(c)].lower_factors
        white = TTVector(cores=[blocks[mu_block(c, d)] for d in range(ndim)])
        mu.append(tt_apply_factors(white, kernel_lowers))
        sigma_chol.append(KroneckerChol(lower_factors=[
            kernel_lowers[d] @ lower_from_unconstrained(blocks[sigma_block(c, d)]) for d in range(ndim)]))
    embedding = model.embedding
    if embedding is not None:
        embedding = LinearEmbedding(projection=blocks[PROJECTION_BLOCK], shift=embedding.shift,
                                    scale=embedding.scale, initialized=embedding.initialized)
    return TTGPModel(grid=model.grid, kernels=kernels, embedding=embedding, num_classes=model.num_classes,
                     mu=mu, sigma_chol=sigma_chol, statistics=model.statistics)


def _check_class(model: TTGPModel, c: int):
    if not 0 <= c < model.num_classes:
        raise InvalidArgumentError(f"Class index {c} out of range [0, {model.num_classes}).")


def latent_moments(model: TTGPModel, c: int, x: np.ndarray) -> tuple[float, float]:
    """
    Mean m = wᵀμ^c and variance s = σ_f² − wᵀK_mm w + wᵀΣ^c w (floored at 0) of q(f^c(x)).
    """
    _check_class(model, c)
    x = _check_inputs(model, np.reshape(x, (1, -1)))
    kernels = [_KernelPrior(params, model.grid) for params in model.kernels]
    sigmas = [chol.to_matrix() for chol in model.sigma_chol]
    moments = _Forward(model, kernels, sigmas, x).moments
    return float(moments.mean[0, c]), float(moments.variance[0, c])


def kl_term(model: TTGPModel, c: int) -> float:
    """
    ½(log|K_mm| − log|Σ| − m + tr(K_mm⁻¹Σ) + μᵀK_mm⁻¹μ) for class c, evaluated in
    whitened coordinates.
    """
    _check_class(model, c)
    kernel = _KernelPrior(model.kernel_for(c), model.grid)
    return _ClassPrior(model.mu[c], model.sigma_chol[c], kernel).value


def elbo_regression(model: TTGPModel, x: np.ndarray, y: np.ndarray, n_total: int) -> float:
    if not model.is_regression:
        raise InvalidArgumentError("elbo_regression requires a regression model.")
    acc, _, _ = _evaluate(model, x, y, n_total, with_grad=False)
    return acc.value


def elbo_classification(model: TTGPModel, x: np.ndarray, y: np.ndarray, n_total: int) -> float:
    if model.is_regression:
        raise InvalidArgumentError("elbo_classification requires a classification model.")
    acc, _, _ = _evaluate(model, x, y, n_total, with_grad=False)
    return acc.value


def elbo(model: TTGPModel, x: np.ndarray, y: np.ndarray, n_total: int) -> float:
    acc, _, _ = _evaluate(model, x, y, n_total, with_grad=False)
    return acc.value


def elbo_grad(model: TTGPModel, x: np.ndarray, y: np.ndarray, n_total: int,
              workers: int = 1) -> tuple[float, ParameterBlocks]:
    """
    Stochastic ELBO of a batch and its gradient with respect to every block of
    `model_parameters(model)`.

    Args:
        model: Current model.
        x: Batch inputs (n, input_dim).
        y: Batch targets; class indices for classification.
        n_total: Training-set size used to rescale the data term.
        workers: Threads sharing the data term; partial sums are reduced in chunk order.

    Returns:
        (ELBO value, gradient blocks)
    """
    acc, kernels, priors = _evaluate(model, x, y, n_total, with_grad=True, workers=workers)
    return acc.value, _to_blocks(model, acc, kernels, priors)


def clamped_fraction(model: TTGPModel, x: np.ndarray) -> float:
    """Share of points with at least one coordinate outside the grid interior."""
    x = _check_inputs(model, x)
    if x.shape[0] == 0:
        return 0.0
    return float(weights_nd(model.grid, _grid_inputs(model, x)).clamped.any(axis=1).mean())


def predict_latent(model: TTGPModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Latent means and floored variances, both (n, C), in standardized units."""
    x = _check_inputs(model, x)
    if x.shape[0] == 0:
        return np.zeros((0, model.num_classes)), np.zeros((0, model.num_classes))
    kernels = [_KernelPrior(params, model.grid) for params in model.kernels]
    sigmas = [chol.to_matrix() for chol in model.sigma_chol]
    means, variances = [], []
    for start in range(0, x.shape[0], PREDICT_CHUNK_SIZE):
        moments = _Forward(model, kernels, sigmas, x[start:start + PREDICT_CHUNK_SIZE]).moments
        means.append(moments.mean)
        variances.append(moments.variance)
    return np.concatenate(means), np.concatenate(variances)


def predict_regression(model: TTGPModel, x: np.ndarray, original_units: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """
    Predictive means and observation variances s + ν², de-standardized when the
    model carries dataset statistics and `original_units` is set.
    """
    if not model.is_regression:
        raise InvalidArgumentError("predict_regression requires a regression model.")
    means, variances = predict_latent(model, x)
    means = means[:, 0]
    variances = variances[:, 0] + model.kernels[0].noise_variance
    if original_units and model.statistics is not None:
        means = means * model.statistics.target_std + model.statistics.target_mean
        variances = variances * model.statistics.target_std ** 2
    return means, variances


def predict_classification(model: TTGPModel, x: np.ndarray,
                           use_variance: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """
    Class labels and softmax scores of the latent means; with `use_variance`
    the scores use m + s/2 instead. Ties go to the lowest class index.
    """
    if model.is_regression:
        raise InvalidArgumentError("predict_classification requires a classification model.")
    means, variances = predict_latent(model, x)
    logits = means + 0.5 * variances if use_variance else means
    scores = softmax(logits, axis=1)
    return np.argmax(scores, axis=1), scores
