import logging
import math
from collections.abc import Sequence
from functools import reduce

import numpy as np
from scipy import linalg

from ..model.kronecker import KroneckerMatrix, KroneckerChol
from ...util.error import DecompositionError, InvalidArgumentError, ShapeMismatchError, ResourceLimitError
from ...util.function import get_dense_size_cap

logger = logging.getLogger(__name__)


def _factors(matrix: KroneckerMatrix | Sequence[np.ndarray]) -> list[np.ndarray]:
    if isinstance(matrix, KroneckerMatrix):
        return matrix.factors
    return KroneckerMatrix(factors=list(matrix)).factors


def factor_multiplicities(sizes: Sequence[int]) -> np.ndarray:
    """c_d = Π_{j≠d} n_j, how often factor d repeats along the Kronecker diagonal."""
    total = math.prod(sizes)
    return np.array([float(total // n) for n in sizes])


def chol_factorwise(matrix: KroneckerMatrix) -> KroneckerChol:
    """
    Cholesky factor of every Kronecker factor; L_1 ⊗ … ⊗ L_D is then the
    Cholesky factor of the whole product.

    Raises:
        InvalidArgumentError: If a factor is not symmetric.
        DecompositionError: If a factor is not positive-definite, naming that dimension.
    """
    lower_factors = []
    for d, factor in enumerate(matrix.factors):
        tolerance = 1e-10 * max(1.0, float(np.max(np.abs(factor))))
        if not np.allclose(factor, factor.T, rtol=0.0, atol=tolerance):
            raise InvalidArgumentError(f"Kronecker factor {d} is not symmetric.")
        try:
            lower = linalg.cholesky(factor, lower=True)
        except linalg.LinAlgError as e:
            raise DecompositionError(f"Kronecker factor {d} is not positive-definite.", dimension=d) from e
        if not np.all(np.isfinite(lower)) or np.any(np.diag(lower) <= 0.0):
            raise DecompositionError(f"Kronecker factor {d} is not positive-definite.", dimension=d)
        lower_factors.append(lower)
    return KroneckerChol(lower_factors=lower_factors)


def factor_logdets(chol: KroneckerChol) -> np.ndarray:
    return np.array([2.0 * np.sum(np.log(np.diag(lower))) for lower in chol.lower_factors])


def kron_logdet_from_chol(chol: KroneckerChol) -> float:
    return float(np.dot(factor_multiplicities(chol.sizes), factor_logdets(chol)))


def logdet_kron(matrix: KroneckerMatrix) -> float:
    """log det(A_1 ⊗ … ⊗ A_D) = Σ_d (Π_{j≠d} n_j)·log det A_d."""
    return kron_logdet_from_chol(chol_factorwise(matrix))


def trace_product_factors(a: KroneckerMatrix, b: KroneckerMatrix) -> np.ndarray:
    if a.sizes != b.sizes:
        raise ShapeMismatchError(f"Kronecker factor sizes differ: {a.sizes} and {b.sizes}.")
    return np.array([np.sum(fa * fb.T) for fa, fb in zip(a.factors, b.factors)])


def trace_product_kron(a: KroneckerMatrix, b: KroneckerMatrix) -> float:
    """tr((⊗A_d)(⊗B_d)) = Π_d tr(A_d B_d)."""
    return float(np.prod(trace_product_factors(a, b)))


def inv_factors(chol: KroneckerChol) -> KroneckerMatrix:
    """Per-factor inverses A_d⁻¹ = L_d⁻ᵀ L_d⁻¹ through triangular solves."""
    inverses = []
    for lower in chol.lower_factors:
        lower_inv = linalg.solve_triangular(lower, np.eye(lower.shape[0]), lower=True)
        inverse = lower_inv.T @ lower_inv
        inverses.append(0.5 * (inverse + inverse.T))
    return KroneckerMatrix(factors=inverses)


def rank1_quad_form(matrix: KroneckerMatrix, w: Sequence[np.ndarray]) -> float:
    """(⊗w_d)ᵀ(⊗A_d)(⊗w_d) = Π_d w_dᵀ A_d w_d."""
    if len(w) != matrix.ndim:
        raise ShapeMismatchError(f"Expected {matrix.ndim} vectors, got {len(w)}.")
    result = 1.0
    for d, (factor, vector) in enumerate(zip(matrix.factors, w)):
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (factor.shape[0],):
            raise ShapeMismatchError(f"Vector {d} has shape {vector.shape}, expected ({factor.shape[0]},).")
        result *= float(vector @ factor @ vector)
    return result


def kron_to_dense(matrix: KroneckerMatrix | Sequence[np.ndarray], size_cap: int | None = None) -> np.ndarray:
    factors = _factors(matrix)
    cap = get_dense_size_cap() if size_cap is None else size_cap
    side = math.prod(f.shape[0] for f in factors)
    if side * side > cap:
        raise ResourceLimitError(f"Dense Kronecker product would have {side * side} entries, the cap is {cap}.")
    return reduce(np.kron, factors)


def kron_matvec(matrix: KroneckerMatrix | Sequence[np.ndarray], vector: np.ndarray) -> np.ndarray:
    """(⊗A_d)·v by applying each factor along its own axis of v reshaped as a tensor."""
    factors = _factors(matrix)
    sizes = [f.shape[0] for f in factors]
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (math.prod(sizes),):
        raise ShapeMismatchError(f"Vector has shape {vector.shape}, expected ({math.prod(sizes)},).")
    tensor = vector.reshape(sizes)
    for d, factor in enumerate(factors):
        tensor = np.moveaxis(np.tensordot(factor, tensor, axes=([1], [d])), 0, d)
    return tensor.reshape(-1)


# log-Cholesky parameterization of a covariance factor: S = tril(raw, -1) + diag(exp(diag(raw)))

def lower_from_unconstrained(raw: np.ndarray) -> np.ndarray:
    return np.tril(raw, -1) + np.diag(np.exp(np.diag(raw)))


def lower_to_unconstrained(lower: np.ndarray) -> np.ndarray:
    return np.tril(lower, -1) + np.diag(np.log(np.diag(lower)))


def lower_grad_from_covariance_grad(lower: np.ndarray, covariance_grad: np.ndarray) -> np.ndarray:
    """∂f/∂S for f depending on S through S·Sᵀ, given ∂f/∂(S·Sᵀ)."""
    return np.tril((covariance_grad + covariance_grad.T) @ lower)


def covariance_grad_from_chol_grad(lower: np.ndarray, lower_grad: np.ndarray) -> np.ndarray:
    """
    ∂f/∂A for f depending on A through its Cholesky factor L, given ∂f/∂L.

    Uses dL = L·Φ(L⁻¹·dA·L⁻ᵀ), Φ keeping the lower triangle with a halved diagonal;
    the result is symmetric.
    """
    phi = np.tril(lower.T @ np.tril(lower_grad))
    phi[np.diag_indices_from(phi)] *= 0.5
    left = linalg.solve_triangular(lower, phi, lower=True, trans="T")
    grad = linalg.solve_triangular(lower, left.T, lower=True, trans="T").T
    return 0.5 * (grad + grad.T)


def unconstrained_lower_grad(lower: np.ndarray, lower_grad: np.ndarray) -> np.ndarray:
    grad = np.tril(lower_grad, -1)
    grad[np.diag_indices_from(grad)] = np.diag(lower_grad) * np.diag(lower)
    return grad
