"""
Tensor-Train vectors and the two contractions the evidence lower bound needs.

Index order: core d has shape (r_{d-1}, n_d, r_d) and the dense tensor is read in
C order, so flattening it gives the vector that pairs with w^1 ⊗ … ⊗ w^D.
"""
import logging
import math
from collections.abc import Sequence

import numpy as np
from scipy import linalg

from ..model.kronecker import KroneckerMatrix
from ..model.tt_vector import TTVector
from ...util.error import InvalidArgumentError, ShapeMismatchError, ResourceLimitError
from ...util.function import get_dense_size_cap, ensure_finite

logger = logging.getLogger(__name__)


def tt_full_ranks(mode_sizes: Sequence[int]) -> tuple[int, ...]:
    """Maximal TT-ranks r_0..r_D of a tensor with the given mode sizes."""
    ranks = [1]
    for k in range(1, len(mode_sizes)):
        left = math.prod(mode_sizes[:k])
        right = math.prod(mode_sizes[k:])
        ranks.append(min(left, right))
    ranks.append(1)
    return tuple(ranks)


def _rank_bounds(max_ranks: int | Sequence[int] | None, ndim: int) -> list[int | None]:
    if max_ranks is None:
        return [None] * (ndim - 1)
    if isinstance(max_ranks, (int, np.integer)):
        bounds = [int(max_ranks)] * (ndim - 1)
    else:
        bounds = [None if r is None else int(r) for r in max_ranks]
        if len(bounds) != ndim - 1:
            raise ShapeMismatchError(f"Expected {ndim - 1} rank bounds, got {len(bounds)}.")
    if any(r is not None and r < 1 for r in bounds):
        raise InvalidArgumentError(f"Rank bounds must be positive, got {max_ranks}.")
    return bounds


def _truncation_rank(singular_values: np.ndarray, unfolding_shape: tuple[int, int],
                     delta: float, bound: int | None) -> int:
    # singular values at round-off level of the largest one carry no information
    floor = singular_values[0] * max(unfolding_shape) * np.finfo(np.float64).eps
    significant = max(int(np.count_nonzero(singular_values > floor)), 1)
    tails = np.sqrt(np.cumsum(singular_values[::-1] ** 2))[::-1]
    within = np.nonzero(tails <= delta)[0]
    rank = int(within[0]) if within.size > 0 else singular_values.size
    rank = max(min(rank, significant), 1)
    if bound is not None:
        rank = min(rank, bound)
    return rank


def tt_from_dense(tensor: np.ndarray, max_ranks: int | Sequence[int] | None = None, tol: float = 0.0) -> TTVector:
    """
    TT-SVD: sequential truncated SVDs of the unfoldings.

    Args:
        tensor: Dense array with at least one dimension.
        max_ranks: One bound for all of r_1..r_{D-1}, a sequence of D - 1 bounds, or None.
        tol: Relative Frobenius tolerance; each unfolding is truncated at tol·‖T‖_F/√(D−1).

    Returns:
        The TT representation.

    Raises:
        InvalidArgumentError: If the tensor is empty or not finite, or tol is negative.
    """
    tensor = np.asarray(tensor, dtype=np.float64)
    if tensor.ndim == 0 or tensor.size == 0:
        raise InvalidArgumentError("Cannot decompose an empty tensor.")
    ensure_finite(tensor, "Tensor")
    if tol < 0.0:
        raise InvalidArgumentError(f"Truncation tolerance must be non-negative, got {tol}.")

    shape = tensor.shape
    ndim = len(shape)
    bounds = _rank_bounds(max_ranks, ndim)
    norm = float(np.linalg.norm(tensor))
    if norm == 0.0:
        return TTVector(cores=[np.zeros((1, n, 1)) for n in shape])

    delta = tol * norm / math.sqrt(ndim - 1) if ndim > 1 else 0.0
    cores = []
    rank = 1
    remainder = tensor
    for k in range(ndim - 1):
        unfolding = remainder.reshape(rank * shape[k], -1)
        u, s, vt = np.linalg.svd(unfolding, full_matrices=False)
        new_rank = _truncation_rank(s, unfolding.shape, delta, bounds[k])
        cores.append(u[:, :new_rank].reshape(rank, shape[k], new_rank))
        remainder = s[:new_rank, None] * vt[:new_rank]
        rank = new_rank
    cores.append(remainder.reshape(rank, shape[-1], 1))
    logger.debug("TT-SVD of shape %s gave ranks %s", shape, TTVector(cores=cores).ranks)
    return TTVector(cores=cores)


def tt_to_dense(tt: TTVector, size_cap: int | None = None) -> np.ndarray:
    """
    Materialize the tensor entry by entry of the defining core product.

    Raises:
        ResourceLimitError: If the tensor has more entries than the cap.
    """
    cap = get_dense_size_cap() if size_cap is None else size_cap
    total = math.prod(tt.mode_sizes)
    if total > cap:
        raise ResourceLimitError(f"Dense tensor would have {total} entries, the cap is {cap}.")
    first = tt.cores[0]
    result = first.reshape(first.shape[1], first.shape[2])
    for core in tt.cores[1:]:
        r_left, n, r_right = core.shape
        result = (result @ core.reshape(r_left, n * r_right)).reshape(-1, r_right)
    return result.reshape(tt.mode_sizes)


def tt_random(mode_sizes: Sequence[int], rank: int, rng: np.random.Generator, scale: float = 1.0) -> TTVector:
    """Independent N(0, scale²) cores with TT-ranks min(rank, maximal rank)."""
    if rank < 1:
        raise InvalidArgumentError(f"TT-rank must be positive, got {rank}.")
    full = tt_full_ranks(mode_sizes)
    ranks = [min(rank, r) for r in full]
    cores = [rng.normal(0.0, scale, size=(ranks[d], n, ranks[d + 1])) for d, n in enumerate(mode_sizes)]
    return TTVector(cores=cores)


def _check_square_factors(tt: TTVector, factors: Sequence[np.ndarray]) -> list[np.ndarray]:
    if len(factors) != tt.ndim:
        raise ShapeMismatchError(f"Expected {tt.ndim} factors, got {len(factors)}.")
    factors = [np.asarray(f, dtype=np.float64) for f in factors]
    for d, (f, n) in enumerate(zip(factors, tt.mode_sizes)):
        if f.shape != (n, n):
            raise ShapeMismatchError(f"Factor {d} has shape {f.shape}, expected ({n}, {n}).")
    return factors


def tt_apply_factors(tt: TTVector, factors: Sequence[np.ndarray]) -> TTVector:
    """(A_1 ⊗ … ⊗ A_D)·μ with A_d applied to the mode index of core d; TT-ranks are unchanged."""
    factors = _check_square_factors(tt, factors)
    return TTVector(cores=[np.einsum("nk,akb->anb", a, g) for a, g in zip(factors, tt.cores)])


def tt_solve_lower(tt: TTVector, lower_factors: Sequence[np.ndarray]) -> TTVector:
    """(L_1 ⊗ … ⊗ L_D)⁻¹·μ for lower-triangular L_d, one triangular solve per core."""
    lower_factors = _check_square_factors(tt, lower_factors)
    cores = []
    for lower, core in zip(lower_factors, tt.cores):
        r_left, n, r_right = core.shape
        unfolded = np.moveaxis(core, 1, 0).reshape(n, r_left * r_right)
        solved = linalg.solve_triangular(lower, unfolded, lower=True)
        cores.append(np.moveaxis(solved.reshape(n, r_left, r_right), 0, 1))
    return TTVector(cores=cores)


class TTBatchContraction:
    """
    Inner products of a TT vector with n rank-1 Kronecker vectors, w_i = w_i^1 ⊗ … ⊗ w_i^D.

    `weights[d]` is an (n, n_d) matrix, dense or scipy.sparse, whose row i is w_i^d.
    The left/right partial products are kept so values, core gradients and weight
    gradients all come from one sweep.
    """

    def __init__(self, tt: TTVector, weights: Sequence):
        if len(weights) != tt.ndim:
            raise ShapeMismatchError(f"Expected {tt.ndim} weight factors, got {len(weights)}.")
        num_rows = weights[0].shape[0]
        for d, (w, n) in enumerate(zip(weights, tt.mode_sizes)):
            if w.ndim != 2 or w.shape[1] != n or w.shape[0] != num_rows:
                raise ShapeMismatchError(f"Weight factor {d} has shape {w.shape}, expected ({num_rows}, {n}).")
        self._tt = tt
        self._weights = list(weights)
        self._num_rows = num_rows

        self._projected = []
        for core, w in zip(tt.cores, self._weights):
            r_left, n, r_right = core.shape
            flat = core.transpose(1, 0, 2).reshape(n, r_left * r_right)
            self._projected.append(np.asarray(w @ flat).reshape(num_rows, r_left, r_right))

        self._left = [np.ones((num_rows, 1))]
        for p in self._projected:
            self._left.append(np.einsum("bi,bij->bj", self._left[-1], p))
        self._right = [np.ones((num_rows, 1))] * tt.ndim
        for d in range(tt.ndim - 2, -1, -1):
            self._right[d] = np.einsum("bij,bj->bi", self._projected[d + 1], self._right[d + 1])

    @property
    def values(self) -> np.ndarray:
        return self._left[-1][:, 0]

    def _environment(self, d: int) -> np.ndarray:
        left, right = self._left[d], self._right[d]
        return (left[:, :, None] * right[:, None, :]).reshape(self._num_rows, -1)

    def core_grads(self, coefficients: np.ndarray | None = None) -> list[np.ndarray]:
        """∂(Σ_i c_i·⟨μ, w_i⟩)/∂G_d for every core; all c_i = 1 when omitted."""
        coef = np.ones(self._num_rows) if coefficients is None else np.asarray(coefficients, dtype=np.float64)
        grads = []
        for d, (core, w) in enumerate(zip(self._tt.cores, self._weights)):
            r_left, n, r_right = core.shape
            env = coef[:, None] * self._environment(d)
            g = np.asarray(w.T @ env).reshape(n, r_left, r_right)
            grads.append(np.ascontiguousarray(g.transpose(1, 0, 2)))
        return grads

    def weight_grads(self) -> list[np.ndarray]:
        """∂⟨μ, w_i⟩/∂w_i^d as dense (n, n_d) matrices."""
        grads = []
        for d, core in enumerate(self._tt.cores):
            r_left, n, r_right = core.shape
            flat = core.transpose(0, 2, 1).reshape(r_left * r_right, n)
            grads.append(self._environment(d) @ flat)
        return grads


def _check_vectors(tt: TTVector, w: Sequence[np.ndarray]) -> list[np.ndarray]:
    if len(w) != tt.ndim:
        raise ShapeMismatchError(f"Expected {tt.ndim} vectors, got {len(w)}.")
    vectors = [np.asarray(v, dtype=np.float64) for v in w]
    for d, (v, n) in enumerate(zip(vectors, tt.mode_sizes)):
        if v.shape != (n,):
            raise ShapeMismatchError(f"Vector {d} has shape {v.shape}, expected ({n},).")
    return [v[None, :] for v in vectors]


def tt_dot_kron(tt: TTVector, w: Sequence[np.ndarray]) -> float:
    """⟨μ, w^1 ⊗ … ⊗ w^D⟩ by sequential core contraction."""
    return float(TTBatchContraction(tt, _check_vectors(tt, w)).values[0])


def tt_dot_kron_grad(tt: TTVector, w: Sequence[np.ndarray]) -> list[np.ndarray]:
    return TTBatchContraction(tt, _check_vectors(tt, w)).core_grads()


class QuadFormSweep:
    """
    μᵀ(A_1 ⊗ … ⊗ A_D)μ for a TT vector μ, with left partials Φ_d and right partials Ψ_d.

    Costs O(D·n²·r + D·n·r³) and never forms μ or the Kronecker product.
    """

    def __init__(self, tt: TTVector, matrix: KroneckerMatrix):
        if matrix.ndim != tt.ndim:
            raise ShapeMismatchError(f"Expected {tt.ndim} Kronecker factors, got {matrix.ndim}.")
        for d, (a, n) in enumerate(zip(matrix.factors, tt.mode_sizes)):
            if a.shape != (n, n):
                raise ShapeMismatchError(f"Kronecker factor {d} has shape {a.shape}, expected ({n}, {n}).")
        self._tt = tt
        self._factors = matrix.factors
        # A_d applied along the mode index of core d, and its transpose
        self._applied = [np.einsum("nk,akb->anb", a, g) for a, g in zip(self._factors, tt.cores)]
        self._applied_t = [np.einsum("kn,akb->anb", a, g) for a, g in zip(self._factors, tt.cores)]

        ndim = tt.ndim
        self._left = [np.ones((1, 1))]
        for g, y in zip(tt.cores, self._applied):
            self._left.append(np.einsum("ac,anb,cnd->bd", self._left[-1], g, y, optimize=True))
        self._right = [np.ones((1, 1))] * ndim
        for d in range(ndim - 2, -1, -1):
            g, y = tt.cores[d + 1], self._applied[d + 1]
            self._right[d] = np.einsum("anb,cnd,bd->ac", g, y, self._right[d + 1], optimize=True)

    @property
    def value(self) -> float:
        return float(self._left[-1][0, 0])

    def core_grads(self) -> list[np.ndarray]:
        grads = []
        for d in range(self._tt.ndim):
            phi, psi = self._left[d], self._right[d]
            first = np.einsum("xc,cnd,yd->xny", phi, self._applied[d], psi, optimize=True)
            second = np.einsum("ax,anb,by->xny", phi, self._applied_t[d], psi, optimize=True)
            grads.append(first + second)
        return grads


def tt_quad_form_kron(tt: TTVector, matrix: KroneckerMatrix) -> float:
    return QuadFormSweep(tt, matrix).value


def tt_quad_form_kron_grad(tt: TTVector, matrix: KroneckerMatrix) -> list[np.ndarray]:
    return QuadFormSweep(tt, matrix).core_grads()
