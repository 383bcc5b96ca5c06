import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .. import FloatArray
from ...util.error import ShapeMismatchError, InvalidArgumentError


# noinspection PyNestedDecorators
class KroneckerMatrix(BaseModel):
    """
    A square matrix A_1 ⊗ A_2 ⊗ … ⊗ A_D kept as its list of factors.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    factors: list[FloatArray] = Field(min_length=1)

    @field_validator("factors", mode="after")
    @classmethod
    def validate_factors(cls, factors: list):
        for d, factor in enumerate(factors):
            if factor.ndim != 2 or factor.shape[0] != factor.shape[1]:
                raise ShapeMismatchError(f"Kronecker factor {d} must be square, got shape {factor.shape}.")
        return factors

    @property
    def ndim(self) -> int:
        return len(self.factors)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def side(self) -> int:
        return int(np.prod(self.sizes))


# noinspection PyNestedDecorators
class KroneckerChol(BaseModel):
    """
    Per-factor lower Cholesky factors L_d with L_d L_dᵀ = A_d.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lower_factors: list[FloatArray] = Field(min_length=1)

    @field_validator("lower_factors", mode="after")
    @classmethod
    def validate_lower_factors(cls, factors: list):
        for d, factor in enumerate(factors):
            if factor.ndim != 2 or factor.shape[0] != factor.shape[1]:
                raise ShapeMismatchError(f"Cholesky factor {d} must be square, got shape {factor.shape}.")
            if np.any(np.triu(factor, k=1) != 0.0):
                raise InvalidArgumentError(f"Cholesky factor {d} is not lower-triangular.")
            if np.any(np.diag(factor) <= 0.0):
                raise InvalidArgumentError(f"Cholesky factor {d} must have a strictly positive diagonal.")
        return factors

    @property
    def ndim(self) -> int:
        return len(self.lower_factors)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.lower_factors)

    def to_matrix(self) -> KroneckerMatrix:
        return KroneckerMatrix(factors=[lower @ lower.T for lower in self.lower_factors])
