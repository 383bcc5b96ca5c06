import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .. import FloatArray
from ...util.constant import MAX_EMBEDDING_DIM
from ...util.error import InvalidArgumentError, ShapeMismatchError


# noinspection PyNestedDecorators
class RBFParams(BaseModel):
    """
    Hyperparameters of the dimension-factorized RBF kernel, stored as logs.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    log_lengthscales: FloatArray = Field(description="log l_d per input dimension.")
    log_variance: float = Field(description="log σ_f².")
    log_noise_variance: float | None = Field(default=None, description="log ν², regression only.")
    tied: bool = Field(default=False, description="Whether all dimensions share one lengthscale.")

    @field_validator("log_lengthscales", mode="after")
    @classmethod
    def validate_log_lengthscales(cls, value: np.ndarray):
        if value.ndim != 1 or value.size == 0:
            raise ShapeMismatchError(f"log_lengthscales must be a non-empty vector, got shape {value.shape}.")
        if not np.all(np.isfinite(value)):
            raise InvalidArgumentError("log_lengthscales must be finite.")
        return value

    @model_validator(mode="after")
    def validate_tied(self):
        if self.tied and np.ptp(self.log_lengthscales) > 0.0:
            raise InvalidArgumentError("Tied lengthscales must all be equal.")
        return self

    @classmethod
    def create(cls, lengthscales, variance: float, noise_variance: float | None = None, tied: bool = False):
        lengthscales = np.asarray(lengthscales, dtype=np.float64)
        if np.any(lengthscales <= 0.0) or variance <= 0.0:
            raise InvalidArgumentError("Lengthscales and variance must be strictly positive.")
        if noise_variance is not None and noise_variance <= 0.0:
            raise InvalidArgumentError("Noise variance must be strictly positive.")
        return cls(
            log_lengthscales=np.log(lengthscales),
            log_variance=math.log(variance),
            log_noise_variance=None if noise_variance is None else math.log(noise_variance),
            tied=tied,
        )

    @property
    def ndim(self) -> int:
        return self.log_lengthscales.size

    @property
    def lengthscales(self) -> np.ndarray:
        return np.exp(self.log_lengthscales)

    @property
    def variance(self) -> float:
        return math.exp(self.log_variance)

    @property
    def noise_variance(self) -> float | None:
        return None if self.log_noise_variance is None else math.exp(self.log_noise_variance)


# noinspection PyNestedDecorators
class LinearEmbedding(BaseModel):
    """
    Learned projection x -> P·x followed by a fixed affine renormalization.

    `shift` and `scale` are running statistics of the projected outputs, refreshed
    by the training loop; they are not trained by gradient ascent.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    projection: FloatArray = Field(description="d×D projection matrix P.")
    shift: FloatArray = Field(description="Running mean of P·x, one entry per output dimension.")
    scale: FloatArray = Field(description="Running spread of P·x, one entry per output dimension.")
    initialized: bool = Field(default=False, description="Whether the running statistics saw a batch.")

    @model_validator(mode="after")
    def validate_shapes(self):
        if self.projection.ndim != 2:
            raise ShapeMismatchError(f"projection must be a matrix, got shape {self.projection.shape}.")
        output_dim, input_dim = self.projection.shape
        if output_dim > input_dim:
            raise InvalidArgumentError(f"Embedding dimension {output_dim} exceeds input dimension {input_dim}.")
        if output_dim > MAX_EMBEDDING_DIM:
            raise InvalidArgumentError(f"Embedding dimension {output_dim} exceeds {MAX_EMBEDDING_DIM}.")
        if self.shift.shape != (output_dim,) or self.scale.shape != (output_dim,):
            raise ShapeMismatchError("shift and scale must have one entry per embedding dimension.")
        if np.any(self.scale <= 0.0):
            raise InvalidArgumentError("Embedding scale must be strictly positive.")
        return self

    @property
    def output_dim(self) -> int:
        return self.projection.shape[0]

    @property
    def input_dim(self) -> int:
        return self.projection.shape[1]
