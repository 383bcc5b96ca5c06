from pydantic import BaseModel, ConfigDict, Field, model_validator

from .dataset import DatasetStatistics
from .grid import Grid
from .kernel import RBFParams, LinearEmbedding
from .kronecker import KroneckerChol
from .tt_vector import TTVector
from ...util.error import InvalidArgumentError, ShapeMismatchError


class TTGPModel(BaseModel):
    """
    TT-GP model: inducing grid, kernel, optional linear embedding and the
    per-class variational parameters q(u^c) = N(μ^c, Σ^c).

    `kernels` holds one RBFParams shared by all classes, or one per class.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid
    kernels: list[RBFParams] = Field(min_length=1)
    embedding: LinearEmbedding | None = Field(default=None)
    num_classes: int = Field(ge=1, description="1 for regression, C >= 2 for classification.")
    mu: list[TTVector] = Field(min_length=1)
    sigma_chol: list[KroneckerChol] = Field(min_length=1)
    statistics: DatasetStatistics | None = Field(default=None)

    @model_validator(mode="after")
    def validate_consistency(self):
        if len(self.mu) != self.num_classes or len(self.sigma_chol) != self.num_classes:
            raise ShapeMismatchError(f"Expected {self.num_classes} variational parameter sets.")
        if len(self.kernels) not in (1, self.num_classes):
            raise ShapeMismatchError("Kernels must be shared or given per class.")
        grid_sizes = self.grid.sizes
        for c in range(self.num_classes):
            if self.mu[c].mode_sizes != grid_sizes:
                raise ShapeMismatchError(f"μ of class {c} has mode sizes {self.mu[c].mode_sizes}, grid {grid_sizes}.")
            if self.sigma_chol[c].sizes != grid_sizes:
                raise ShapeMismatchError(f"Σ of class {c} has factor sizes {self.sigma_chol[c].sizes}.")
        for kernel in self.kernels:
            if kernel.ndim != self.grid.ndim:
                raise ShapeMismatchError("Kernel and grid disagree in dimensionality.")
            if self.is_regression and kernel.log_noise_variance is None:
                raise InvalidArgumentError("Regression models require a noise variance.")
            if not self.is_regression and kernel.log_noise_variance is not None:
                raise InvalidArgumentError("Classification models carry no noise variance.")
        if self.num_classes == 1 and len(self.kernels) != 1:
            raise ShapeMismatchError("Regression models have exactly one kernel.")
        if self.embedding is not None and self.embedding.output_dim != self.grid.ndim:
            raise ShapeMismatchError("Embedding output dimension must match the grid dimensionality.")
        return self

    @property
    def is_regression(self) -> bool:
        return self.num_classes == 1

    @property
    def input_dim(self) -> int:
        return self.embedding.input_dim if self.embedding is not None else self.grid.ndim

    @property
    def shared_kernel(self) -> bool:
        return len(self.kernels) == 1

    def kernel_index(self, c: int) -> int:
        return 0 if self.shared_kernel else c

    def kernel_for(self, c: int) -> RBFParams:
        return self.kernels[self.kernel_index(c)]

    @property
    def tt_ranks(self) -> tuple[int, ...]:
        return tuple(max(tt.ranks[d] for tt in self.mu) for d in range(self.grid.ndim + 1))
