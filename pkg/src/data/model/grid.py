import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import sparse

from .. import FloatArray, IntArray
from ...util.constant import STENCIL_SIZE
from ...util.error import InvalidArgumentError, ShapeMismatchError


# noinspection PyNestedDecorators
class Grid(BaseModel):
    """
    Cartesian grid of inducing inputs Z = Z^1 × … × Z^D, uniform per dimension.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    points: list[FloatArray] = Field(min_length=1, description="Sorted uniform node vectors, one per dimension.")

    @field_validator("points", mode="after")
    @classmethod
    def validate_points(cls, points: list):
        for d, nodes in enumerate(points):
            if nodes.ndim != 1:
                raise ShapeMismatchError(f"Grid dimension {d} must be a vector.")
            if nodes.size < STENCIL_SIZE:
                raise InvalidArgumentError(
                    f"Grid dimension {d} has {nodes.size} points, at least {STENCIL_SIZE} are required.")
            steps = np.diff(nodes)
            if np.any(steps <= 0.0):
                raise InvalidArgumentError(f"Grid dimension {d} is not strictly increasing.")
            spacing = (nodes[-1] - nodes[0]) / (nodes.size - 1)
            if np.max(np.abs(steps - spacing)) > 1e-12 * max(abs(spacing), np.max(np.abs(nodes))):
                raise InvalidArgumentError(f"Grid dimension {d} is not uniformly spaced.")
        return points

    @property
    def ndim(self) -> int:
        return len(self.points)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(nodes.size for nodes in self.points)

    @property
    def num_inducing(self) -> int:
        return int(np.prod(self.sizes, dtype=np.float64))

    @property
    def spacings(self) -> np.ndarray:
        return np.array([(nodes[-1] - nodes[0]) / (nodes.size - 1) for nodes in self.points])

    @property
    def lower_bounds(self) -> np.ndarray:
        """Smallest coordinate with a full interior stencil, per dimension."""
        return np.array([nodes[1] for nodes in self.points])

    @property
    def upper_bounds(self) -> np.ndarray:
        """Largest coordinate with a full interior stencil, per dimension."""
        return np.array([nodes[-2] for nodes in self.points])


class InterpWeights(BaseModel):
    """
    Cubic-convolution weights of n points, an implicit rank-1 Kronecker vector per point.

    `starts[i, d]` is the first node of the 4-point stencil of point i in dimension d,
    `values[i, d, k]` the weight of node `starts[i, d] + k`, and `derivatives` the
    derivative of each weight with respect to the point coordinate.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    starts: IntArray
    values: FloatArray
    derivatives: FloatArray
    clamped: np.ndarray = Field(description="Boolean mask (n, D) of coordinates moved onto the grid interior.")
    grid_sizes: tuple[int, ...]

    @model_validator(mode="after")
    def validate_shapes(self):
        n, ndim = self.starts.shape
        if self.values.shape != (n, ndim, STENCIL_SIZE) or self.derivatives.shape != self.values.shape:
            raise ShapeMismatchError("Interpolation weight arrays disagree in shape.")
        if len(self.grid_sizes) != ndim:
            raise ShapeMismatchError("Interpolation weights and grid disagree in dimensionality.")
        for d, size in enumerate(self.grid_sizes):
            if np.any(self.starts[:, d] < 0) or np.any(self.starts[:, d] > size - STENCIL_SIZE):
                raise InvalidArgumentError(f"Stencil start out of range in dimension {d}.")
        return self

    @property
    def num_points(self) -> int:
        return self.starts.shape[0]

    @property
    def ndim(self) -> int:
        return self.starts.shape[1]

    def _csr(self, dim: int, data: np.ndarray) -> sparse.csr_matrix:
        n = self.num_points
        rows = np.repeat(np.arange(n), STENCIL_SIZE)
        cols = (self.starts[:, dim, None] + np.arange(STENCIL_SIZE)).ravel()
        return sparse.csr_matrix((data.ravel(), (rows, cols)), shape=(n, self.grid_sizes[dim]))

    def factor_matrix(self, dim: int) -> sparse.csr_matrix:
        """Sparse n×m_d matrix whose row i is w_i^d."""
        return self._csr(dim, self.values[:, dim, :])

    def derivative_matrix(self, dim: int) -> sparse.csr_matrix:
        """Sparse n×m_d matrix whose row i is ∂w_i^d/∂x_d."""
        return self._csr(dim, self.derivatives[:, dim, :])

    def dense_factors(self, index: int = 0) -> list[np.ndarray]:
        """The D dense vectors w_i^1..w_i^D of point `index`."""
        return [self.factor_matrix(d)[index].toarray().ravel() for d in range(self.ndim)]
