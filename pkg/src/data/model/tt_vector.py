from pydantic import BaseModel, ConfigDict, Field, field_validator

from .. import FloatArray
from ...util.error import ShapeMismatchError


# noinspection PyNestedDecorators
class TTVector(BaseModel):
    """
    A D-dimensional tensor in Tensor-Train format.

    Core d is stored as a contiguous float64 array of shape (r_{d-1}, n_d, r_d).
    The represented tensor is indexed in C order, so the flattened vector matches
    Kronecker products written left to right (dimension 1 varies slowest).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    cores: list[FloatArray] = Field(min_length=1, description="TT-cores G_1..G_D.")

    @field_validator("cores", mode="after")
    @classmethod
    def validate_cores(cls, cores: list):
        for d, core in enumerate(cores):
            if core.ndim != 3:
                raise ShapeMismatchError(f"TT-core {d} must have 3 indices, got shape {core.shape}.")
            if core.shape[1] < 1:
                raise ShapeMismatchError(f"TT-core {d} has an empty mode.")
        if cores[0].shape[0] != 1:
            raise ShapeMismatchError(f"The first TT-core must have r_0=1, got {cores[0].shape[0]}.")
        if cores[-1].shape[2] != 1:
            raise ShapeMismatchError(f"The last TT-core must have r_D=1, got {cores[-1].shape[2]}.")
        for d in range(len(cores) - 1):
            if cores[d].shape[2] != cores[d + 1].shape[0]:
                raise ShapeMismatchError(
                    f"TT-core {d} has right rank {cores[d].shape[2]} "
                    f"but TT-core {d + 1} has left rank {cores[d + 1].shape[0]}.")
        return cores

    @property
    def ndim(self) -> int:
        return len(self.cores)

    @property
    def mode_sizes(self) -> tuple[int, ...]:
        return tuple(core.shape[1] for core in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return (1,) + tuple(core.shape[2] for core in self.cores)

    @property
    def num_parameters(self) -> int:
        return sum(core.size for core in self.cores)
