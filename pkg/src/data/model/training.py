from pydantic import BaseModel, ConfigDict, Field

from .gp import TTGPModel
from ...util import ParameterBlocks, EpochSummary


class AdamState(BaseModel):
    """
    First/second moment accumulators keyed like the parameter blocks.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    first_moments: ParameterBlocks = Field(default_factory=dict)
    second_moments: ParameterBlocks = Field(default_factory=dict)
    step: int = Field(default=0, ge=0)


class TrainResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    model: TTGPModel
    state: AdamState
    history: list[EpochSummary] = Field(default_factory=list)
    best_metric: float | None = Field(default=None)
