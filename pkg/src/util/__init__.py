from typing_extensions import TypedDict

import numpy as np

ParameterBlocks = dict[str, np.ndarray]


class EpochSummary(TypedDict):
    """
    A dictionary representing one row of the training metric history.
    """
    epoch: int
    elbo: float
    metric: float
    seconds: float
