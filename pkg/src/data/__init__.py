from typing import Annotated, Any

import numpy as np
from pydantic import BeforeValidator


def as_float_array(value: Any) -> np.ndarray:
    return np.ascontiguousarray(value, dtype=np.float64)


def as_int_array(value: Any) -> np.ndarray:
    return np.ascontiguousarray(value, dtype=np.int64)


FloatArray = Annotated[np.ndarray, BeforeValidator(as_float_array)]
IntArray = Annotated[np.ndarray, BeforeValidator(as_int_array)]
