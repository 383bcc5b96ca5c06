import os
import tempfile
from pathlib import Path

import numpy as np

from .constant import EnvVar, DEFAULT_DENSE_SIZE_CAP, DEFAULT_JITTER
from .error import InvalidArgumentError, ConfigurationError


def get_dense_size_cap() -> int:
    raw = os.getenv(EnvVar.DENSE_SIZE_CAP.value)
    if raw is None:
        return DEFAULT_DENSE_SIZE_CAP
    return strict_positive_int_parser(raw, EnvVar.DENSE_SIZE_CAP.value)


def get_jitter() -> float:
    raw = os.getenv(EnvVar.JITTER.value)
    if raw is None:
        return DEFAULT_JITTER
    try:
        value = float(raw)
    except ValueError as e:
        raise ConfigurationError(f"Invalid {EnvVar.JITTER.value} value: {raw}") from e
    if value < 0.0:
        raise ConfigurationError(f"{EnvVar.JITTER.value} must be non-negative, got {raw}")
    return value


def strict_positive_int_parser(value: str, name: str) -> int:
    """
    Strict positive integer parser that raises an exception on invalid input.

    Args:
        value: String representation of the integer
        name: Name of the setting, used in the error message

    Returns:
        The parsed integer

    Raises:
        ConfigurationError: If the string is not a positive integer
    """
    try:
        parsed = int(value)
    except ValueError as e:
        raise ConfigurationError(f"Invalid {name} value: {value}") from e
    if parsed <= 0:
        raise ConfigurationError(f"{name} must be positive, got {value}")
    return parsed


def ensure_finite(array: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(array)):
        raise InvalidArgumentError(f"{what} contains non-finite values.")
    return array


def prod_except(values: np.ndarray) -> np.ndarray:
    """
    Product of all entries but one along the last axis, without division.

    Args:
        values: Array of shape (..., D)

    Returns:
        Array of the same shape whose entry d is the product of the other D - 1 entries
    """
    ones = np.ones(values.shape[:-1] + (1,), dtype=values.dtype)
    prefix = np.cumprod(np.concatenate([ones, values[..., :-1]], axis=-1), axis=-1)
    suffix = np.cumprod(np.concatenate([ones, values[..., :0:-1]], axis=-1), axis=-1)[..., ::-1]
    return prefix * suffix


def atomic_write_bytes(path: str | os.PathLike[str], payload: bytes):
    """
    Write a file through a temporary sibling and rename it into place
    :param path: Destination path
    :param payload: File content
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
