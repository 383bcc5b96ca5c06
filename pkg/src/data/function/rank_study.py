"""
How well TT-SVD truncations of increasing rank reproduce a dense tensor.
"""
import logging
import math
import re
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .tt_algebra import tt_from_dense, tt_to_dense, tt_full_ranks
from ...util.constant import DEFAULT_CHARSET
from ...util.error import DataLoadError

logger = logging.getLogger(__name__)

_SHAPE_HEADER = re.compile(r"^\s*shape\s*[:=]?\s*(.+)$", re.IGNORECASE)


def synthetic_smooth_tensor(shape: Sequence[int], rng: np.random.Generator, noise: float = 0.1) -> np.ndarray:
    """Π_d sin(π·i_d/n_d) over 1-based indices, plus N(0, noise²) entries."""
    axes = [np.sin(math.pi * np.arange(1, n + 1) / n) for n in shape]
    tensor = axes[0]
    for axis in axes[1:]:
        tensor = np.multiply.outer(tensor, axis)
    tensor = np.asarray(tensor, dtype=np.float64).reshape(tuple(shape))
    return tensor + noise * rng.standard_normal(tuple(shape))


def load_dense_tensor(path: str | Path) -> np.ndarray:
    """
    Text file whose first non-empty line is "shape: n_1 n_2 … n_D", followed by the
    entries in C order separated by whitespace or commas.
    """
    source = str(path)
    try:
        lines = [line.strip() for line in Path(path).read_text(encoding=DEFAULT_CHARSET).splitlines()]
    except OSError as e:
        raise DataLoadError(f"Cannot read tensor file {source}: {e}", path=source) from e
    content = [(number, line) for number, line in enumerate(lines, start=1) if line]
    if not content:
        raise DataLoadError(f"Tensor file {source} is empty.", path=source)
    number, first = content[0]
    match = _SHAPE_HEADER.match(first)
    if match is None:
        raise DataLoadError(f"Missing shape header in {source}.", path=source, line=number)
    try:
        shape = tuple(int(token) for token in match.group(1).replace(",", " ").split())
    except ValueError as e:
        raise DataLoadError(f"Malformed shape header in {source}.", path=source, line=number) from e
    if not shape or any(n < 1 for n in shape):
        raise DataLoadError(f"Invalid tensor shape {shape} in {source}.", path=source, line=number)

    values = []
    for number, line in content[1:]:
        for token in line.replace(",", " ").split():
            try:
                values.append(float(token))
            except ValueError as e:
                raise DataLoadError(f"Unparseable value {token!r} in {source}.", path=source, line=number) from e
    if len(values) != math.prod(shape):
        raise DataLoadError(f"Tensor file {source} holds {len(values)} values for shape {shape}.", path=source)
    tensor = np.array(values).reshape(shape)
    if not np.all(np.isfinite(tensor)):
        raise DataLoadError(f"Tensor file {source} contains non-finite values.", path=source)
    return tensor


def truncation_sweep(tensor: np.ndarray, r_max: int) -> list[dict[str, float]]:
    """
    Mean squared error and cosine similarity of the rank-r TT-SVD truncation for r = 1..r_max.
    """
    tensor = np.asarray(tensor, dtype=np.float64)
    norm = float(np.linalg.norm(tensor))
    full = tt_full_ranks(tensor.shape)
    rows = []
    for rank in range(1, r_max + 1):
        bounds = [min(rank, r) for r in full[1:-1]]
        approximation = tt_to_dense(tt_from_dense(tensor, max_ranks=bounds if bounds else None))
        mse = float(np.mean((tensor - approximation) ** 2))
        approximation_norm = float(np.linalg.norm(approximation))
        cosine = float(np.vdot(tensor, approximation) / (norm * approximation_norm)) \
            if norm > 0.0 and approximation_norm > 0.0 else 0.0
        rows.append({"r": rank, "mse": mse, "cosine": cosine})
        logger.debug("TT-rank %d: mse %.3e, cosine %.15f", rank, mse, cosine)
    return rows
