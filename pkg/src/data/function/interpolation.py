"""
Cubic convolution (Keys, a = −1/2) interpolation weights on a uniform grid.
"""
import logging
from collections.abc import Sequence

import numpy as np

from ..model.grid import Grid, InterpWeights
from ...util.constant import STENCIL_SIZE
from ...util.error import InvalidArgumentError, ShapeMismatchError

logger = logging.getLogger(__name__)

_OFFSETS = np.arange(STENCIL_SIZE)


def keys_kernel(s: np.ndarray | float) -> np.ndarray:
    """
    u(s) = 1.5|s|³ − 2.5|s|² + 1 on |s| ≤ 1,
           −0.5|s|³ + 2.5|s|² − 4|s| + 2 on 1 < |s| ≤ 2,
           0 otherwise.
    """
    t = np.abs(np.asarray(s, dtype=np.float64))
    inner = (1.5 * t - 2.5) * t * t + 1.0
    outer = ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0
    return np.where(t <= 1.0, inner, np.where(t <= 2.0, outer, 0.0))


def keys_kernel_derivative(s: np.ndarray | float) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    t = np.abs(s)
    inner = (4.5 * t - 5.0) * t
    outer = (-1.5 * t + 5.0) * t - 4.0
    return np.sign(s) * np.where(t <= 1.0, inner, np.where(t <= 2.0, outer, 0.0))


def _check_nodes(nodes: np.ndarray) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=np.float64)
    if nodes.ndim != 1 or nodes.size < STENCIL_SIZE:
        raise InvalidArgumentError(f"A grid dimension needs at least {STENCIL_SIZE} points, got {nodes.size}.")
    return nodes


def _stencils(nodes: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    size = nodes.size
    spacing = (nodes[-1] - nodes[0]) / (size - 1)
    lower, upper = nodes[1], nodes[-2]
    slack = 1e-9 * spacing
    clamped = (x < lower - slack) | (x > upper + slack)
    coordinate = (np.clip(x, lower, upper) - nodes[0]) / spacing
    # snap coordinates within rounding distance of a node onto it
    nearest = np.round(coordinate)
    coordinate = np.where(np.abs(coordinate - nearest) < 1e-12 * size, nearest, coordinate)
    cell = np.clip(np.floor(coordinate).astype(np.int64), 1, size - 3)
    starts = cell - 1
    local = coordinate - starts
    offsets = local[..., None] - _OFFSETS
    values = keys_kernel(offsets)
    derivatives = keys_kernel_derivative(offsets) / spacing
    derivatives[clamped] = 0.0
    return starts, values, derivatives, clamped


def weights_1d(grid_dim: np.ndarray, x: float) -> tuple[int, np.ndarray]:
    """
    Start index and the 4 stencil weights of one coordinate.

    Coordinates outside [z_1, z_{m−2}] are moved to the nearest bound first.
    """
    nodes = _check_nodes(grid_dim)
    starts, values, _, clamped = _stencils(nodes, np.array([float(x)]))
    if clamped[0]:
        logger.warning("Coordinate %s lies outside the grid interior and was clamped.", x)
    return int(starts[0]), values[0]


def weights_nd(grid: Grid, x: np.ndarray) -> InterpWeights:
    """Per-dimension stencils of one point (D,) or a batch (n, D)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.ndim != 2 or x.shape[1] != grid.ndim:
        raise ShapeMismatchError(f"Expected points with {grid.ndim} coordinates, got shape {x.shape}.")
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("Interpolation points must be finite.")
    parts = [_stencils(nodes, x[:, d]) for d, nodes in enumerate(grid.points)]
    clamped = np.stack([p[3] for p in parts], axis=1)
    if clamped.any():
        logger.warning("%d of %d points lie outside the grid interior and were clamped.",
                       int(clamped.any(axis=1).sum()), x.shape[0])
    return InterpWeights(
        starts=np.stack([p[0] for p in parts], axis=1),
        values=np.stack([p[1] for p in parts], axis=1),
        derivatives=np.stack([p[2] for p in parts], axis=1),
        clamped=clamped,
        grid_sizes=grid.sizes,
    )


def grid_build(data_ranges: Sequence[tuple[float, float]], m0: int | Sequence[int]) -> Grid:
    """
    Uniform grid per dimension with one extra cell beyond each end of the data range,
    so every in-range point has a full interior stencil.

    Args:
        data_ranges: (lo, hi) per dimension.
        m0: Points per dimension, one value for all or one per dimension.
    """
    ranges = list(data_ranges)
    sizes = [int(m0)] * len(ranges) if isinstance(m0, (int, np.integer)) else [int(m) for m in m0]
    if len(sizes) != len(ranges):
        raise ShapeMismatchError(f"Got {len(ranges)} ranges but {len(sizes)} grid sizes.")
    if not ranges:
        raise InvalidArgumentError("At least one dimension is required.")
    points = []
    for d, ((lo, hi), size) in enumerate(zip(ranges, sizes)):
        if size < STENCIL_SIZE:
            raise InvalidArgumentError(f"Grid size {size} in dimension {d} is below {STENCIL_SIZE}.")
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
            raise InvalidArgumentError(f"Invalid data range ({lo}, {hi}) in dimension {d}.")
        spacing = (hi - lo) / (size - 3)
        points.append(np.linspace(lo - spacing, hi + spacing, size))
    return Grid(points=points)
