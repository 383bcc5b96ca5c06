"""
Single-file checkpoint of a TT-GP model and its optimizer state.

Layout (little-endian):
    magic "TTGPCKPT" | u32 version | u64 body length |
    body: u32 header length | header JSON |
          (u32 name length | name | u64 value count | float64 values)* |
    u32 CRC-32 of the body

The checksum is verified before the body is parsed.
"""
import json
import logging
import struct
import zlib
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from ..model.dataset import DatasetStatistics
from ..model.gp import TTGPModel
from ..model.grid import Grid
from ..model.kernel import RBFParams, LinearEmbedding
from ..model.kronecker import KroneckerChol
from ..model.training import AdamState
from ..model.tt_vector import TTVector
from ...util import ParameterBlocks
from ...util.constant import CHECKPOINT_MAGIC, CHECKPOINT_VERSION, MANIFEST_SUFFIX, TaskKind, DEFAULT_CHARSET
from ...util.error import (CheckpointError, CheckpointVersionError, CheckpointTruncatedError, CheckpointChecksumError,
                          InvalidArgumentError)
from ...util.function import atomic_write_bytes

logger = logging.getLogger(__name__)

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_PREFIX_SIZE = len(CHECKPOINT_MAGIC) + _U32.size + _U64.size


class BlockInfo(BaseModel):
    name: str
    shape: list[int]


class CheckpointHeader(BaseModel):
    ndim: int = Field(ge=1)
    grid_sizes: list[int]
    num_classes: int = Field(ge=1)
    tt_ranks: list[list[int]] = Field(description="TT-ranks r_0..r_D of every class mean.")
    num_kernels: int = Field(ge=1)
    tied: bool
    embedding_shape: list[int] | None = None
    embedding_initialized: bool = False
    task: TaskKind | None = None
    label_values: list[str] = Field(default_factory=list)
    adam_step: int = Field(ge=0)
    blocks: list[BlockInfo]


def _model_blocks(model: TTGPModel) -> dict[str, np.ndarray]:
    blocks = {f"grid/{d}": nodes for d, nodes in enumerate(model.grid.points)}
    for c in range(model.num_classes):
        for d, core in enumerate(model.mu[c].cores):
            blocks[f"mu/{c}/{d}"] = core
        for d, lower in enumerate(model.sigma_chol[c].lower_factors):
            blocks[f"sigma_chol/{c}/{d}"] = lower
    for k, params in enumerate(model.kernels):
        blocks[f"kernel/{k}/log_lengthscales"] = params.log_lengthscales
        blocks[f"kernel/{k}/log_variance"] = np.array([params.log_variance])
        if params.log_noise_variance is not None:
            blocks[f"kernel/{k}/log_noise_variance"] = np.array([params.log_noise_variance])
    if model.embedding is not None:
        blocks["embedding/projection"] = model.embedding.projection
        blocks["embedding/shift"] = model.embedding.shift
        blocks["embedding/scale"] = model.embedding.scale
    if model.statistics is not None:
        blocks["statistics/feature_means"] = model.statistics.feature_means
        blocks["statistics/feature_stds"] = model.statistics.feature_stds
        blocks["statistics/target"] = np.array([model.statistics.target_mean, model.statistics.target_std])
    return blocks


def _encode_block(name: str, values: np.ndarray) -> bytes:
    encoded_name = name.encode(DEFAULT_CHARSET)
    flat = np.ascontiguousarray(values, dtype="<f8").ravel()
    return _U32.pack(len(encoded_name)) + encoded_name + _U64.pack(flat.size) + flat.tobytes()


def save_checkpoint(model: TTGPModel, state: AdamState, path: str | Path):
    """Writes the checkpoint atomically through a temporary sibling file."""
    blocks = _model_blocks(model)
    for name in sorted(state.first_moments):
        blocks[f"adam/m/{name}"] = state.first_moments[name]
        blocks[f"adam/v/{name}"] = state.second_moments[name]

    header = CheckpointHeader(
        ndim=model.grid.ndim,
        grid_sizes=list(model.grid.sizes),
        num_classes=model.num_classes,
        tt_ranks=[list(tt.ranks) for tt in model.mu],
        num_kernels=len(model.kernels),
        tied=model.kernels[0].tied,
        embedding_shape=list(model.embedding.projection.shape) if model.embedding is not None else None,
        embedding_initialized=model.embedding.initialized if model.embedding is not None else False,
        task=model.statistics.task if model.statistics is not None else None,
        label_values=model.statistics.label_values if model.statistics is not None else [],
        adam_step=state.step,
        blocks=[BlockInfo(name=name, shape=list(np.shape(values))) for name, values in blocks.items()],
    )
    header_bytes = header.model_dump_json().encode(DEFAULT_CHARSET)
    body = b"".join([_U32.pack(len(header_bytes)), header_bytes]
                    + [_encode_block(name, values) for name, values in blocks.items()])
    payload = (CHECKPOINT_MAGIC + _U32.pack(CHECKPOINT_VERSION) + _U64.pack(len(body)) + body
               + _U32.pack(zlib.crc32(body)))
    atomic_write_bytes(path, payload)
    logger.info("Saved checkpoint %s (%d bytes, %d blocks).", path, len(payload), len(blocks))


def _read_blocks(buffer: bytes, offset: int, header: CheckpointHeader, end: int) -> tuple[dict[str, np.ndarray], int]:
    blocks = {}
    for info in header.blocks:
        if offset + _U32.size > end:
            raise CheckpointError(f"Checkpoint body ends inside block {info.name}.")
        (name_length,) = _U32.unpack_from(buffer, offset)
        offset += _U32.size
        if offset + name_length + _U64.size > end:
            raise CheckpointError(f"Checkpoint body ends inside block {info.name}.")
        name = buffer[offset:offset + name_length].decode(DEFAULT_CHARSET, errors="replace")
        offset += name_length
        (count,) = _U64.unpack_from(buffer, offset)
        offset += _U64.size
        if offset + 8 * count > end:
            raise CheckpointError(f"Checkpoint body ends inside block {info.name}.")
        blocks[name] = np.frombuffer(buffer, dtype="<f8", count=count, offset=offset).astype(np.float64)
        offset += 8 * count
    return blocks, offset


def _parse_layout(buffer: bytes) -> tuple[CheckpointHeader, dict[str, np.ndarray]]:
    if len(buffer) < _PREFIX_SIZE:
        raise CheckpointTruncatedError("Checkpoint is shorter than its fixed prefix.")
    if buffer[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError("Not a TT-GP checkpoint.")
    (version,) = _U32.unpack_from(buffer, len(CHECKPOINT_MAGIC))
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(f"Checkpoint format version {version}, expected {CHECKPOINT_VERSION}.")
    (body_length,) = _U64.unpack_from(buffer, len(CHECKPOINT_MAGIC) + _U32.size)
    end = _PREFIX_SIZE + body_length
    if len(buffer) < end + _U32.size:
        raise CheckpointTruncatedError(f"Checkpoint holds {len(buffer)} bytes, its prefix announces "
                                       f"{end + _U32.size}.")
    if len(buffer) > end + _U32.size:
        raise CheckpointError(f"Checkpoint has {len(buffer) - end - _U32.size} unexpected trailing bytes.")
    (stored,) = _U32.unpack_from(buffer, end)
    if zlib.crc32(buffer[_PREFIX_SIZE:end]) != stored:
        raise CheckpointChecksumError("Checkpoint checksum mismatch.")

    # checksum verified; structural problems below are writer errors
    offset = _PREFIX_SIZE
    if offset + _U32.size > end:
        raise CheckpointError("Checkpoint body ends before its header.")
    (header_length,) = _U32.unpack_from(buffer, offset)
    offset += _U32.size
    if offset + header_length > end:
        raise CheckpointError("Checkpoint body ends inside its header.")
    try:
        header = CheckpointHeader.model_validate_json(buffer[offset:offset + header_length])
    except ValidationError as e:
        raise CheckpointError(f"Invalid checkpoint header: {e}") from e
    offset += header_length

    blocks, offset = _read_blocks(buffer, offset, header, end)
    if offset != end:
        raise CheckpointError(f"Checkpoint body has {end - offset} bytes after its last block.")
    return header, blocks


def _block(blocks: dict[str, np.ndarray], shapes: dict[str, list[int]], name: str) -> np.ndarray:
    if name not in blocks or name not in shapes:
        raise CheckpointError(f"Checkpoint lacks block {name}.")
    values = blocks[name]
    if values.size != int(np.prod(shapes[name], dtype=np.int64)):
        raise CheckpointError(f"Block {name} has {values.size} values for shape {shapes[name]}.")
    return values.reshape(shapes[name])


def load_checkpoint(path: str | Path) -> tuple[TTGPModel, AdamState]:
    """
    Reads a checkpoint written by `save_checkpoint`.

    Raises:
        CheckpointError: If the file is missing or not a valid checkpoint.
        CheckpointVersionError: If the format version differs.
        CheckpointTruncatedError: If the file ends early.
        CheckpointChecksumError: If the stored checksum does not match.
    """
    try:
        buffer = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e
    header, blocks = _parse_layout(buffer)
    shapes = {info.name: info.shape for info in header.blocks}

    try:
        grid = Grid(points=[_block(blocks, shapes, f"grid/{d}") for d in range(header.ndim)])
        mu = [TTVector(cores=[_block(blocks, shapes, f"mu/{c}/{d}") for d in range(header.ndim)])
              for c in range(header.num_classes)]
        sigma_chol = [KroneckerChol(lower_factors=[_block(blocks, shapes, f"sigma_chol/{c}/{d}")
                                                   for d in range(header.ndim)])
                      for c in range(header.num_classes)]
        kernels = []
        for k in range(header.num_kernels):
            noise_name = f"kernel/{k}/log_noise_variance"
            kernels.append(RBFParams(
                log_lengthscales=_block(blocks, shapes, f"kernel/{k}/log_lengthscales"),
                log_variance=float(_block(blocks, shapes, f"kernel/{k}/log_variance")[0]),
                log_noise_variance=float(_block(blocks, shapes, noise_name)[0]) if noise_name in shapes else None,
                tied=header.tied,
            ))
        embedding = None
        if header.embedding_shape is not None:
            embedding = LinearEmbedding(
                projection=_block(blocks, shapes, "embedding/projection"),
                shift=_block(blocks, shapes, "embedding/shift"),
                scale=_block(blocks, shapes, "embedding/scale"),
                initialized=header.embedding_initialized,
            )
        statistics = None
        if header.task is not None:
            target_mean, target_std = _block(blocks, shapes, "statistics/target")
            statistics = DatasetStatistics(
                task=header.task,
                feature_means=_block(blocks, shapes, "statistics/feature_means"),
                feature_stds=_block(blocks, shapes, "statistics/feature_stds"),
                target_mean=float(target_mean),
                target_std=float(target_std),
                label_values=header.label_values,
            )
        model = TTGPModel(grid=grid, kernels=kernels, embedding=embedding, num_classes=header.num_classes,
                          mu=mu, sigma_chol=sigma_chol, statistics=statistics)
    except (ValidationError, InvalidArgumentError) as e:
        raise CheckpointError(f"Checkpoint content is inconsistent: {e}") from e

    first: ParameterBlocks = {}
    second: ParameterBlocks = {}
    for name in shapes:
        if name.startswith("adam/m/"):
            key = name.removeprefix("adam/m/")
            first[key] = _block(blocks, shapes, name)
            second[key] = _block(blocks, shapes, f"adam/v/{key}")
    state = AdamState(first_moments=first, second_moments=second, step=header.adam_step)
    logger.info("Loaded checkpoint %s: grid %s, TT-ranks %s.", path, grid.sizes, model.tt_ranks)
    return model, state


def write_manifest(checkpoint_path: str | Path, settings: dict[str, Any]):
    """Resolved run settings next to the checkpoint, as `<checkpoint>.manifest.json`."""
    manifest_path = Path(f"{checkpoint_path}{MANIFEST_SUFFIX}")
    atomic_write_bytes(manifest_path, json.dumps(settings, indent=2, sort_keys=True).encode(DEFAULT_CHARSET))
    logger.info("Wrote run manifest %s.", manifest_path)
