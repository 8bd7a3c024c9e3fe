"""
Model checkpoint files.

Layout (all integers and floats little-endian):

    4 bytes   magic b"XQZM"
    uint32    format version (1)
    uint32    L, number of layer sizes
    L uint32  [input, hidden..., policy, value_hidden]
    uint64    initialization seed
    float64   every parameter array in declaration order, row-major, weights shaped (fan_in, fan_out):
              backbone.{i}.weight, backbone.{i}.bias, ..., policy.weight, policy.bias,
              value.hidden.weight, value.hidden.bias, value.out.weight, value.out.bias
"""

import struct

import numpy as np
from loguru import logger

from xiangqi_zero.core.errors import CheckpointFormatError
from xiangqi_zero.core.network import ModelParams, parameter_shapes
from xiangqi_zero.database.files import PathLike, write_bytes
from xiangqi_zero.models.schemas import NetworkConfig

MAGIC = b"XQZM"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sII")
_SEED = struct.Struct("<Q")
_FLOAT = np.dtype("<f8")


def checkpoint_bytes(params: ModelParams) -> bytes:
    sizes = params.config.layer_sizes
    header = _PREFIX.pack(MAGIC, FORMAT_VERSION, len(sizes))
    header += struct.pack(f"<{len(sizes)}I", *sizes)
    header += _SEED.pack(params.config.seed)
    body = b"".join(np.ascontiguousarray(array, dtype=_FLOAT).tobytes() for _, array in params.items())
    return header + body


def params_from_bytes(data: bytes) -> ModelParams:
    """
    Decode checkpoint bytes.

    Raises:
        CheckpointFormatError: Bad magic, unknown version, inconsistent sizes or wrong length.
    """
    if len(data) < _PREFIX.size:
        raise CheckpointFormatError(f"Checkpoint too short for a header ({len(data)} bytes)")
    magic, version, count = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"Bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"Unsupported checkpoint version {version}")
    offset = _PREFIX.size
    if len(data) < offset + 4 * count + _SEED.size:
        raise CheckpointFormatError("Checkpoint truncated inside the header")
    sizes = list(struct.unpack_from(f"<{count}I", data, offset))
    offset += 4 * count
    (seed,) = _SEED.unpack_from(data, offset)
    offset += _SEED.size
    try:
        config = NetworkConfig.from_layer_sizes(sizes, seed=seed)
    except ValueError as exc:
        raise CheckpointFormatError(f"Invalid layer sizes {sizes}: {exc}") from exc

    shapes = parameter_shapes(config)
    expected = offset + _FLOAT.itemsize * sum(int(np.prod(shape)) for shape in shapes.values())
    if len(data) != expected:
        raise CheckpointFormatError(f"Checkpoint has {len(data)} bytes, layer sizes imply {expected}")
    arrays: dict[str, np.ndarray] = {}
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        arrays[name] = np.frombuffer(data, dtype=_FLOAT, count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += count * _FLOAT.itemsize
    return ModelParams(config, arrays)


def save_checkpoint(params: ModelParams, path: PathLike) -> None:
    write_bytes(path, checkpoint_bytes(params))
    logger.info(f"Saved checkpoint to {path} (layers {params.config.layer_sizes})")


def load_checkpoint(path: PathLike) -> ModelParams:
    with open(path, "rb") as handle:
        data = handle.read()
    params = params_from_bytes(data)
    logger.info(f"Loaded checkpoint {path} (layers {params.config.layer_sizes})")
    return params
