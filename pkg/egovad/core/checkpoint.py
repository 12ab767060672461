"""
Versioned checkpoint container.

Layout: "FTBC" magic, u32 LE version, u32 LE header length, UTF-8 JSON
header, then every parameter tensor as float32 LE in state_dict order. The
header lists each tensor's name, shape, element offset and count.
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np
import torch

from egovad.core.errors import CheckpointError, ConfigError
from egovad.core.temporal_model import build_detector
from egovad.schemas.config import ModelConfig

logger = logging.getLogger(__name__)

MAGIC = b"FTBC"
VERSION = 1
PREFIX = struct.Struct("<4sII")
PAYLOAD_DTYPE = np.dtype("<f4")


def save_checkpoint(
    model: torch.nn.Module,
    path: Union[str, Path],
    detector: str = "rtfm",
    metadata: Dict[str, Any] = None,
) -> Path:
    """Write model config, metadata and float32 parameters to one file."""
    tensors = []
    payloads = []
    offset = 0
    for name, tensor in model.state_dict().items():
        array = tensor.detach().cpu().numpy().astype(PAYLOAD_DTYPE)
        tensors.append({
            "name": name,
            "shape": list(array.shape),
            "offset": offset,
            "count": int(array.size),
        })
        payloads.append(np.ascontiguousarray(array).tobytes(order="C"))
        offset += int(array.size)

    header = {
        "detector": detector,
        "model_config": model.config.model_dump(mode="json"),
        "metadata": metadata or {},
        "tensors": tensors,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(PREFIX.pack(MAGIC, VERSION, len(header_bytes)))
        f.write(header_bytes)
        for payload in payloads:
            f.write(payload)

    logger.info(f"Saved checkpoint {path} ({offset} float32 values)")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[torch.nn.Module, Dict[str, Any]]:
    """
    Rebuild the detector stored at path.

    Returns:
        (model in float32 eval mode, metadata dict)
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < PREFIX.size:
        raise CheckpointError(f"{path}: file too short for a checkpoint header")

    magic, version, header_len = PREFIX.unpack_from(raw, 0)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")

    header_end = PREFIX.size + header_len
    try:
        header = json.loads(raw[PREFIX.size:header_end].decode("utf-8"))
        config = ModelConfig.model_validate(header["model_config"])
        detector = header["detector"]
        metadata = header["metadata"]
        tensors = [
            (t["name"], tuple(t["shape"]), int(t["offset"]), int(t["count"]))
            for t in header["tensors"]
        ]
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(f"{path}: unreadable checkpoint header: {e}") from e

    payload = raw[header_end:]
    if len(payload) % PAYLOAD_DTYPE.itemsize:
        raise CheckpointError(
            f"{path}: payload of {len(payload)} bytes is not a whole number of float32 values"
        )
    values = np.frombuffer(payload, dtype=PAYLOAD_DTYPE)
    declared = sum(count for _, _, _, count in tensors)
    if values.size < declared:
        raise CheckpointError(f"{path}: payload truncated, {values.size} of {declared} values present")
    if values.size > declared:
        raise CheckpointError(f"{path}: {values.size - declared} trailing values after the declared tensors")

    try:
        model = build_detector(detector, config)
    except ConfigError as e:
        raise CheckpointError(f"{path}: {e}") from e
    expected = model.state_dict()

    state = {}
    for name, shape, start, count in tensors:
        if name not in expected:
            raise CheckpointError(f"{path}: unexpected tensor {name}")
        if start + count > values.size or int(np.prod(shape)) != count:
            raise CheckpointError(f"{path}: tensor {name} does not fit the payload")
        array = values[start:start + count].reshape(shape)
        if tuple(array.shape) != tuple(expected[name].shape):
            raise CheckpointError(
                f"{path}: tensor {name} has shape {array.shape}, "
                f"model expects {tuple(expected[name].shape)}"
            )
        state[name] = torch.from_numpy(array.astype(np.float32))

    missing = set(expected) - set(state)
    if missing:
        raise CheckpointError(f"{path}: missing tensors {sorted(missing)}")

    model.load_state_dict(state)
    model.eval()
    logger.info(f"Loaded {detector} checkpoint {path}")
    return model, metadata
