"""
Feature file codec (.ftbf) and snippet pooling
"""
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from egovad.core.errors import (
    BadMagicError,
    FeatureInvariantError,
    NonFiniteValueError,
    PayloadSizeError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)

logger = logging.getLogger(__name__)

MAGIC = b"FTBF"
VERSION = 1
HEADER = struct.Struct("<4sIII")
PAYLOAD_DTYPE = np.dtype("<f4")


@dataclass(frozen=True)
class FeatureSequence:
    """T x D matrix of per-frame (or per-snippet) embeddings"""

    data: np.ndarray
    frame_rate_hint: Optional[float] = None

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise FeatureInvariantError(
                f"feature sequence must be a T x D matrix, got shape {data.shape}"
            )
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise FeatureInvariantError(
                f"feature sequence needs T >= 1 and D >= 1, got {data.shape}"
            )
        if not np.all(np.isfinite(data)):
            raise FeatureInvariantError("feature sequence contains NaN or Inf")
        if self.frame_rate_hint is not None and not self.frame_rate_hint > 0:
            raise FeatureInvariantError("frame_rate_hint must be positive")
        object.__setattr__(self, "data", data.astype(np.float32, copy=False))

    @property
    def T(self) -> int:
        return self.data.shape[0]

    @property
    def D(self) -> int:
        return self.data.shape[1]


def encode_bytes(seq: FeatureSequence) -> bytes:
    """Serialize a sequence: 16-byte header then row-major float32 LE payload."""
    T, D = seq.data.shape
    header = HEADER.pack(MAGIC, VERSION, T, D)
    payload = np.ascontiguousarray(seq.data, dtype=PAYLOAD_DTYPE).tobytes(order="C")
    return header + payload


def decode_bytes(raw: bytes, source: str = "<bytes>") -> FeatureSequence:
    """Parse .ftbf bytes, raising a distinct error per failure kind."""
    if len(raw) < HEADER.size:
        raise TruncatedPayloadError(
            f"{source}: {len(raw)} bytes is shorter than the {HEADER.size}-byte header"
        )

    magic, version, T, D = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise BadMagicError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(
            f"{source}: unsupported version {version}, this build reads {VERSION}"
        )
    if T < 1 or D < 1:
        raise TruncatedPayloadError(f"{source}: header declares empty matrix T={T} D={D}")

    expected = T * D * PAYLOAD_DTYPE.itemsize
    payload = raw[HEADER.size:]
    if len(payload) < expected:
        raise TruncatedPayloadError(
            f"{source}: header declares {T}x{D} ({expected} bytes), "
            f"payload has {len(payload)} bytes"
        )
    if len(payload) > expected:
        raise PayloadSizeError(
            f"{source}: {len(payload) - expected} trailing bytes after {T}x{D} payload"
        )

    data = np.frombuffer(payload, dtype=PAYLOAD_DTYPE).reshape(T, D)
    if not np.all(np.isfinite(data)):
        raise NonFiniteValueError(f"{source}: payload contains NaN or Inf")

    return FeatureSequence(data.astype(np.float32))


def decode_feature_file(path: Union[str, Path]) -> FeatureSequence:
    """Read a .ftbf file exactly as stored."""
    path = Path(path)
    raw = path.read_bytes()
    seq = decode_bytes(raw, source=str(path))
    logger.debug(f"Decoded {path}: T={seq.T}, D={seq.D}")
    return seq


def encode_feature_file(seq: FeatureSequence, path: Union[str, Path]) -> Path:
    """Write a .ftbf file; parent directories are created."""
    if not isinstance(seq, FeatureSequence):
        seq = FeatureSequence(np.asarray(seq))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_bytes(seq))
    logger.debug(f"Wrote {path}: T={seq.T}, D={seq.D}")
    return path


def snippetize(seq, S: int) -> FeatureSequence:
    """
    Mean-pool consecutive windows of S rows.

    The final partial window is padded by replicating the last row up to
    length S before averaging, so the output has ceil(T / S) rows.

    Args:
        seq: Input sequence (T x D)
        S: Snippet length in rows

    Returns:
        Pooled sequence (ceil(T / S) x D)
    """
    if S < 1:
        raise ValueError(f"snippet length must be >= 1, got {S}")

    data = np.asarray(getattr(seq, "data", seq))
    T, D = data.shape
    n_snippets = math.ceil(T / S)
    pad = n_snippets * S - T

    padded = data.astype(np.float64)
    if pad:
        padded = np.concatenate([padded, np.repeat(padded[-1:], pad, axis=0)], axis=0)

    pooled = padded.reshape(n_snippets, S, D).mean(axis=1)
    rate = getattr(seq, "frame_rate_hint", None)
    hint = rate / S if rate else None
    return FeatureSequence(pooled.astype(np.float32), frame_rate_hint=hint)
