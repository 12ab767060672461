"""
Feature Transformation Block: motion and spatial enhanced feature maps.

M1 passes the raw spatial embeddings through. M2 and M3 start from the
temporal regularity map (absolute difference between a sequence and its
one-step backward shift) and add either its temporal DCT (M2) or the
sigmoid-activated raw features (M3).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import fft
from scipy.special import expit

logger = logging.getLogger(__name__)

# expit saturates to exactly 0 or 1 in float64 for |x| beyond ~37 (upper) or ~745 (lower)
_GATE_MIN = np.nextafter(0.0, 1.0)
_GATE_MAX = np.nextafter(1.0, 0.0)


class FtbMode(str, Enum):
    M1 = "M1"
    M2 = "M2"
    M3 = "M3"

    @classmethod
    def parse(cls, value) -> "FtbMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown FTB mode {value!r}, expected one of m1, m2, m3") from None


@dataclass(frozen=True)
class TransformedFeature:
    data: np.ndarray
    mode: FtbMode

    @property
    def shape(self):
        return self.data.shape


def _matrix(F) -> np.ndarray:
    data = np.asarray(getattr(F, "data", F), dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ValueError(f"expected a T x D matrix with T >= 1, got shape {data.shape}")
    return data


def temporal_shift(F) -> np.ndarray:
    """Row t takes row t-1; row 0 is replicated and the last row drops off."""
    data = _matrix(F)
    shifted = np.empty_like(data)
    shifted[0] = data[0]
    shifted[1:] = data[:-1]
    return shifted


def temporal_regularity(F) -> np.ndarray:
    data = _matrix(F)
    return np.abs(data - temporal_shift(data))


def dct_temporal(F, lowpass: Optional[int] = None) -> np.ndarray:
    """
    Orthonormal DCT-II along the temporal axis, per embedding channel.

    Args:
        F: T x D matrix
        lowpass: Keep only the first `lowpass` coefficients (experimental)

    Returns:
        T x D coefficient matrix
    """
    data = _matrix(F)
    coeffs = fft.dct(data, type=2, norm="ortho", axis=0)
    if lowpass is not None:
        if lowpass < 1:
            raise ValueError(f"lowpass cutoff must be >= 1, got {lowpass}")
        coeffs[lowpass:] = 0.0
    return coeffs


def apply_ftb(F, mode, lowpass: Optional[int] = None) -> TransformedFeature:
    """
    Transform a feature sequence with the selected FTB mode.

    Args:
        F: FeatureSequence or T x D matrix
        mode: FtbMode (or "m1"/"m2"/"m3")
        lowpass: Optional DCT cutoff, only used by M2

    Returns:
        TransformedFeature with the input's shape
    """
    mode = FtbMode.parse(mode)
    data = _matrix(F)

    if mode == FtbMode.M1:
        out = data.copy()
    elif mode == FtbMode.M2:
        delta = temporal_regularity(data)
        out = delta + dct_temporal(delta, lowpass=lowpass)
    else:
        delta = temporal_regularity(data)
        out = delta + np.clip(expit(data), _GATE_MIN, _GATE_MAX)

    return TransformedFeature(data=out, mode=mode)
