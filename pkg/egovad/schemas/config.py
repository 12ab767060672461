"""
Pydantic schemas for detector, training and synthesis configuration
"""
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from egovad.core.config import settings
from egovad.core.ftb import FtbMode


class ModelConfig(BaseModel):
    """Temporal encoder + scorer shape configuration"""

    model_config = ConfigDict(frozen=True)

    input_dim: int = Field(..., gt=0, description="Embedding dimension D")
    branch_dim: Optional[int] = Field(
        None, gt=0, description="Width of each encoder branch (default D / 4)"
    )
    dilations: List[int] = Field(default_factory=lambda: list(settings.DILATIONS))
    kernel_size: int = Field(settings.KERNEL_SIZE, gt=0)
    scorer_hidden: List[int] = Field(default_factory=lambda: list(settings.SCORER_HIDDEN))
    seed: int = Field(0, ge=0)

    @field_validator("dilations", "scorer_hidden")
    @classmethod
    def _positive_entries(cls, values: List[int]) -> List[int]:
        if not values or any(v < 1 for v in values):
            raise ValueError("must be a non-empty list of positive integers")
        return values

    @field_validator("kernel_size")
    @classmethod
    def _odd_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"kernel_size must be odd for symmetric padding, got {value}")
        return value

    @model_validator(mode="after")
    def _branches_fill_input(self) -> "ModelConfig":
        n_branches = len(self.dilations) + 1
        if self.branch_dim is None:
            if self.input_dim % n_branches != 0:
                raise ValueError(
                    f"input_dim {self.input_dim} is not divisible by {n_branches} "
                    f"({len(self.dilations)} conv branches + 1 attention branch)"
                )
        elif self.branch_dim * n_branches != self.input_dim:
            raise ValueError(
                f"{n_branches} branches of width {self.branch_dim} do not "
                f"concatenate back to input_dim {self.input_dim}"
            )
        return self

    @property
    def resolved_branch_dim(self) -> int:
        if self.branch_dim is not None:
            return self.branch_dim
        return self.input_dim // (len(self.dilations) + 1)


class TrainConfig(BaseModel):
    """Top-k MIL training configuration"""

    model_config = ConfigDict(frozen=True)

    k: int = Field(settings.TOP_K, ge=1)
    margin: float = Field(settings.MARGIN, gt=0)
    alpha_mag: float = Field(settings.ALPHA_MAG, ge=0)
    beta_smooth: float = Field(settings.BETA_SMOOTH, ge=0)
    gamma_sparse: float = Field(settings.GAMMA_SPARSE, ge=0)
    learning_rate: float = Field(settings.LEARNING_RATE, gt=0)
    momentum: float = Field(settings.MOMENTUM, ge=0, lt=1)
    optimizer: Literal["sgd", "adam"] = "sgd"
    epochs: int = Field(settings.EPOCHS, ge=1)
    snippet_len: int = Field(settings.SNIPPET_LEN, ge=1)
    seed: int = Field(0, ge=0)
    ftb_mode: FtbMode = FtbMode.M3
    lowpass: Optional[int] = Field(None, ge=1, description="Experimental M2 DCT cutoff")

    @field_validator("ftb_mode", mode="before")
    @classmethod
    def _parse_mode(cls, value):
        return FtbMode.parse(value)


class SynthConfig(BaseModel):
    """Planted-anomaly synthetic dataset configuration"""

    model_config = ConfigDict(frozen=True)

    n_normal: int = Field(..., ge=0)
    n_anomaly: int = Field(..., ge=0)
    T: int = Field(256, ge=2, description="Frames per video")
    D: int = Field(32, ge=1, description="Embedding dimension")
    anomaly_len: int = Field(32, ge=1)
    magnitude_boost: float = Field(settings.MAGNITUDE_BOOST, gt=1)
    noise_sigma: float = Field(settings.NOISE_SIGMA, gt=0)
    seed: int = Field(0, ge=0)
    scale_range: Tuple[float, float] = (1.0, 4.0)
    drift_sigma: float = Field(0.02, ge=0)
    rotation_deg: float = Field(60.0, gt=0, le=90)
    train_fraction: float = Field(settings.TRAIN_FRACTION, ge=0, le=1)

    @model_validator(mode="after")
    def _check(self) -> "SynthConfig":
        if self.anomaly_len >= self.T:
            raise ValueError(f"anomaly_len {self.anomaly_len} must be < T {self.T}")
        low, high = self.scale_range
        if not 0 < low <= high:
            raise ValueError(f"scale_range must satisfy 0 < low <= high, got {self.scale_range}")
        return self
