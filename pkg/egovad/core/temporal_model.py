"""
Snippet-level anomaly detector: multi-scale temporal encoder + MLP scorer.

The encoder runs one dilated 1-D convolution per dilation and a single-head
temporal self-attention branch in parallel; their outputs are concatenated
back to the input width and added to the input. Scores come from an MLP on
the enhanced rows, feature magnitudes are the rows' l2 norms.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from egovad.core.errors import ConfigError, ShapeError
from egovad.schemas.config import ModelConfig

logger = logging.getLogger(__name__)

DETECTORS: Dict[str, Callable[[ModelConfig], nn.Module]] = {}

# Named plug-in points sharing the SnippetOutput contract
PLANNED_DETECTORS = ("mgfn", "urdmu", "oectst")


def register_detector(name: str):
    def decorator(cls):
        DETECTORS[name] = cls
        return cls

    return decorator


@dataclass
class SnippetOutput:
    enhanced: torch.Tensor  # T' x D
    scores: torch.Tensor  # T', in [0, 1]
    magnitudes: torch.Tensor  # T', >= 0


class TemporalSelfAttention(nn.Module):
    """Single-head softmax attention over the full temporal field"""

    def __init__(self, input_dim: int, out_dim: int):
        super().__init__()
        self.query = nn.Linear(input_dim, out_dim)
        self.key = nn.Linear(input_dim, out_dim)
        self.value = nn.Linear(input_dim, out_dim)
        self.scale = 1.0 / math.sqrt(out_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        q, k, v = self.query(x), self.key(x), self.value(x)
        weights = torch.softmax(q @ k.transpose(0, 1) * self.scale, dim=-1)
        return weights @ v


@register_detector("rtfm")
class MagnitudeDetector(nn.Module):
    """Dilated-convolution pyramid + temporal self-attention, magnitude-supervised"""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        branch_dim = config.resolved_branch_dim

        self.convs = nn.ModuleList(
            nn.Conv1d(
                config.input_dim,
                branch_dim,
                kernel_size=config.kernel_size,
                dilation=d,
                padding=d * (config.kernel_size - 1) // 2,
            )
            for d in config.dilations
        )
        self.attention = TemporalSelfAttention(config.input_dim, branch_dim)

        layers = []
        width = config.input_dim
        for hidden in config.scorer_hidden:
            layers += [nn.Linear(width, hidden), nn.ReLU()]
            width = hidden
        layers.append(nn.Linear(width, 1))
        self.scorer = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> SnippetOutput:
        if x.ndim != 2 or x.shape[1] != self.config.input_dim:
            raise ShapeError(
                f"detector expects T' x {self.config.input_dim} input, got {tuple(x.shape)}"
            )

        channels_first = x.transpose(0, 1).unsqueeze(0)
        branches = [F.relu(conv(channels_first)).squeeze(0).transpose(0, 1) for conv in self.convs]
        branches.append(self.attention(x))

        enhanced = x + torch.cat(branches, dim=1)
        scores = torch.sigmoid(self.scorer(enhanced)).squeeze(-1)
        magnitudes = torch.linalg.vector_norm(enhanced, dim=1)
        return SnippetOutput(enhanced=enhanced, scores=scores, magnitudes=magnitudes)


def build_detector(name: str, config: ModelConfig) -> nn.Module:
    if name in DETECTORS:
        return DETECTORS[name](config)
    if name in PLANNED_DETECTORS:
        raise ConfigError(f"detector {name!r} is not implemented; available: {sorted(DETECTORS)}")
    raise ConfigError(f"unknown detector {name!r}; available: {sorted(DETECTORS)}")


def _fan_in(name: str, module: nn.Module) -> int:
    if isinstance(module, nn.Conv1d):
        return module.in_channels * module.kernel_size[0]
    if isinstance(module, nn.Linear):
        return module.in_features
    raise TypeError(f"no fan-in rule for {name} ({type(module).__name__})")


def init_model(config: ModelConfig, detector: str = "rtfm") -> nn.Module:
    """
    Build a detector with parameters drawn uniformly from +-1/sqrt(fan_in).

    Parameters are filled in named_modules() order from a torch.Generator
    seeded with config.seed, so the same config always yields bit-identical
    parameters.
    """
    model = build_detector(detector, config)
    generator = torch.Generator().manual_seed(config.seed)

    with torch.no_grad():
        for name, module in model.named_modules():
            if not isinstance(module, (nn.Conv1d, nn.Linear)):
                continue
            bound = 1.0 / math.sqrt(_fan_in(name, module))
            module.weight.uniform_(-bound, bound, generator=generator)
            if module.bias is not None:
                module.bias.uniform_(-bound, bound, generator=generator)

    n_params = sum(p.numel() for p in model.parameters())
    logger.info(f"Initialized {detector} detector: D={config.input_dim}, {n_params} parameters, seed={config.seed}")
    return model


def score_snippets(model: nn.Module, features) -> Dict[str, np.ndarray]:
    """Inference helper: numpy in, numpy scores/magnitudes out."""
    data = np.asarray(getattr(features, "data", features), dtype=np.float32)
    param = next(model.parameters())
    with torch.no_grad():
        out = model(torch.as_tensor(data, dtype=param.dtype))
    return {
        "scores": out.scores.numpy().astype(np.float64),
        "magnitudes": out.magnitudes.numpy().astype(np.float64),
    }
