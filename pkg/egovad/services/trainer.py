"""
Weakly-supervised training service: bag preparation and the top-k MIL loop
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import torch

from egovad.core.config import settings
from egovad.core.errors import ShapeError, ValidationFailed
from egovad.core.features import decode_feature_file, snippetize
from egovad.core.ftb import apply_ftb
from egovad.core.manifest import resolve_feature_path, validate_manifest
from egovad.core.mil import LOSS_COMPONENTS, Bag, mil_loss
from egovad.core.temporal_model import init_model
from egovad.schemas.config import ModelConfig, TrainConfig
from egovad.schemas.manifest import ManifestEntry, Split, VideoLabel

logger = logging.getLogger(__name__)


@dataclass
class TrainResult:
    model: torch.nn.Module
    history: List[Dict[str, float]] = field(default_factory=list)


def prepare_snippets(
    path: Union[str, Path], ftb_mode, snippet_len: int, lowpass: Optional[int] = None
) -> np.ndarray:
    """Decode, transform at frame level, then pool into snippets."""
    seq = decode_feature_file(path)
    transformed = apply_ftb(seq, ftb_mode, lowpass=lowpass)
    return snippetize(transformed, snippet_len).data


def load_bags(
    entries: List[ManifestEntry],
    cfg: TrainConfig,
    base_dir: Optional[Union[str, Path]] = None,
) -> List[Bag]:
    """Prepare one bag per entry; results keep the entries' order."""

    def load(entry: ManifestEntry) -> Bag:
        path = resolve_feature_path(entry, base_dir)
        snippets = prepare_snippets(path, cfg.ftb_mode, cfg.snippet_len, cfg.lowpass)
        return Bag(video_id=entry.video_id, label=entry.label, snippets=snippets)

    with ThreadPoolExecutor(max_workers=settings.LOADER_WORKERS) as pool:
        bags = list(pool.map(load, entries))

    logger.info(f"Prepared {len(bags)} bags with FTB {cfg.ftb_mode.value}, S={cfg.snippet_len}")
    return bags


def _pair_schedule(n_abnormal: int, n_normal: int, rng: np.random.Generator):
    """One epoch of (abnormal, normal) index pairs; the shorter pool cycles."""
    abnormal = rng.permutation(n_abnormal)
    normal = rng.permutation(n_normal)
    steps = max(n_abnormal, n_normal)
    return [(int(abnormal[i % n_abnormal]), int(normal[i % n_normal])) for i in range(steps)]


def _make_optimizer(model: torch.nn.Module, cfg: TrainConfig) -> torch.optim.Optimizer:
    if cfg.optimizer == "adam":
        logger.warning("Adam optimizer selected; runs are outside the determinism guarantee")
        return torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    return torch.optim.SGD(model.parameters(), lr=cfg.learning_rate, momentum=cfg.momentum)


def train_on_bags(
    abnormal: List[Bag],
    normal: List[Bag],
    model_cfg: ModelConfig,
    cfg: TrainConfig,
) -> TrainResult:
    """
    Run the top-k MIL loop on prepared bags.

    Each epoch draws fresh permutations of both pools from a generator seeded
    with cfg.seed and steps once per (abnormal, normal) pair.
    """
    if not abnormal or not normal:
        raise ValueError("training needs at least one abnormal and one normal bag")
    dims = {bag.snippets.shape[1] for bag in abnormal + normal}
    if dims != {model_cfg.input_dim}:
        raise ShapeError(f"bag feature dims {sorted(dims)} do not match input_dim {model_cfg.input_dim}")

    torch.set_num_threads(settings.TORCH_THREADS)
    if settings.TORCH_THREADS > 1:
        logger.warning(f"Training with {settings.TORCH_THREADS} torch threads; results may not be bit-identical")

    model = init_model(model_cfg)
    model.train()
    optimizer = _make_optimizer(model, cfg)
    rng = np.random.default_rng(cfg.seed)

    abnormal_x = [torch.as_tensor(b.snippets, dtype=torch.float32) for b in abnormal]
    normal_x = [torch.as_tensor(b.snippets, dtype=torch.float32) for b in normal]

    history = []
    for epoch in range(1, cfg.epochs + 1):
        sums = {name: 0.0 for name in ("total",) + LOSS_COMPONENTS}
        schedule = _pair_schedule(len(abnormal), len(normal), rng)

        for a_idx, n_idx in schedule:
            optimizer.zero_grad()
            total, components = mil_loss(model(abnormal_x[a_idx]), model(normal_x[n_idx]), cfg)
            total.backward()
            optimizer.step()

            sums["total"] += total.item()
            for name in LOSS_COMPONENTS:
                sums[name] += components[name].item()

        record = {"epoch": epoch}
        record.update({f"mean_{name}": value / len(schedule) for name, value in sums.items()})
        history.append(record)
        logger.info(
            f"Epoch {epoch}/{cfg.epochs} - total {record['mean_total']:.4f}, "
            f"cls {record['mean_cls']:.4f}, mag {record['mean_mag']:.2f}"
        )

    model.eval()
    return TrainResult(model=model, history=history)


def train(
    manifest: List[ManifestEntry],
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    base_dir: Optional[Union[str, Path]] = None,
) -> TrainResult:
    """
    Train a detector from video-level labels only.

    Raises:
        ValidationFailed: the manifest violates its invariants or the
            weak-supervision precondition; the report is attached
    """
    report = validate_manifest(manifest)
    if not report.ok:
        raise ValidationFailed("refusing to train on an invalid manifest", report=report)

    train_entries = sorted(
        (e for e in manifest if e.split == Split.TRAIN), key=lambda e: e.video_id
    )
    bags = load_bags(train_entries, cfg, base_dir)
    abnormal = [b for b in bags if b.label == VideoLabel.ANOMALY]
    normal = [b for b in bags if b.label == VideoLabel.NORMAL]
    logger.info(f"Training on {len(abnormal)} abnormal and {len(normal)} normal bags")

    return train_on_bags(abnormal, normal, model_cfg, cfg)


def write_history(history: List[Dict[str, float]], path: Union[str, Path]) -> Path:
    """One JSON object per epoch."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in history:
            f.write(json.dumps(record, sort_keys=True))
            f.write("\n")
    return path
