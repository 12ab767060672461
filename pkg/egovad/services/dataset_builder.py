"""
WS-DoTA style dataset organization: manifest building from anomalous and
normal source pools, DoTA annotation import, statistics, and synthetic
planted-anomaly datasets.
"""
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Protocol, Set, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from egovad.core.errors import DatasetBuildError
from egovad.core.features import FeatureSequence, encode_feature_file
from egovad.core.manifest import validate_manifest, write_manifest
from egovad.schemas.config import SynthConfig
from egovad.schemas.manifest import ClassTag, ManifestEntry, Split, VideoLabel
from egovad.schemas.report import DatasetStats, SplitStats

logger = logging.getLogger(__name__)

CLASS_TAGS = [tag.value for tag in ClassTag]

# DoTA accident_name -> WS-DoTA class tag
DOTA_CLASS_MAP = {
    "start_stop_or_stationary": "ST",
    "moving_ahead_or_waiting": "AH",
    "lateral": "LA",
    "oncoming": "OC",
    "turning": "TC",
    "pedestrian": "VP",
    "obstacle": "VO",
    "leave_to_left": "OO",
    "leave_to_right": "OO",
    "out_of_control": "OO",
}


class AnomalousSource(BaseModel):
    feature_path: str
    frame_count: int
    class_tag: str
    anomaly_intervals: List[Tuple[int, int]] = Field(default_factory=list)
    video_id: Optional[str] = None


class NormalSource(BaseModel):
    feature_path: str
    frame_count: int
    anomaly_intervals: List[Tuple[int, int]] = Field(default_factory=list)
    video_id: Optional[str] = None


class SplitRule(Protocol):
    def assign(self, video_id: str) -> Split: ...


class FractionSplitRule:
    """Send a stable pseudo-random fraction of anomalous videos to test."""

    def __init__(self, test_fraction: float):
        if not 0.0 <= test_fraction <= 1.0:
            raise ValueError(f"test_fraction must be in [0, 1], got {test_fraction}")
        self.test_fraction = test_fraction

    def assign(self, video_id: str) -> Split:
        digest = hashlib.sha1(video_id.encode("utf-8")).hexdigest()
        position = int(digest[:8], 16) / 2**32
        return Split.TEST if position < self.test_fraction else Split.TRAIN


class ExplicitSplitRule:
    """Test split is an explicit id list, e.g. the official DoTA test videos."""

    def __init__(self, test_ids: Iterable[str]):
        self.test_ids: Set[str] = set(test_ids)

    def assign(self, video_id: str) -> Split:
        return Split.TEST if video_id in self.test_ids else Split.TRAIN


def _video_id(source) -> str:
    return source.video_id or Path(source.feature_path).stem


def load_sources(path: Union[str, Path], normal: bool = False) -> list:
    """Read a JSONL source list (AnomalousSource or NormalSource records)."""
    model = NormalSource if normal else AnomalousSource
    sources = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                sources.append(model.model_validate_json(line))
            except ValidationError as e:
                raise DatasetBuildError(f"{path}:{line_number}: invalid source record: {e}") from e
    return sources


def load_dota_annotations(annotation_dir: Union[str, Path], feature_dir: str = "features") -> List[AnomalousSource]:
    """
    Convert DoTA per-video annotation JSON files into anomalous sources.

    DoTA's anomaly_end is inclusive; the manifest interval is half-open.
    """
    sources = []
    for path in sorted(Path(annotation_dir).glob("*.json")):
        with open(path, "r", encoding="utf-8") as f:
            record = json.load(f)
        name = record.get("accident_name")
        if name not in DOTA_CLASS_MAP:
            raise DatasetBuildError(f"{path}: accident_name {name!r} has no class tag")
        video_id = record["video_name"]
        sources.append(
            AnomalousSource(
                video_id=video_id,
                feature_path=f"{feature_dir}/{video_id}.ftbf",
                frame_count=int(record["num_frames"]),
                class_tag=DOTA_CLASS_MAP[name],
                anomaly_intervals=[(int(record["anomaly_start"]), int(record["anomaly_end"]) + 1)],
            )
        )
    logger.info(f"Loaded {len(sources)} DoTA annotations from {annotation_dir}")
    return sources


def build_manifest(
    anomalous_sources: List[AnomalousSource],
    normal_sources: List[NormalSource],
    split_rule: SplitRule,
    base_dir: Optional[Union[str, Path]] = None,
    check_paths: bool = True,
) -> List[ManifestEntry]:
    """
    Assemble a weak-supervision manifest.

    Normal sources always go to train; anomalous sources go where the split
    rule sends them. Test entries must be annotated with intervals.

    Raises:
        DatasetBuildError: unknown class tag, duplicate video_id, normal
            source with intervals, missing test annotation or feature file,
            or any other validation violation of the result
    """
    entries: List[ManifestEntry] = []
    seen: Set[str] = set()

    def claim(video_id: str):
        if video_id in seen:
            raise DatasetBuildError(f"duplicate video_id {video_id!r}")
        seen.add(video_id)

    def check_path(source):
        if not check_paths:
            return
        path = Path(source.feature_path)
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        if not path.exists():
            raise DatasetBuildError(f"feature file not found: {path}")

    for source in anomalous_sources:
        video_id = _video_id(source)
        claim(video_id)
        check_path(source)
        if source.class_tag not in CLASS_TAGS:
            raise DatasetBuildError(
                f"{video_id}: unknown class tag {source.class_tag!r}, expected one of {CLASS_TAGS}"
            )
        split = split_rule.assign(video_id)
        if split == Split.TEST and not source.anomaly_intervals:
            raise DatasetBuildError(f"{video_id}: test video has no anomaly intervals")
        entries.append(
            ManifestEntry(
                video_id=video_id,
                split=split,
                label=VideoLabel.ANOMALY,
                class_tag=ClassTag(source.class_tag),
                feature_path=source.feature_path,
                frame_count=source.frame_count,
                anomaly_intervals=list(source.anomaly_intervals),
            )
        )

    for source in normal_sources:
        video_id = _video_id(source)
        claim(video_id)
        check_path(source)
        if source.anomaly_intervals:
            raise DatasetBuildError(f"{video_id}: normal source listed with anomaly intervals")
        entries.append(
            ManifestEntry(
                video_id=video_id,
                split=Split.TRAIN,
                label=VideoLabel.NORMAL,
                feature_path=source.feature_path,
                frame_count=source.frame_count,
            )
        )

    report = validate_manifest(entries)
    if not report.ok:
        raise DatasetBuildError("built manifest is invalid: " + "; ".join(report.messages()))

    n_test = sum(e.split == Split.TEST for e in entries)
    logger.info(f"Built manifest: {len(entries) - n_test} train, {n_test} test entries")
    return entries


def _stats(entries: List[ManifestEntry]) -> SplitStats:
    frames = [e.frame_count for e in entries]
    segments = [end - start for e in entries for start, end in e.anomaly_intervals]
    return SplitStats(
        videos=len(entries),
        total_frames=int(sum(frames)),
        mean_frames=float(np.mean(frames)),
        min_frames=int(min(frames)),
        max_frames=int(max(frames)),
        anomaly_segments=len(segments),
        mean_anomaly_frames=float(np.mean(segments)) if segments else None,
        min_anomaly_frames=int(min(segments)) if segments else None,
        max_anomaly_frames=int(max(segments)) if segments else None,
    )


def dataset_stats(entries: List[ManifestEntry]) -> DatasetStats:
    """Video and frame statistics per split/label, plus per-class test counts."""
    groups: Dict[str, SplitStats] = {}
    for split in Split:
        for label in VideoLabel:
            members = [e for e in entries if e.split == split and e.label == label]
            if members:
                groups[f"{split.value}/{label.value}"] = _stats(members)

    class_counts = {tag: 0 for tag in CLASS_TAGS}
    for e in entries:
        if e.split == Split.TEST and e.class_tag is not None:
            class_counts[e.class_tag.value] += 1

    return DatasetStats(groups=groups, test_class_counts=class_counts)


def _unit_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _normal_walk(rng: np.random.Generator, cfg: SynthConfig):
    """Smooth low-variance walk around a Gaussian base direction."""
    base = _unit_rows(rng.standard_normal(cfg.D))
    scale = rng.uniform(*cfg.scale_range)
    drift = np.cumsum(rng.normal(0.0, cfg.drift_sigma, size=(cfg.T, cfg.D)), axis=0)
    directions = _unit_rows(base + drift)
    noise = rng.normal(0.0, cfg.noise_sigma, size=(cfg.T, cfg.D))
    return directions, scale, noise


def _plant_anomaly(rng: np.random.Generator, cfg: SynthConfig, directions: np.ndarray) -> Tuple[int, np.ndarray]:
    """Rotate interval directions toward fresh per-frame orthogonal directions."""
    start = int(rng.integers(0, cfg.T - cfg.anomaly_len + 1))
    theta = math.radians(cfg.rotation_deg)
    rotated = directions.copy()
    for t in range(start, start + cfg.anomaly_len):
        d = directions[t]
        r = rng.standard_normal(cfg.D)
        r -= (r @ d) * d
        norm = np.linalg.norm(r)
        if norm > 1e-12:
            rotated[t] = math.cos(theta) * d + math.sin(theta) * (r / norm)
    return start, rotated


def generate_synthetic_dataset(cfg: SynthConfig, out_dir: Union[str, Path]) -> Path:
    """
    Write .ftbf files and manifest.jsonl for a planted-anomaly dataset.

    Each video's content depends only on (seed, kind, index). Anomalous
    videos share the normal generator and then get one interval of
    anomaly_len frames whose norm is scaled by magnitude_boost and whose
    direction is rotated. A train_fraction share of anomalous videos goes to
    train, the rest to test; all normal videos are train.

    Returns:
        Path of the manifest; precondition violations (e.g. n_anomaly = 0)
        are logged, not raised
    """
    out_dir = Path(out_dir)
    entries: List[ManifestEntry] = []

    for i in range(cfg.n_normal):
        rng = np.random.default_rng([cfg.seed, 0, i])
        directions, scale, noise = _normal_walk(rng, cfg)
        video_id = f"normal_{i:04d}"
        rel_path = f"features/{video_id}.ftbf"
        encode_feature_file(FeatureSequence(scale * directions + noise), out_dir / rel_path)
        entries.append(
            ManifestEntry(
                video_id=video_id, split=Split.TRAIN, label=VideoLabel.NORMAL,
                feature_path=rel_path, frame_count=cfg.T,
            )
        )

    n_train_anomaly = int(math.floor(cfg.train_fraction * cfg.n_anomaly + 0.5))
    order = np.random.default_rng([cfg.seed, 2]).permutation(cfg.n_anomaly)
    train_anomaly = {int(i) for i in order[:n_train_anomaly]}

    for i in range(cfg.n_anomaly):
        rng = np.random.default_rng([cfg.seed, 1, i])
        directions, scale, noise = _normal_walk(rng, cfg)
        start, rotated = _plant_anomaly(rng, cfg, directions)
        magnitudes = np.full((cfg.T, 1), scale)
        magnitudes[start:start + cfg.anomaly_len] *= cfg.magnitude_boost

        video_id = f"anomaly_{i:04d}"
        rel_path = f"features/{video_id}.ftbf"
        encode_feature_file(FeatureSequence(magnitudes * rotated + noise), out_dir / rel_path)
        entries.append(
            ManifestEntry(
                video_id=video_id,
                split=Split.TRAIN if i in train_anomaly else Split.TEST,
                label=VideoLabel.ANOMALY,
                class_tag=ClassTag(CLASS_TAGS[i % len(CLASS_TAGS)]),
                feature_path=rel_path,
                frame_count=cfg.T,
                anomaly_intervals=[(start, start + cfg.anomaly_len)],
            )
        )

    manifest_path = write_manifest(entries, out_dir / "manifest.jsonl")
    report = validate_manifest(entries)
    if not report.ok:
        for message in report.messages():
            logger.warning(f"Synthetic manifest violation: {message}")
    logger.info(
        f"Generated {cfg.n_normal} normal + {cfg.n_anomaly} anomalous videos in {out_dir}"
    )
    return manifest_path
