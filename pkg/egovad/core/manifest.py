"""
Manifest JSONL I/O and validation
"""
import logging
from collections import Counter
from pathlib import Path
from typing import Iterable, List, Optional, Union

from pydantic import ValidationError

from egovad.core.errors import FeatureDecodeError, ManifestFormatError
from egovad.core.features import decode_feature_file
from egovad.schemas.manifest import (
    ManifestEntry,
    Split,
    ValidationReport,
    VideoLabel,
    Violation,
)

logger = logging.getLogger(__name__)

NO_NORMAL_TRAIN = "weak-supervision precondition: no normal training videos"
NO_ANOMALY_TRAIN = "weak-supervision precondition: no anomalous training videos"


def load_manifest(path: Union[str, Path]) -> List[ManifestEntry]:
    """Read one ManifestEntry per non-blank line."""
    path = Path(path)
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                entries.append(ManifestEntry.model_validate_json(line))
            except ValidationError as e:
                raise ManifestFormatError(
                    f"{path}:{line_number}: invalid manifest record: {e}",
                    line_number=line_number,
                ) from e
    logger.info(f"Loaded {len(entries)} manifest entries from {path}")
    return entries


def write_manifest(entries: Iterable[ManifestEntry], path: Union[str, Path]) -> Path:
    """Write entries as JSONL in the given order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for entry in entries:
            f.write(entry.model_dump_json())
            f.write("\n")
    return path


def resolve_feature_path(entry: ManifestEntry, base_dir: Optional[Union[str, Path]]) -> Path:
    """Relative feature paths are relative to the manifest's directory."""
    feature_path = Path(entry.feature_path)
    if feature_path.is_absolute() or base_dir is None:
        return feature_path
    return Path(base_dir) / feature_path


def _entry_violations(entry: ManifestEntry) -> List[Violation]:
    found = []

    def add(code: str, message: str):
        found.append(Violation(code=code, video_id=entry.video_id, message=message))

    if entry.frame_count < 1:
        add("frame_count", f"frame_count must be >= 1, got {entry.frame_count}")

    previous_end = None
    for start, end in entry.anomaly_intervals:
        if start >= end:
            add("interval", f"empty or reversed interval [{start}, {end})")
        if start < 0 or end > entry.frame_count:
            add("interval", f"interval [{start}, {end}) outside [0, {entry.frame_count})")
        if previous_end is not None and start < previous_end:
            add("interval", f"interval [{start}, {end}) overlaps or is out of order")
        previous_end = end

    if entry.label == VideoLabel.NORMAL and entry.anomaly_intervals:
        add("interval", "normal video carries anomaly intervals")

    if entry.split == Split.TEST:
        is_anomaly = entry.label == VideoLabel.ANOMALY
        if is_anomaly and entry.class_tag is None:
            add("class_tag", "test anomaly video has no class_tag")
        if not is_anomaly and entry.class_tag is not None:
            add("class_tag", "test normal video carries a class_tag")
        if is_anomaly and not entry.anomaly_intervals:
            add("interval", "test anomaly video has no anomaly intervals")

    return found


def validate_manifest(
    entries: List[ManifestEntry],
    deep_check: bool = False,
    base_dir: Optional[Union[str, Path]] = None,
) -> ValidationReport:
    """
    Check a manifest for weak-supervision readiness.

    The report is empty iff the train split holds at least one normal and
    one anomalous video, every entry satisfies its own invariants, video ids
    are unique and, with deep_check, every feature file decodes.

    Args:
        entries: Manifest entries in any order
        deep_check: Also decode every referenced feature file
        base_dir: Directory relative feature paths resolve against

    Returns:
        ValidationReport with violations sorted by (code, video_id, message)
    """
    violations: List[Violation] = []

    train_labels = {e.label for e in entries if e.split == Split.TRAIN}
    if VideoLabel.NORMAL not in train_labels:
        violations.append(Violation(code="precondition", message=NO_NORMAL_TRAIN))
    if VideoLabel.ANOMALY not in train_labels:
        violations.append(Violation(code="precondition", message=NO_ANOMALY_TRAIN))

    id_counts = Counter(e.video_id for e in entries)
    for video_id, count in id_counts.items():
        if count > 1:
            violations.append(
                Violation(code="duplicate_id", video_id=video_id,
                          message=f"video_id appears {count} times")
            )

    for entry in entries:
        violations.extend(_entry_violations(entry))

        if deep_check:
            path = resolve_feature_path(entry, base_dir)
            try:
                decode_feature_file(path)
            except (FeatureDecodeError, OSError) as e:
                violations.append(
                    Violation(code="feature_file", video_id=entry.video_id,
                              message=f"cannot decode {entry.feature_path}: {e}")
                )

    # Duplicate entries contribute identical per-entry violations; keep one.
    unique = {v.sort_key(): v for v in violations}
    report = ValidationReport(violations=[unique[key] for key in sorted(unique)])

    if report.ok:
        logger.info(f"Manifest with {len(entries)} entries passed validation")
    else:
        logger.warning(f"Manifest validation found {len(report.violations)} violation(s)")
    return report
