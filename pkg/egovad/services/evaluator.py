"""
Frame-level ROC-AUC evaluation under the DoTA test protocol
"""
import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Union

import numpy as np
from scipy.stats import rankdata

from egovad.core.errors import EvaluationError, ShapeError, UndefinedMetricError
from egovad.schemas.manifest import ManifestEntry, Split
from egovad.schemas.report import EvalReport

logger = logging.getLogger(__name__)


@dataclass
class ScoreSeries:
    video_id: str
    frame_scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.frame_scores, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(scores)) or np.any(scores < 0) or np.any(scores > 1):
            raise EvaluationError(f"{self.video_id}: frame scores must be finite and in [0, 1]")
        self.frame_scores = scores


def expand_scores(snippet_scores, S: int, frame_count: int) -> np.ndarray:
    """Frame f takes the score of snippet floor(f / S)."""
    scores = np.asarray(snippet_scores, dtype=np.float64).reshape(-1)
    expected = math.ceil(frame_count / S)
    if scores.size != expected:
        raise ShapeError(
            f"{scores.size} snippet scores cannot cover {frame_count} frames "
            f"at S={S} (expected {expected})"
        )
    return np.repeat(scores, S)[:frame_count]


def roc_auc(scores, labels) -> float:
    """
    Probability that a random positive outscores a random negative, ties
    counted as one half, computed from midranks (Mann-Whitney U).
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1).astype(bool)
    if scores.size != labels.size:
        raise ShapeError(f"{scores.size} scores vs {labels.size} labels")

    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"ROC-AUC needs both classes, got {n_pos} positive and {n_neg} negative frames"
        )

    ranks = rankdata(scores, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def frame_labels(entry: ManifestEntry) -> np.ndarray:
    """Frame is positive iff it falls inside any anomaly interval."""
    labels = np.zeros(entry.frame_count, dtype=np.int8)
    for start, end in entry.anomaly_intervals:
        labels[start:end] = 1
    return labels


def _collect(entries: List[ManifestEntry], scores: List[ScoreSeries]):
    by_id = {s.video_id: s for s in scores}
    frames = {}
    for entry in sorted(entries, key=lambda e: e.video_id):
        series = by_id.get(entry.video_id)
        if series is None:
            raise EvaluationError(f"no scores for test video {entry.video_id}")
        if series.frame_scores.size != entry.frame_count:
            raise EvaluationError(
                f"video {entry.video_id}: {series.frame_scores.size} scores "
                f"for {entry.frame_count} frames"
            )
        frames[entry.video_id] = (entry, series.frame_scores, frame_labels(entry))
    return frames


def evaluate(
    entries: List[ManifestEntry],
    scores: List[ScoreSeries],
    macro: bool = False,
    cross_class_negatives: bool = False,
) -> EvalReport:
    """
    Overall and class-wise frame-level AUC over the test split.

    Args:
        entries: Manifest entries; only the test split is evaluated
        scores: One ScoreSeries per test video
        macro: Overall AUC as the mean of per-video AUCs instead of the
            micro-average over concatenated frames
        cross_class_negatives: Class c negatives are every negative frame of
            every test video instead of only class-c videos' own normal frames

    Returns:
        EvalReport; classes lacking positives or negatives are omitted
    """
    test_entries = [e for e in entries if e.split == Split.TEST]
    if not test_entries:
        raise EvaluationError("manifest has no test videos")
    frames = _collect(test_entries, scores)

    all_scores = np.concatenate([s for _, s, _ in frames.values()])
    all_labels = np.concatenate([l for _, _, l in frames.values()])

    if macro:
        per_video = [
            roc_auc(s, l) for _, s, l in frames.values() if 0 < l.sum() < l.size
        ]
        if not per_video:
            raise UndefinedMetricError("no test video has both positive and negative frames")
        overall = float(np.mean(per_video))
    else:
        overall = roc_auc(all_scores, all_labels)

    frames_evaluated = {"total": int(all_labels.size)}
    class_auc: Dict[str, float] = {}
    tags = sorted({e.class_tag.value for e, _, _ in frames.values() if e.class_tag is not None})
    for tag in tags:
        members = [(s, l) for e, s, l in frames.values() if e.class_tag is not None and e.class_tag.value == tag]
        class_scores = np.concatenate([s for s, _ in members])
        class_labels = np.concatenate([l for _, l in members])
        if cross_class_negatives:
            positive = class_labels == 1
            class_scores = np.concatenate([class_scores[positive], all_scores[all_labels == 0]])
            class_labels = np.concatenate([class_labels[positive], np.zeros(int((all_labels == 0).sum()), dtype=np.int8)])

        n_pos = int(class_labels.sum())
        if n_pos == 0 or n_pos == class_labels.size:
            logger.info(f"Class {tag} omitted: needs both positive and negative frames")
            continue
        class_auc[tag] = roc_auc(class_scores, class_labels)
        frames_evaluated[tag] = int(class_labels.size)

    report = EvalReport(
        overall_auc=overall,
        class_auc=class_auc,
        frames_evaluated=frames_evaluated,
        averaging="macro" if macro else "micro",
    )
    logger.info(f"Evaluated {len(frames)} test videos: overall AUC {overall:.4f}")
    return report


def write_report(report: EvalReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True)
    path.write_text(payload + "\n", encoding="utf-8")
    return path


def write_score_csv(series: ScoreSeries, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["frame_index", "score"])
        for i, score in enumerate(series.frame_scores):
            writer.writerow([i, repr(float(score))])
    return path


def load_score_csv(path: Union[str, Path], video_id: str = None) -> ScoreSeries:
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = {"frame_index", "score"} - set(reader.fieldnames or [])
        if missing:
            raise EvaluationError(f"{path}: missing column(s) {sorted(missing)}")
        rows = list(reader)
    try:
        indices = [int(row["frame_index"]) for row in rows]
        scores = np.array([float(row["score"]) for row in rows])
    except (TypeError, ValueError) as e:
        raise EvaluationError(f"{path}: unreadable score row: {e}") from e
    if indices != list(range(len(rows))):
        raise EvaluationError(f"{path}: frame_index column must run 0..{len(rows) - 1}")
    return ScoreSeries(video_id=video_id or path.stem, frame_scores=scores)


def load_score_dir(directory: Union[str, Path]) -> List[ScoreSeries]:
    """Every <video_id>.csv in a directory."""
    return [load_score_csv(p) for p in sorted(Path(directory).glob("*.csv"))]


def write_heatmap_csv(series: ScoreSeries, entry: ManifestEntry, path: Union[str, Path]) -> Path:
    """Rows of (frame_index, score, ground_truth_label) for external plotting."""
    labels = frame_labels(entry)
    if labels.size != series.frame_scores.size:
        raise EvaluationError(f"video {entry.video_id}: heatmap length mismatch")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["frame_index", "score", "ground_truth_label"])
        for i, (score, label) in enumerate(zip(series.frame_scores, labels)):
            writer.writerow([i, repr(float(score)), int(label)])
    return path


def write_evaluation(
    report: EvalReport,
    entries: List[ManifestEntry],
    scores: List[ScoreSeries],
    out_dir: Union[str, Path],
) -> Path:
    """Write report.json plus one heatmap CSV per test video."""
    out_dir = Path(out_dir)
    by_id = {s.video_id: s for s in scores}
    for entry in entries:
        if entry.split == Split.TEST and entry.video_id in by_id:
            write_heatmap_csv(by_id[entry.video_id], entry, out_dir / "heatmaps" / f"{entry.video_id}.csv")
    report_path = write_report(report, out_dir / "report.json")
    logger.info(f"Wrote evaluation report {report_path}")
    return report_path
