"""
Scoring service: checkpoint + manifest -> one frame-score CSV per video
"""
import logging
from pathlib import Path
from typing import List, Optional, Union

from egovad.core.checkpoint import load_checkpoint
from egovad.core.manifest import resolve_feature_path
from egovad.core.temporal_model import score_snippets
from egovad.schemas.manifest import ManifestEntry, Split
from egovad.services.evaluator import ScoreSeries, expand_scores, write_score_csv
from egovad.services.trainer import prepare_snippets

logger = logging.getLogger(__name__)


def score_entries(
    model,
    entries: List[ManifestEntry],
    ftb_mode,
    snippet_len: int,
    lowpass: Optional[int] = None,
    base_dir: Optional[Union[str, Path]] = None,
) -> List[ScoreSeries]:
    """Frame-level scores for each entry, preprocessed as in training."""
    series = []
    for entry in sorted(entries, key=lambda e: e.video_id):
        snippets = prepare_snippets(
            resolve_feature_path(entry, base_dir), ftb_mode, snippet_len, lowpass
        )
        snippet_scores = score_snippets(model, snippets)["scores"]
        frames = expand_scores(snippet_scores, snippet_len, entry.frame_count)
        series.append(ScoreSeries(video_id=entry.video_id, frame_scores=frames))
    logger.info(f"Scored {len(series)} videos")
    return series


def score_manifest(
    checkpoint_path: Union[str, Path],
    entries: List[ManifestEntry],
    out_dir: Union[str, Path],
    split: Optional[Split] = Split.TEST,
    base_dir: Optional[Union[str, Path]] = None,
) -> List[Path]:
    """
    Score a manifest split with a saved detector and write <video_id>.csv files.

    The FTB mode, snippet length and low-pass cutoff come from the
    checkpoint metadata so scoring matches training preprocessing.
    """
    model, metadata = load_checkpoint(checkpoint_path)
    selected = [e for e in entries if split is None or e.split == split]
    series = score_entries(
        model,
        selected,
        ftb_mode=metadata["ftb_mode"],
        snippet_len=metadata["snippet_len"],
        lowpass=metadata.get("lowpass"),
        base_dir=base_dir,
    )
    out_dir = Path(out_dir)
    return [write_score_csv(s, out_dir / f"{s.video_id}.csv") for s in series]
