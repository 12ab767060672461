"""
Runs the same train/score/evaluate pipeline once per FTB mode
"""
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from egovad.core.checkpoint import save_checkpoint
from egovad.core.ftb import FtbMode
from egovad.schemas.config import ModelConfig, TrainConfig
from egovad.schemas.manifest import ManifestEntry, Split
from egovad.schemas.report import EvalReport
from egovad.services.evaluator import evaluate, write_evaluation
from egovad.services.scoring import score_entries
from egovad.services.trainer import train, write_history

logger = logging.getLogger(__name__)


def checkpoint_metadata(cfg: TrainConfig) -> Dict:
    return {"ftb_mode": cfg.ftb_mode.value, "snippet_len": cfg.snippet_len, "lowpass": cfg.lowpass}


def run_mode(
    manifest: List[ManifestEntry],
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    out_dir: Union[str, Path],
    base_dir: Optional[Union[str, Path]] = None,
) -> EvalReport:
    """Train, score the test split and evaluate for one configuration."""
    out_dir = Path(out_dir)
    result = train(manifest, model_cfg, cfg, base_dir)
    save_checkpoint(result.model, out_dir / "model.ckpt", metadata=checkpoint_metadata(cfg))
    write_history(result.history, out_dir / "history.jsonl")

    test_entries = [e for e in manifest if e.split == Split.TEST]
    scores = score_entries(result.model, test_entries, cfg.ftb_mode, cfg.snippet_len, cfg.lowpass, base_dir)
    report = evaluate(manifest, scores)
    write_evaluation(report, manifest, scores, out_dir)
    return report


def compare_modes(
    manifest: List[ManifestEntry],
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    out_dir: Union[str, Path],
    modes: Iterable[FtbMode] = tuple(FtbMode),
    base_dir: Optional[Union[str, Path]] = None,
) -> Dict[str, EvalReport]:
    """
    Evaluate every FTB mode with identical seeds and write comparison.json.

    Returns:
        {mode: EvalReport}
    """
    out_dir = Path(out_dir)
    reports = {}
    for mode in modes:
        mode = FtbMode.parse(mode)
        logger.info(f"=== FTB mode {mode.value} ===")
        mode_cfg = cfg.model_copy(update={"ftb_mode": mode})
        reports[mode.value] = run_mode(manifest, model_cfg, mode_cfg, out_dir / mode.value.lower(), base_dir)

    summary = {
        mode: {"overall_auc": r.overall_auc, "class_auc": r.class_auc}
        for mode, r in reports.items()
    }
    path = out_dir / "comparison.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(
        "Mode comparison: " + ", ".join(f"{m} {r.overall_auc:.4f}" for m, r in reports.items())
    )
    return reports
