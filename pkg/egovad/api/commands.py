"""
Command handlers for the egovad CLI verbs.

Each handler takes the parsed argparse namespace and returns an exit code;
errors propagate as EgovadError subclasses and are mapped by egovad.main.
"""
import json
import logging
from pathlib import Path

from egovad.core.checkpoint import save_checkpoint
from egovad.core.errors import ValidationFailed
from egovad.core.features import FeatureSequence, decode_feature_file, encode_feature_file
from egovad.core.ftb import apply_ftb
from egovad.core.manifest import load_manifest, resolve_feature_path, validate_manifest, write_manifest
from egovad.schemas.config import ModelConfig, SynthConfig, TrainConfig
from egovad.schemas.manifest import Split
from egovad.services.comparison import checkpoint_metadata, compare_modes
from egovad.services.dataset_builder import (
    ExplicitSplitRule,
    FractionSplitRule,
    build_manifest,
    dataset_stats,
    generate_synthetic_dataset,
    load_dota_annotations,
    load_sources,
)
from egovad.services.evaluator import evaluate, load_score_dir, write_evaluation
from egovad.services.scoring import score_manifest
from egovad.services.trainer import train, write_history

logger = logging.getLogger(__name__)


def _emit(payload) -> None:
    print(json.dumps(payload, sort_keys=True))


def _print_report(report) -> None:
    for message in report.messages():
        print(message)


def _manifest_dir(path) -> Path:
    return Path(path).resolve().parent


def _model_config(args, entries, base_dir) -> ModelConfig:
    input_dim = args.dim
    if input_dim is None:
        first = next((e for e in entries if e.split == Split.TRAIN), None)
        if first is None:
            raise ValidationFailed("manifest has no training videos", report=validate_manifest(entries))
        input_dim = decode_feature_file(resolve_feature_path(first, base_dir)).D
    return ModelConfig(
        input_dim=input_dim,
        branch_dim=args.branch_dim,
        dilations=args.dilations,
        kernel_size=args.kernel_size,
        scorer_hidden=args.scorer_hidden,
        seed=args.seed,
    )


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        k=args.k,
        margin=args.margin,
        alpha_mag=args.alpha,
        beta_smooth=args.beta,
        gamma_sparse=args.gamma,
        learning_rate=args.lr,
        momentum=args.momentum,
        optimizer=args.optimizer,
        epochs=args.epochs,
        snippet_len=args.snippet_len,
        seed=args.seed,
        ftb_mode=args.ftb,
        lowpass=args.lowpass,
    )


def resolve_training(args) -> dict:
    """Fill in an inferred --dim and return the configs train/compare will run with."""
    entries = load_manifest(args.manifest)
    model_cfg = _model_config(args, entries, _manifest_dir(args.manifest))
    args.dim = model_cfg.input_dim
    return {
        "model_config": model_cfg.model_dump(mode="json"),
        "train_config": _train_config(args).model_dump(mode="json"),
    }


def cmd_build_manifest(args) -> int:
    out = Path(args.out)
    if args.dota_annotations:
        anomalous = load_dota_annotations(args.dota_annotations, args.dota_feature_dir)
    else:
        anomalous = load_sources(args.anomalous)
    normal = load_sources(args.normal, normal=True) if args.normal else []

    if args.test_ids:
        ids = Path(args.test_ids).read_text(encoding="utf-8").split()
        rule = ExplicitSplitRule(ids)
    else:
        rule = FractionSplitRule(args.test_fraction)

    entries = build_manifest(
        anomalous, normal, rule,
        base_dir=out.resolve().parent,
        check_paths=not args.no_check_paths,
    )
    write_manifest(entries, out)
    _emit({"manifest": str(out), "entries": len(entries)})
    return 0


def cmd_validate(args) -> int:
    entries = load_manifest(args.manifest)
    report = validate_manifest(entries, deep_check=args.deep, base_dir=_manifest_dir(args.manifest))
    _print_report(report)
    _emit({"ok": report.ok, "violations": len(report.violations)})
    return 0 if report.ok else ValidationFailed.exit_code


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_normal=args.n_normal,
        n_anomaly=args.n_anomaly,
        T=args.frames,
        D=args.dim,
        anomaly_len=args.anomaly_len,
        magnitude_boost=args.magnitude_boost,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    manifest_path = generate_synthetic_dataset(cfg, args.out)
    report = validate_manifest(load_manifest(manifest_path))
    _print_report(report)
    _emit({"manifest": str(manifest_path), "ok": report.ok})
    return 0 if report.ok else ValidationFailed.exit_code


def cmd_transform(args) -> int:
    seq = decode_feature_file(args.input)
    transformed = apply_ftb(seq, args.mode, lowpass=args.lowpass)
    encode_feature_file(FeatureSequence(transformed.data), args.output)
    _emit({"output": str(args.output), "T": seq.T, "D": seq.D, "mode": transformed.mode.value})
    return 0


def cmd_train(args) -> int:
    entries = load_manifest(args.manifest)
    base_dir = _manifest_dir(args.manifest)
    model_cfg = _model_config(args, entries, base_dir)
    cfg = _train_config(args)

    result = train(entries, model_cfg, cfg, base_dir)
    out = Path(args.out)
    save_checkpoint(result.model, out / "model.ckpt", metadata=checkpoint_metadata(cfg))
    write_history(result.history, out / "history.jsonl")
    _emit({"checkpoint": str(out / "model.ckpt"), "final_loss": result.history[-1]["mean_total"]})
    return 0


def cmd_score(args) -> int:
    entries = load_manifest(args.manifest)
    checkpoint = Path(args.checkpoint)
    if checkpoint.is_dir():
        checkpoint = checkpoint / "model.ckpt"
    split = None if args.split == "all" else Split(args.split)
    paths = score_manifest(checkpoint, entries, args.out, split=split, base_dir=_manifest_dir(args.manifest))
    _emit({"scores": str(args.out), "videos": len(paths)})
    return 0


def cmd_evaluate(args) -> int:
    entries = load_manifest(args.manifest)
    scores = load_score_dir(args.scores)
    report = evaluate(entries, scores, macro=args.macro, cross_class_negatives=args.cross_class_negatives)
    write_evaluation(report, entries, scores, args.out)
    _emit(report.model_dump(mode="json"))
    return 0


def cmd_stats(args) -> int:
    entries = load_manifest(args.manifest)
    _emit(dataset_stats(entries).model_dump(mode="json"))
    return 0


def cmd_compare(args) -> int:
    entries = load_manifest(args.manifest)
    base_dir = _manifest_dir(args.manifest)
    model_cfg = _model_config(args, entries, base_dir)
    cfg = _train_config(args)
    reports = compare_modes(entries, model_cfg, cfg, args.out, modes=args.modes, base_dir=base_dir)
    _emit({mode: report.overall_auc for mode, report in reports.items()})
    return 0
