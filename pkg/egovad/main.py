"""
Main egovad command-line entry point
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from egovad.api import commands
from egovad.core.config import settings
from egovad.core.errors import EgovadError, UsageError, ValidationFailed

logger = logging.getLogger(__name__)

EXIT_USAGE = UsageError.exit_code
EXIT_IO = 4


def configure_logging():
    """Logs go to stderr; stdout carries the resolved config and results."""
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )


def _int_list(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")


def _add_training_flags(p: argparse.ArgumentParser):
    p.add_argument("--manifest", required=True, help="Manifest JSONL")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--seed", type=int, default=0, help="Seed for initialization and bag pairing")
    p.add_argument("--ftb", default="m3", choices=["m1", "m2", "m3"], help="FTB mode")
    p.add_argument("--lowpass", type=int, default=None, help="Experimental M2 DCT cutoff (off when unset)")
    p.add_argument("--epochs", type=int, default=settings.EPOCHS, help="Training epochs")
    p.add_argument("--snippet-len", type=int, default=settings.SNIPPET_LEN, help="Frames per snippet S")
    p.add_argument("--k", type=int, default=settings.TOP_K, help="Top-k snippets per bag")
    p.add_argument("--margin", type=float, default=settings.MARGIN, help="Magnitude hinge margin")
    p.add_argument("--alpha", type=float, default=settings.ALPHA_MAG, help="Magnitude loss weight")
    p.add_argument("--beta", type=float, default=settings.BETA_SMOOTH, help="Smoothness loss weight")
    p.add_argument("--gamma", type=float, default=settings.GAMMA_SPARSE, help="Sparsity loss weight")
    p.add_argument("--lr", type=float, default=settings.LEARNING_RATE, help="Learning rate")
    p.add_argument("--momentum", type=float, default=settings.MOMENTUM, help="SGD momentum")
    p.add_argument("--optimizer", default="sgd", choices=["sgd", "adam"],
                   help="Optimizer (adam is outside the determinism guarantee)")
    p.add_argument("--dim", type=int, default=None,
                   help="Input embedding dim (read from the first training file when unset)")
    p.add_argument("--branch-dim", type=int, default=None, help="Encoder branch width (D / 4 when unset)")
    p.add_argument("--dilations", type=_int_list, default=list(settings.DILATIONS),
                   help="Comma-separated conv dilations")
    p.add_argument("--kernel-size", type=int, default=settings.KERNEL_SIZE, help="Odd conv kernel size")
    p.add_argument("--scorer-hidden", type=_int_list, default=list(settings.SCORER_HIDDEN),
                   help="Comma-separated scorer hidden widths")


def build_parser() -> argparse.ArgumentParser:
    formatter = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="egovad",
        description="Weakly-supervised ego-centric video anomaly detection toolkit",
        formatter_class=formatter,
    )
    sub = parser.add_subparsers(dest="verb", required=True, metavar="VERB")

    p = sub.add_parser("build-manifest", help="Build a train/test manifest from source lists",
                       formatter_class=formatter)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--anomalous", help="JSONL of anomalous sources")
    source.add_argument("--dota-annotations", help="Directory of DoTA annotation JSON files")
    p.add_argument("--dota-feature-dir", default="features",
                   help="Feature directory used for DoTA videos, relative to the manifest")
    p.add_argument("--normal", default=None, help="JSONL of normal sources")
    split = p.add_mutually_exclusive_group()
    split.add_argument("--test-ids", default=None, help="Text file of whitespace-separated test video ids")
    split.add_argument("--test-fraction", type=float, default=0.3,
                       help="Stable hashed fraction of anomalous videos sent to test")
    p.add_argument("--no-check-paths", action="store_true", help="Skip feature file existence checks")
    p.add_argument("--out", required=True, help="Output manifest JSONL")
    p.set_defaults(handler=commands.cmd_build_manifest)

    p = sub.add_parser("validate", help="Validate a manifest", formatter_class=formatter)
    p.add_argument("--manifest", required=True, help="Manifest JSONL")
    p.add_argument("--deep", action="store_true", help="Also decode every feature file")
    p.set_defaults(handler=commands.cmd_validate)

    p = sub.add_parser("synth", help="Generate a synthetic planted-anomaly dataset", formatter_class=formatter)
    p.add_argument("--n-normal", type=int, required=True, help="Number of normal videos")
    p.add_argument("--n-anomaly", type=int, required=True, help="Number of anomalous videos")
    p.add_argument("--frames", type=int, default=256, help="Frames per video T")
    p.add_argument("--dim", type=int, default=32, help="Embedding dimension D")
    p.add_argument("--anomaly-len", type=int, default=32, help="Planted interval length in frames")
    p.add_argument("--magnitude-boost", type=float, default=settings.MAGNITUDE_BOOST,
                   help="Norm multiplier inside the interval")
    p.add_argument("--noise-sigma", type=float, default=settings.NOISE_SIGMA, help="Per-frame noise std")
    p.add_argument("--seed", type=int, default=0, help="Generation seed")
    p.add_argument("--out", required=True, help="Output directory")
    p.set_defaults(handler=commands.cmd_synth)

    p = sub.add_parser("transform", help="Apply an FTB mode to one feature file", formatter_class=formatter)
    p.add_argument("--mode", required=True, choices=["m1", "m2", "m3"], help="FTB mode")
    p.add_argument("--input", required=True, help="Input .ftbf")
    p.add_argument("--output", required=True, help="Output .ftbf")
    p.add_argument("--lowpass", type=int, default=None, help="Experimental M2 DCT cutoff (off when unset)")
    p.set_defaults(handler=commands.cmd_transform)

    p = sub.add_parser("train", help="Train a top-k MIL detector", formatter_class=formatter)
    _add_training_flags(p)
    p.set_defaults(handler=commands.cmd_train, resolve=commands.resolve_training)

    p = sub.add_parser("score", help="Write frame-score CSVs with a checkpoint", formatter_class=formatter)
    p.add_argument("--checkpoint", required=True, help="Checkpoint file or training output directory")
    p.add_argument("--manifest", required=True, help="Manifest JSONL")
    p.add_argument("--split", default="test", choices=["test", "train", "all"], help="Videos to score")
    p.add_argument("--out", required=True, help="Output directory for <video_id>.csv files")
    p.set_defaults(handler=commands.cmd_score)

    p = sub.add_parser("evaluate", help="Frame-level overall and class-wise AUC", formatter_class=formatter)
    p.add_argument("--manifest", required=True, help="Manifest JSONL")
    p.add_argument("--scores", required=True, help="Directory of <video_id>.csv score files")
    p.add_argument("--out", required=True, help="Output directory for report.json and heatmaps")
    p.add_argument("--macro", action="store_true", help="Per-video macro average for overall AUC")
    p.add_argument("--cross-class-negatives", action="store_true",
                   help="Class-wise negatives drawn from every test video")
    p.set_defaults(handler=commands.cmd_evaluate)

    p = sub.add_parser("stats", help="Dataset statistics of a manifest", formatter_class=formatter)
    p.add_argument("--manifest", required=True, help="Manifest JSONL")
    p.set_defaults(handler=commands.cmd_stats)

    p = sub.add_parser("compare", help="Train and evaluate each FTB mode", formatter_class=formatter)
    _add_training_flags(p)
    p.add_argument("--modes", nargs="+", default=["m1", "m2", "m3"], choices=["m1", "m2", "m3"],
                   help="FTB modes to compare")
    p.set_defaults(handler=commands.cmd_compare, resolve=commands.resolve_training)

    return parser


def _resolved_config(args: argparse.Namespace) -> dict:
    """Flag values, plus the full model and training configs for verbs that build them."""
    resolve = getattr(args, "resolve", None)
    extra = resolve(args) if resolve else {}
    config = {key: value for key, value in vars(args).items() if key not in ("handler", "resolve")}
    config.update(extra)
    return config


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv, print the resolved config as one JSON line, dispatch.

    Returns:
        0 on success, 2 on usage errors, 3 on validation failures, 4 on I/O errors
    """
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    try:
        settings.validate()
        print(json.dumps(_resolved_config(args), sort_keys=True, default=str))
        return args.handler(args)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE
    except ValidationFailed as e:
        logger.error(f"{e}")
        if e.report is not None:
            for message in e.report.messages():
                print(message)
        return e.exit_code
    except EgovadError as e:
        logger.error(f"{type(e).__name__}: {e}", exc_info=settings.LOG_LEVEL == "DEBUG")
        return e.exit_code
    except ValueError as e:
        logger.error(f"Invalid argument: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"I/O error: {e}", exc_info=settings.LOG_LEVEL == "DEBUG")
        return EXIT_IO


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
