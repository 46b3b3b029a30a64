"""
Command-line interface of the turbulent field synthesis system.

Subcommands: synth, train, generate, analyze, compare, score, prepare.
Exit codes: 0 success, 2 usage or invalid argument, 3 data or format error,
4 numerical divergence.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from app.core.config_loader import load_train_config
from app.core.errors import (
    CheckpointFormatError,
    DegenerateInputError,
    DegenerateScaleError,
    EmbeddingError,
    EnsembleFormatError,
    InvalidArgumentError,
    TrainingDivergenceError,
)
from app.core.field_core import read_ensemble, write_ensemble
from app.data_processing.dataset_processor import INVALID_ARGUMENT, DatasetProcessor
from app.models.field_models import FieldMeta, OracleSpec, ScaleGrid
from app.models.stat_models import LabeledInput, ReportSpec
from app.nn.checkpoint import load_checkpoint
from app.nn.discriminators import score_segments
from app.nn.generator import generate
from app.reporting import csv_io
from app.reporting.report import analyze, compare
from app.synthesis.oracles import build_oracle
from app.training.runner import restore_generator, restore_si_discriminator, train

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Synthesize and analyse 1D fields with turbulence statistics"
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    synth = subparsers.add_parser("synth", help="Write an oracle ensemble")
    synth.add_argument("--kind", required=True, choices=["gaussian", "fbm", "mrw"])
    synth.add_argument("--H", dest="hurst", type=float, help="Hurst exponent (fbm, mrw)")
    synth.add_argument("--lambda2", type=float, default=0.0, help="Intermittency coefficient (mrw)")
    synth.add_argument("--Lc", dest="correlation_length", type=int, help="Correlation length (mrw)")
    synth.add_argument("--R", dest="realizations", type=int, required=True)
    synth.add_argument("--N", dest="samples", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", help="Output stem (default: <kind>_R<R>_N<N>_s<seed>)")

    train_parser = subparsers.add_parser("train", help="Train a generator")
    train_parser.add_argument("--data", required=True, help="Training ensemble stem")
    train_parser.add_argument("--config", required=True, help="key=value or YAML training config")
    train_parser.add_argument("--out-dir", required=True)
    train_parser.add_argument("--resume", help="Checkpoint to continue from")
    train_parser.add_argument("--seed", type=int, help="Overrides the config seed")

    gen = subparsers.add_parser("generate", help="Generate fields from a checkpoint")
    gen.add_argument("--checkpoint", required=True)
    gen.add_argument("--R", dest="realizations", type=int, required=True)
    gen.add_argument("--N", dest="samples", type=int, required=True)
    gen.add_argument("--nb", type=int, help="Border samples trimmed in total (default: preset value)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="Output stem")

    for name, help_text in (("analyze", "Report statistics of ensembles"), ("compare", "Compare two ensembles")):
        sub = subparsers.add_parser(name, help=help_text)
        if name == "analyze":
            sub.add_argument("--in", dest="inputs", nargs="+", required=True, help="Ensemble stems")
            sub.add_argument("--label", dest="labels", nargs="+", help="Display labels, one per input")
            sub.add_argument("--single-realization", type=int, help="Also write PDFs of this realization")
        else:
            sub.add_argument("--a", required=True, help="First ensemble stem")
            sub.add_argument("--b", required=True, help="Second ensemble stem")
            sub.add_argument("--label-a", default="a")
            sub.add_argument("--label-b", default="b")
        sub.add_argument("--grid-default", action="store_true", help="Use the default log-spaced grid")
        sub.add_argument("--lags", type=int, nargs="+", help="Explicit scale grid")
        sub.add_argument("--fit-min", type=float, default=17.0)
        sub.add_argument("--fit-max", type=float, default=274.0)
        sub.add_argument("--n-bins", type=int, default=100)
        sub.add_argument("--integral-scale", type=float, help="L in samples for the l/L axes")
        sub.add_argument("--seed", type=int, default=0, help="Accepted for symmetry; analysis is deterministic")
        sub.add_argument("--out-dir", required=True)

    score = subparsers.add_parser("score", help="Dump per-segment D_SI scores")
    score.add_argument("--checkpoint", required=True)
    score.add_argument("--in", dest="input", required=True, help="Ensemble stem")
    score.add_argument("--out", required=True, help="Output CSV")

    prepare = subparsers.add_parser("prepare", help="Segment raw records into ensembles")
    source = prepare.add_mutually_exclusive_group(required=True)
    source.add_argument("--record", help="Raw record (.f32, .txt, .npy)")
    source.add_argument("--dir", help="Directory of raw records")
    prepare.add_argument("--n", type=int, required=True, help="Realization length")
    prepare.add_argument("--stride", type=int, help="Offset between realizations (default: n)")
    prepare.add_argument("--no-standardize", action="store_true")
    prepare.add_argument("--out", help="Output stem (single record only)")
    prepare.add_argument("--data-dir", default="data")
    prepare.add_argument("--integral-scale", type=float)
    prepare.add_argument("--kolmogorov-scale", type=float)

    return parser


def cmd_synth(args) -> None:
    spec = OracleSpec(
        kind=args.kind,
        hurst=args.hurst,
        lambda2=args.lambda2,
        correlation_length=args.correlation_length,
        seed=args.seed,
        realizations=args.realizations,
        samples=args.samples,
    )
    ens = build_oracle(spec).generate()
    out = args.out or f"{spec.kind}_R{spec.realizations}_N{spec.samples}_s{spec.seed}"
    write_ensemble(ens, out)


def cmd_train(args) -> None:
    config = load_train_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})
    dataset = read_ensemble(args.data)
    history = train(dataset, config, args.out_dir, resume=args.resume)
    logger.info(f"Training finished after {len(history)} generator steps")


def _border_trim(checkpoint_config: dict) -> int:
    value = checkpoint_config.get("preset", {}).get("metadata", {}).get("border_trim")
    return int(value) if value is not None else 0


def _preset_meta(checkpoint_config: dict) -> FieldMeta:
    metadata = checkpoint_config.get("preset", {}).get("metadata", {})
    return FieldMeta(
        integral_scale=float(metadata["integral_scale"]) if "integral_scale" in metadata else None,
        kolmogorov_scale=float(metadata["kolmogorov_scale"]) if "kolmogorov_scale" in metadata else None,
    )


def cmd_generate(args) -> None:
    checkpoint = load_checkpoint(args.checkpoint)
    model = restore_generator(checkpoint)
    n_b = args.nb if args.nb is not None else _border_trim(checkpoint.config)
    ens = generate(model, args.realizations, args.samples, n_b, args.seed)
    write_ensemble(ens.model_copy(update={"meta": _preset_meta(checkpoint.config)}), args.out)


def _report_spec(args, inputs: List[LabeledInput], single: Optional[int] = None) -> ReportSpec:
    grid = None
    if args.lags and not args.grid_default:
        grid = ScaleGrid(lags=args.lags)
    return ReportSpec(
        inputs=inputs,
        grid=grid,
        fit_range=(args.fit_min, args.fit_max),
        n_bins=args.n_bins,
        integral_scale=args.integral_scale,
        single_realization=single,
        output_dir=Path(args.out_dir),
    )


def cmd_analyze(args) -> None:
    labels = args.labels or [Path(p).name.replace(".f32", "") for p in args.inputs]
    if len(labels) != len(args.inputs):
        raise InvalidArgumentError(f"Got {len(labels)} labels for {len(args.inputs)} inputs")
    inputs = [LabeledInput(path=Path(p), label=l) for p, l in zip(args.inputs, labels)]
    analyze(_report_spec(args, inputs, args.single_realization))


def cmd_compare(args) -> None:
    inputs = [
        LabeledInput(path=Path(args.a), label=args.label_a),
        LabeledInput(path=Path(args.b), label=args.label_b),
    ]
    report = compare(_report_spec(args, inputs))
    print(f"max |d log(F/3)| per lag: {report.max_abs_diff_logF3:.6g}")
    print(f"max |d zeta_p|: {report.max_abs_diff_zeta:.6g}")


def cmd_score(args) -> None:
    model = restore_si_discriminator(args.checkpoint)
    ens = read_ensemble(args.input)
    csv_io.write_scores(score_segments(model, ens.data), args.out)


def cmd_prepare(args) -> int:
    meta = FieldMeta(integral_scale=args.integral_scale, kolmogorov_scale=args.kolmogorov_scale)
    processor = DatasetProcessor(data_dir=args.data_dir)
    if args.record:
        result = processor.process_record(
            args.record, args.n, args.stride, not args.no_standardize, args.out, meta=meta
        )
    else:
        result = processor.process_directory(
            args.dir, args.n, args.stride, not args.no_standardize, meta=meta
        )
    for key, value in result.items():
        if key != "results":
            print(f"  {key}: {value}")
    if result["success"]:
        return EXIT_OK
    return EXIT_USAGE if result.get("error_kind") == INVALID_ARGUMENT else EXIT_DATA


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "generate": cmd_generate,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
    "score": cmd_score,
    "prepare": cmd_prepare,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    load_dotenv()
    logging.basicConfig(
        level=os.getenv("LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    try:
        code = COMMANDS[args.command](args)
        return EXIT_OK if code is None else code
    except (InvalidArgumentError, ValidationError) as e:
        logger.error(f"{args.command}: invalid argument: {e}")
        return EXIT_USAGE
    except (DegenerateInputError, DegenerateScaleError, EnsembleFormatError, CheckpointFormatError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_DATA
    except (TrainingDivergenceError, EmbeddingError) as e:
        logger.error(f"{args.command}: {e}")
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
