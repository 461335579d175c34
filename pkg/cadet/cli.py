"""
cadet command-line interface.

Usage:
    cadet gen --config configs/default.cfg --seed 20240101 --out data/
    cadet split --data data/dataset.csv --seed 20240101 --out data/
    cadet train --data data/train.csv --seed 20240101 --out model/
    cadet calibrate --model model/model.txt --data data/calib.csv --out model/
    cadet evaluate --model model/model.txt --data data/test.csv --seed 20240101 --out report/
    cadet evaluate --confusion counts.csv
    cadet score --model model/model.txt --data new.csv --out scored/
    cadet pipeline --config configs/default.cfg --seed 20240101 --out run1/

Exit codes:
    0 - success
    1 - usage error
    2 - data, model, config or file error
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Callable, Dict, List, NoReturn, Optional, Sequence, Tuple

import pandas as pd

from cadet import __version__
from cadet.errors import CadetError, CadetIOError, ParseError, UsageError
from cadet.data.csvio import load_csv, write_frame, write_text
from cadet.svm.kernels import KernelKind, KernelSpec
from cadet.svm.model import ClassWeighting, TrainConfig
from cadet.svm.modelfile import load_svm_model
from cadet.detector.persist import load_model
from cadet.detector.scoring import score_dataset
from cadet.baseline.parser import load_rules, load_shipped_rules
from cadet.evaluation.metrics import DEFAULT_TARGETS, metrics
from cadet.evaluation.report import confusion_frame, format_summary
from cadet.evaluation.types import ConfusionMatrix, EvalReport
from cadet.synth.config import GenConfig, load_gen_config
from cadet.synth.schema import DEFAULT_SCHEMA
from cadet.pipeline import (
    DEFAULT_FRACTIONS,
    EvalConfig,
    PipelineRunner,
    RunManifest,
    prepare_out_dir,
    stage_calibrate,
    stage_evaluate,
    stage_generate,
    stage_score,
    stage_split,
    stage_train,
)


class CadetArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as UsageError (exit 1)."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _real(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}") from None


def _specificity(text: str) -> float:
    value = _real(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"target specificity must be in (0, 1), got {text}")
    return value


def _flip_fraction(text: str) -> float:
    value = _real(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"flip fraction must be in (0, 1], got {text}")
    return value


def _fractions(text: str) -> List[float]:
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated reals, got {text!r}") from None
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected three fractions, got {len(values)}")
    return values


def build_parser() -> CadetArgumentParser:
    parser = CadetArgumentParser(
        prog="cadet",
        description="Conditional anomaly detection for patient-management decisions",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exit codes:
    0 - success
    1 - usage error
    2 - data, model, config or file error
        """,
    )
    parser.add_argument(
        "--verbose", "-v",
        action="count",
        default=0,
        help="Log progress to stderr (-v info, -vv debug)",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    threads = CadetArgumentParser(add_help=False)
    threads.add_argument(
        "--threads",
        type=_positive_int,
        default=1,
        help="Worker threads for scoring and generation; never changes outputs (default: 1)",
    )

    sub = parser.add_subparsers(dest="command", metavar="<command>", parser_class=CadetArgumentParser)
    sub.required = True

    gen = sub.add_parser("gen", parents=[threads], help="Generate a synthetic cohort")
    gen.add_argument("--config", default=None, help="Generator config file (default: built-in defaults)")
    gen.add_argument("--seed", type=_seed, required=True, help="Random seed (overrides the config)")
    gen.add_argument("--out", required=True, help="Output directory")

    split = sub.add_parser("split", help="Split a dataset by patient into train/calib/test")
    split.add_argument("--data", required=True, help="Dataset CSV")
    split.add_argument("--seed", type=_seed, required=True, help="Random seed")
    split.add_argument(
        "--fractions", type=_fractions, default=list(DEFAULT_FRACTIONS),
        help="train,calib,test fractions (default: 0.6,0.2,0.2)",
    )
    split.add_argument("--out", required=True, help="Output directory")

    tr = sub.add_parser("train", help="Train the SVM")
    tr.add_argument("--data", required=True, help="Training CSV")
    tr.add_argument("--seed", type=_seed, required=True, help="Seed for majority subsampling")
    _add_train_flags(tr)
    tr.add_argument("--out", required=True, help="Output directory")

    cal = sub.add_parser("calibrate", parents=[threads], help="Calibrate the alert threshold")
    cal.add_argument("--model", required=True, help="Model file from train")
    cal.add_argument("--data", required=True, help="Held-out calibration CSV")
    cal.add_argument(
        "--target-specificity", type=_specificity, default=0.94,
        help="Target specificity on the calibration set (default: 0.94)",
    )
    cal.add_argument("--out", required=True, help="Output directory")

    ev = sub.add_parser("evaluate", parents=[threads], help="Evaluate against flip-injected ground truth")
    ev.add_argument("--model", help="Calibrated model file")
    ev.add_argument("--data", help="Test CSV")
    ev.add_argument("--seed", type=_seed, help="Seed for flip selection")
    ev.add_argument("--flip-fraction", type=_flip_fraction, default=0.05, help="Fraction of decisions to invert (default: 0.05)")
    ev.add_argument("--rules", default=None, help="Baseline rule file (default: built-in HIT screening rules)")
    ev.add_argument("--calib", default=None, help="Calibration CSV for the operating-point sweep")
    ev.add_argument("--confusion", default=None, help="Only print metrics for tp,fp,tn,fn counts in this CSV")
    ev.add_argument("--out", default=None, help="Output directory")

    sc = sub.add_parser("score", parents=[threads], help="Score a dataset with a calibrated model")
    sc.add_argument("--model", required=True, help="Calibrated model file")
    sc.add_argument("--data", required=True, help="CSV to score")
    sc.add_argument("--out", required=True, help="Output directory")

    pl = sub.add_parser("pipeline", parents=[threads], help="Run the full experiment")
    pl.add_argument("--config", default=None, help="Generator config file (default: built-in defaults)")
    pl.add_argument("--seed", type=_seed, required=True, help="Seed for every stochastic step")
    _add_train_flags(pl)
    pl.add_argument("--target-specificity", type=_specificity, default=0.94, help="(default: 0.94)")
    pl.add_argument("--flip-fraction", type=_flip_fraction, default=0.05, help="(default: 0.05)")
    pl.add_argument("--rules", default=None, help="Baseline rule file (default: built-in)")
    pl.add_argument("--out", required=True, help="Output directory")
    return parser


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--kernel", choices=[k.value for k in KernelKind], default="linear",
        help="Kernel (default: linear)",
    )
    parser.add_argument("--gamma", type=float, default=None, help="RBF gamma (default: 1/number of features)")
    parser.add_argument("--c", type=float, default=1.0, help="Soft-margin cost (default: 1.0)")
    parser.add_argument(
        "--balanced", type=_bool, default=True,
        help="Scale the minority-class cost by the class ratio (default: true)",
    )
    parser.add_argument("--tol", type=float, default=1e-3, help="KKT tolerance (default: 1e-3)")
    parser.add_argument("--max-train", type=_positive_int, default=5000, help="Training size cap (default: 5000)")
    parser.add_argument("--max-passes", type=_positive_int, default=None, help="Cap on SMO sweeps of N pair updates each (default: 10 x training size N)")


def _kernel(args: argparse.Namespace, feature_count: int) -> KernelSpec:
    if args.kernel == KernelKind.RBF.value:
        if args.gamma is None:
            return KernelSpec.default_rbf(feature_count)
        return KernelSpec.rbf(args.gamma)
    if args.gamma is not None:
        raise UsageError("--gamma only applies to --kernel rbf")
    return KernelSpec.linear()


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        c=args.c,
        class_weighting=ClassWeighting.BALANCED if args.balanced else ClassWeighting.NONE,
        tol=args.tol,
        max_passes=args.max_passes,
        seed=args.seed,
        max_train=args.max_train,
    )


def _gen_config(path: Optional[str], seed: int) -> GenConfig:
    config = load_gen_config(path) if path else GenConfig()
    return config.with_seed(seed)


# ---------- commands ----------


def cmd_gen(args: argparse.Namespace) -> int:
    out = prepare_out_dir(args.out)
    manifest = RunManifest("gen", seed=args.seed)
    if args.config:
        manifest.input("config", args.config)
    stage_generate(_gen_config(args.config, args.seed), out, manifest, threads=args.threads)
    manifest.write(out)
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    dataset = load_csv(args.data)
    out = prepare_out_dir(args.out)
    manifest = RunManifest("split", seed=args.seed)
    manifest.input("data", args.data)
    stage_split(dataset, args.fractions, args.seed, out, manifest)
    manifest.write(out)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    dataset = load_csv(args.data)
    kernel = _kernel(args, dataset.schema.count)
    config = _train_config(args)
    out = prepare_out_dir(args.out)
    manifest = RunManifest("train", seed=args.seed)
    manifest.input("data", args.data)
    stage_train(dataset, kernel, config, out, manifest)
    manifest.write(out)
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    model = load_svm_model(args.model)
    dataset = load_csv(args.data, schema=model.schema)
    out = prepare_out_dir(args.out)
    manifest = RunManifest("calibrate")
    manifest.input("model", args.model)
    manifest.input("data", args.data)
    stage_calibrate(model, dataset, args.target_specificity, out, manifest, threads=args.threads)
    manifest.write(out)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    if args.confusion:
        return _evaluate_confusion(args)
    missing = [flag for flag, value in (("--model", args.model), ("--data", args.data),
                                        ("--seed", args.seed), ("--out", args.out)) if value is None]
    if missing:
        raise UsageError(f"evaluate: missing {', '.join(missing)} (or use --confusion)")

    model, threshold = load_model(args.model)
    test_set = load_csv(args.data, schema=model.schema)
    rules = load_rules(args.rules, model.schema) if args.rules else load_shipped_rules(model.schema)
    calib_scores = None
    out = prepare_out_dir(args.out)
    manifest = RunManifest("evaluate", seed=args.seed)
    manifest.input("model", args.model)
    manifest.input("data", args.data)
    manifest.input("rules", args.rules or "builtin:hit_screening")
    if args.calib:
        calib_set = load_csv(args.calib, schema=model.schema)
        calib_scores = score_dataset(model, calib_set, threads=args.threads)
        manifest.input("calib", args.calib)
    outcome = stage_evaluate(
        model, threshold, test_set, rules,
        EvalConfig(flip_fraction=args.flip_fraction, target_specificity=threshold.target_specificity),
        args.seed, out, manifest, calibration_scores=calib_scores, threads=args.threads,
    )
    manifest.write(out)
    sys.stdout.write(outcome.summary)
    return 0


def _evaluate_confusion(args: argparse.Namespace) -> int:
    reports = [
        EvalReport(detector=name, items_digest="", n_items=cm.total, confusion=cm, metrics=metrics(cm))
        for name, cm in read_confusion_csv(args.confusion)
    ]
    summary = format_summary(reports)
    if args.out:
        out = prepare_out_dir(args.out)
        write_text(summary, out / "summary.txt")
        write_frame(confusion_frame(reports), out / "confusion.csv")
        manifest = RunManifest("evaluate")
        manifest.input("confusion", args.confusion)
        manifest.output("summary.txt")
        manifest.output("confusion.csv")
        manifest.write(out)
    sys.stdout.write(summary)
    return 0


def read_confusion_csv(path: str) -> List[Tuple[str, ConfusionMatrix]]:
    """
    (name, ConfusionMatrix) per row of a CSV with tp and fp columns and
    optional tn, fn and detector columns.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except OSError as e:
        raise CadetIOError(f"cannot read: {e}", path=path) from e
    except pd.errors.EmptyDataError:
        raise ParseError("empty confusion file", path=path) from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise ParseError(f"malformed confusion file: {e}", path=path) from e
    for column in ("tp", "fp"):
        if column not in frame.columns:
            raise ParseError(f"missing column: {column}", path=path)
    rows = []
    for number, record in enumerate(frame.to_dict("records"), start=1):
        counts: Dict[str, int] = {}
        for column in ("tp", "fp", "tn", "fn"):
            cell = str(record.get(column, "0") or "0").strip()
            try:
                counts[column] = int(cell)
            except ValueError:
                raise ParseError(f"{column}: not an integer: {cell!r}", path=path, row=number) from None
            if counts[column] < 0:
                raise ParseError(f"{column}: negative count", path=path, row=number)
        name = str(record.get("detector", "") or f"row{number}")
        rows.append((name, ConfusionMatrix(**counts)))
    return rows


def cmd_score(args: argparse.Namespace) -> int:
    model, threshold = load_model(args.model)
    dataset = load_csv(args.data, schema=model.schema)
    out = prepare_out_dir(args.out)
    manifest = RunManifest("score")
    manifest.input("model", args.model)
    manifest.input("data", args.data)
    stage_score(model, threshold, dataset, out, manifest, threads=args.threads)
    manifest.write(out)
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = _gen_config(args.config, args.seed)
    if args.rules:
        # fail before generating anything
        load_rules(args.rules, DEFAULT_SCHEMA)
    runner = PipelineRunner(
        kernel=_kernel(args, DEFAULT_SCHEMA.count),
        train_config=_train_config(args),
        eval_config=EvalConfig(
            flip_fraction=args.flip_fraction,
            target_specificity=args.target_specificity,
            operating_targets=DEFAULT_TARGETS,
        ),
        threads=args.threads,
        rules_path=args.rules,
    )
    result = runner.run(config, args.out, config_path=args.config)
    sys.stdout.write(result.evaluation.summary)
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "gen": cmd_gen,
    "split": cmd_split,
    "train": cmd_train,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "score": cmd_score,
    "pipeline": cmd_pipeline,
}


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point for the CLI.

    Returns:
        Exit code: 0 on success, 1 on usage error, 2 on data error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)

    configure_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except CadetError as e:
        print(f"cadet: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"cadet: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
