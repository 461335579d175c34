"""
Experiment stages and the end-to-end runner.

Each stage reads its inputs, writes its artifacts into an output
directory and returns what later stages need. The CLI runs single
stages; PipelineRunner chains them:

    generate -> split -> train -> calibrate -> evaluate

Every run directory gets a manifest.txt that records the subcommand,
the resolved parameters, inputs, outputs, seed and tool version. No
wall-clock values are recorded, so repeated runs are byte-identical.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from cadet import __version__
from cadet.errors import CadetIOError, ConfigError
from cadet.data.csvio import load_csv, render_float, save_csv, write_frame, write_text
from cadet.data.model import Dataset
from cadet.data.prep import split_by_patient
from cadet.svm.kernels import KernelSpec
from cadet.svm.model import SvmModel, TrainConfig, train
from cadet.svm.modelfile import save_svm_model
from cadet.svm.solver import SolveDiagnostics
from cadet.detector.calibration import Threshold, calibrate
from cadet.detector.persist import save_model
from cadet.detector.scoring import score_dataset
from cadet.baseline.parser import DEFAULT_RULESET, load_rules, load_shipped_rules, shipped_rules_text
from cadet.baseline.rules import RuleSet, rule_detect_batch
from cadet.evaluation.injection import inject_flips, items_dataset
from cadet.evaluation.metrics import (
    DEFAULT_TARGETS,
    alerts,
    compare,
    evaluate_flags,
    operating_points,
)
from cadet.evaluation.report import format_summary, write_report
from cadet.evaluation.types import Comparison, EvalItem, EvalReport, OperatingPoint
from cadet.synth.config import GenConfig
from cadet.synth.generator import GeneratedCohort, generate

logger = logging.getLogger(__name__)

DATASET_FILE = "dataset.csv"
TRACE_FILE = "policy_trace.csv"
SPLIT_FILES = ("train.csv", "calib.csv", "test.csv")
MODEL_FILE = "model.txt"
VERDICTS_FILE = "verdicts.csv"
MANIFEST_FILE = "manifest.txt"

DEFAULT_FRACTIONS = (0.6, 0.2, 0.2)
DETECTOR_NAME = "svm"
BASELINE_NAME = "rules"


@dataclass(frozen=True)
class EvalConfig:
    """Evaluation knobs."""

    flip_fraction: float = 0.05
    target_specificity: float = 0.94
    operating_targets: Tuple[float, ...] = DEFAULT_TARGETS

    def __post_init__(self) -> None:
        if not 0.0 < self.flip_fraction <= 1.0:
            raise ConfigError(f"flip fraction must be in (0, 1], got {self.flip_fraction}")
        for target in (self.target_specificity, *self.operating_targets):
            if not 0.0 < target < 1.0:
                raise ConfigError(f"target specificity must be in (0, 1), got {target}")


@dataclass
class RunManifest:
    """
    Everything needed to repeat a run, as `key = value` lines.

    Parameters keep insertion order; outputs are file names relative to
    the run directory.
    """

    subcommand: str
    seed: Optional[int] = None
    parameters: List[Tuple[str, str]] = field(default_factory=list)
    inputs: List[Tuple[str, str]] = field(default_factory=list)
    outputs: List[str] = field(default_factory=list)
    results: List[Tuple[str, str]] = field(default_factory=list)

    def param(self, key: str, value: object) -> None:
        self.parameters.append((key, _text(value)))

    def input(self, key: str, path: Union[str, Path]) -> None:
        self.inputs.append((key, str(path)))

    def output(self, name: str) -> None:
        if name not in self.outputs:
            self.outputs.append(name)

    def result(self, key: str, value: object) -> None:
        self.results.append((key, _text(value)))

    def to_text(self) -> str:
        lines = [
            f"tool = cadet {__version__}",
            f"subcommand = {self.subcommand}",
            f"seed = {self.seed if self.seed is not None else 'none'}",
        ]
        lines += [f"param.{k} = {v}" for k, v in self.parameters]
        lines += [f"input.{k} = {v}" for k, v in self.inputs]
        lines += [f"output = {name}" for name in self.outputs]
        lines += [f"result.{k} = {v}" for k, v in self.results]
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / MANIFEST_FILE
        self.output(MANIFEST_FILE)
        write_text(self.to_text(), path)
        return path


def file_digest(path: Union[str, Path]) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _text(value: object) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, float):
        return render_float(value)
    if isinstance(value, (tuple, list)):
        return ",".join(_text(v) for v in value)
    return str(value)


def prepare_out_dir(out_dir: Union[str, Path]) -> Path:
    path = Path(out_dir)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CadetIOError(f"cannot create output directory: {e}", path=str(path)) from e
    return path


# ---------- stages ----------


def stage_generate(
    config: GenConfig, out_dir: Path, manifest: RunManifest, threads: int = 1
) -> GeneratedCohort:
    cohort = generate(config, threads=threads)
    save_csv(cohort.dataset, out_dir / DATASET_FILE)
    write_frame(cohort.trace, out_dir / TRACE_FILE)
    for key, value in asdict(config).items():
        manifest.param(f"gen.{key}", value)
    manifest.output(DATASET_FILE)
    manifest.output(TRACE_FILE)
    manifest.result("gen.states", len(cohort.dataset))
    manifest.result("gen.orders", cohort.dataset.class_counts()[1])
    manifest.result("gen.hit_patients", cohort.hit_patients)
    return cohort


def stage_split(
    dataset: Dataset,
    fractions: Sequence[float],
    seed: int,
    out_dir: Path,
    manifest: RunManifest,
) -> Tuple[Dataset, Dataset, Dataset]:
    parts = split_by_patient(dataset, fractions, seed)
    manifest.param("split.fractions", tuple(float(f) for f in fractions))
    for name, part in zip(SPLIT_FILES, parts):
        save_csv(part, out_dir / name)
        manifest.output(name)
        manifest.result(f"split.{name[:-4]}_rows", len(part))
    return parts


def stage_train(
    train_set: Dataset,
    kernel: KernelSpec,
    config: TrainConfig,
    out_dir: Path,
    manifest: RunManifest,
    write: bool = True,
) -> Tuple[SvmModel, SolveDiagnostics]:
    model, diagnostics = train(train_set, kernel, config)
    manifest.param("train.kernel", kernel.describe())
    manifest.param("train.c", config.c)
    manifest.param("train.class_weighting", config.class_weighting)
    manifest.param("train.tol", config.tol)
    manifest.param("train.max_train", config.max_train)
    manifest.param("train.max_passes", config.max_passes if config.max_passes else "auto")
    manifest.result("model.support_vectors", model.support_count)
    manifest.result("model.passes", diagnostics.passes)
    manifest.result("model.converged", str(diagnostics.converged).lower())
    manifest.result("model.max_kkt_violation", diagnostics.max_kkt_violation)
    manifest.result("model.dual_objective", diagnostics.dual_objective)
    if write:
        save_svm_model(model, out_dir / MODEL_FILE)
        manifest.output(MODEL_FILE)
    return model, diagnostics


def stage_calibrate(
    model: SvmModel,
    calib_set: Dataset,
    target_specificity: float,
    out_dir: Path,
    manifest: RunManifest,
    threads: int = 1,
) -> Tuple[Threshold, np.ndarray]:
    scores = score_dataset(model, calib_set, threads=threads)
    threshold = calibrate(scores, target_specificity)
    save_model(model, threshold, out_dir / MODEL_FILE)
    manifest.param("calibrate.target_specificity", target_specificity)
    manifest.output(MODEL_FILE)
    manifest.result("threshold.value", threshold.value)
    manifest.result("threshold.calibration_size", threshold.calibration_size)
    return threshold, scores


@dataclass(frozen=True)
class EvaluationOutcome:
    items: Tuple[EvalItem, ...]
    scores: np.ndarray
    detector: EvalReport
    baseline: EvalReport
    comparison: Comparison
    points: Tuple[OperatingPoint, ...]
    summary: str


def stage_evaluate(
    model: SvmModel,
    threshold: Threshold,
    test_set: Dataset,
    rules: RuleSet,
    config: EvalConfig,
    seed: int,
    out_dir: Path,
    manifest: RunManifest,
    calibration_scores: Optional[np.ndarray] = None,
    threads: int = 1,
) -> EvaluationOutcome:
    items = inject_flips(test_set, config.flip_fraction, seed)
    flipped = items_dataset(test_set, items)
    scores = score_dataset(model, flipped, threads=threads)

    detector = evaluate_flags(
        DETECTOR_NAME, items, scores < threshold.value, scores=scores,
        threshold=threshold.value,
    )
    baseline = evaluate_flags(BASELINE_NAME, items, rule_detect_batch(rules, flipped.examples))
    comparison = compare(detector, baseline)

    points: List[OperatingPoint] = []
    if calibration_scores is not None:
        points = operating_points(
            calibration_scores, scores, [i.expected_anomaly for i in items],
            config.operating_targets,
        )
    flagged = alerts(items, scores, threshold.value, calibration_scores)
    written = write_report(out_dir, [detector, baseline], comparison, points, flagged)
    summary = format_summary([detector, baseline], comparison, points)

    manifest.param("evaluate.flip_fraction", config.flip_fraction)
    if points:
        manifest.param("evaluate.operating_targets", config.operating_targets)
    for path in written:
        manifest.output(path.name)
    manifest.result("evaluate.items", len(items))
    manifest.result("evaluate.items_digest", detector.items_digest)
    if detector.roc is not None:
        manifest.result("evaluate.auc", detector.roc.auc)
    logger.info("evaluation written to %s", out_dir)
    return EvaluationOutcome(
        items=tuple(items),
        scores=scores,
        detector=detector,
        baseline=baseline,
        comparison=comparison,
        points=tuple(points),
        summary=summary,
    )


def stage_score(
    model: SvmModel,
    threshold: Threshold,
    dataset: Dataset,
    out_dir: Path,
    manifest: RunManifest,
    threads: int = 1,
) -> pd.DataFrame:
    """Per-row scores and verdicts for an arbitrary dataset."""
    scores = score_dataset(model, dataset, threads=threads)
    frame = pd.DataFrame(
        {
            "patient_id": dataset.patient_ids,
            "state_index": [ex.state.state_index for ex in dataset.examples],
            "decision": dataset.decisions.tolist(),
            "score": [render_float(v) for v in scores.tolist()],
            "is_anomaly": (scores < threshold.value).astype(int).tolist(),
        },
        columns=["patient_id", "state_index", "decision", "score", "is_anomaly"],
    )
    write_frame(frame, out_dir / VERDICTS_FILE)
    manifest.output(VERDICTS_FILE)
    manifest.result("score.rows", len(dataset))
    manifest.result("score.anomalies", int(np.count_nonzero(scores < threshold.value)))
    return frame


# ---------- end to end ----------


@dataclass(frozen=True)
class PipelineResult:
    cohort: GeneratedCohort
    model: SvmModel
    diagnostics: SolveDiagnostics
    threshold: Threshold
    evaluation: EvaluationOutcome
    manifest: RunManifest


class PipelineRunner:
    """
    Runs the full experiment into one directory.

    Usage:
        runner = PipelineRunner()
        result = runner.run(GenConfig(seed=20240101), "run1/")
        print(result.evaluation.summary)
    """

    def __init__(
        self,
        kernel: Optional[KernelSpec] = None,
        train_config: Optional[TrainConfig] = None,
        eval_config: EvalConfig = EvalConfig(),
        fractions: Sequence[float] = DEFAULT_FRACTIONS,
        rules: Optional[RuleSet] = None,
        threads: int = 1,
        rules_path: Optional[Union[str, Path]] = None,
    ):
        self.kernel = kernel if kernel is not None else KernelSpec.linear()
        self.train_config = train_config
        self.eval_config = eval_config
        self.fractions = tuple(fractions)
        self.rules = rules
        self.rules_path = rules_path
        self.threads = threads

    def run(
        self,
        config: GenConfig,
        out_dir: Union[str, Path],
        config_path: Optional[Union[str, Path]] = None,
    ) -> PipelineResult:
        """
        Run every stage. `config_path` is only recorded; the config values
        themselves come from `config`.
        """
        out = prepare_out_dir(out_dir)
        seed = config.seed
        manifest = RunManifest(subcommand="pipeline", seed=seed)
        if config_path is not None:
            manifest.input("config", config_path)

        logger.info("generating cohort of %d patients", config.n_patients)
        cohort = stage_generate(config, out, manifest, threads=self.threads)

        # reload the dataset from disk so every later stage sees exactly
        # what was written
        dataset = load_csv(out / DATASET_FILE)
        train_set, calib_set, test_set = stage_split(
            dataset, self.fractions, seed, out, manifest
        )

        train_config = self.train_config or TrainConfig(seed=seed)
        model, diagnostics = stage_train(
            train_set, self.kernel, train_config, out, manifest, write=False
        )
        threshold, calib_scores = stage_calibrate(
            model, calib_set, self.eval_config.target_specificity, out, manifest,
            threads=self.threads,
        )

        rules = self._rules(dataset, manifest)
        evaluation = stage_evaluate(
            model, threshold, test_set, rules, self.eval_config, seed, out, manifest,
            calibration_scores=calib_scores, threads=self.threads,
        )
        manifest.write(out)
        return PipelineResult(
            cohort=cohort,
            model=model,
            diagnostics=diagnostics,
            threshold=threshold,
            evaluation=evaluation,
            manifest=manifest,
        )

    def _rules(self, dataset: Dataset, manifest: RunManifest) -> RuleSet:
        if self.rules is not None:
            manifest.input("rules", "custom")
            return self.rules
        if self.rules_path is not None:
            rules = load_rules(self.rules_path, dataset.schema)
            manifest.input("rules", self.rules_path)
            manifest.param("evaluate.rules_sha256", file_digest(self.rules_path))
            return rules
        manifest.input("rules", f"builtin:{DEFAULT_RULESET}")
        text = shipped_rules_text(DEFAULT_RULESET)
        manifest.param("evaluate.rules_sha256", hashlib.sha256(text.encode("utf-8")).hexdigest())
        return load_shipped_rules(dataset.schema)


def run_pipeline(
    config: GenConfig, out_dir: Union[str, Path], threads: int = 1
) -> PipelineResult:
    """Run the default experiment."""
    return PipelineRunner(threads=threads).run(config, out_dir)
