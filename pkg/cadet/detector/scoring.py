"""
Conditional anomaly score and verdicts.

The score of an example (x, y) is the SVM margin in the direction of the
observed decision:

    d(y|x) = (2y - 1) * f(x)

Large positive values mean the decision agrees with the learned pattern;
negative values mean it contradicts it. An example is anomalous when its
score falls strictly below the calibrated threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from cadet.errors import DimensionMismatch, SchemaError
from cadet.data.model import Dataset, Example
from cadet.svm.model import SvmModel, discriminant, discriminant_matrix
from cadet.detector.calibration import Threshold


@dataclass(frozen=True)
class AnomalyScore:
    """d(y|x) for one example."""

    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise SchemaError(f"anomaly score must be finite, got {self.value}")


@dataclass(frozen=True)
class AnomalyVerdict:
    score: AnomalyScore
    threshold: float
    is_anomaly: bool

    @classmethod
    def of(cls, score: AnomalyScore, threshold: float) -> "AnomalyVerdict":
        # ties at the threshold are normal
        return cls(score=score, threshold=threshold, is_anomaly=score.value < threshold)


def score(model: SvmModel, example: Example) -> AnomalyScore:
    """
    Signed margin of the observed decision.

    Raises:
        DimensionMismatch: example width differs from the model schema
    """
    f = discriminant(model, example.state)
    return AnomalyScore(example.decision.sign * f)


def score_matrix(
    model: SvmModel, features: np.ndarray, decisions: np.ndarray, threads: int = 1
) -> np.ndarray:
    """Scores for parallel feature rows and 0/1 decisions."""
    decisions = np.asarray(decisions)
    if decisions.shape[0] != np.asarray(features).shape[0]:
        raise DimensionMismatch(
            f"{np.asarray(features).shape[0]} feature rows for {decisions.shape[0]} decisions"
        )
    signs = 2.0 * decisions.astype(np.float64) - 1.0
    return signs * discriminant_matrix(model, features, threads=threads)


def score_batch(
    model: SvmModel, examples: Sequence[Example], threads: int = 1
) -> np.ndarray:
    """
    Scores for many examples, in input order.

    Matches score() per example up to rounding in the last place;
    `threads` never changes the values.
    """
    if not examples:
        return np.zeros(0, dtype=np.float64)
    for example in examples:
        if len(example.state.features) != model.schema.count:
            raise DimensionMismatch(
                f"state {example.state.patient_id}/{example.state.state_index} has "
                f"{len(example.state.features)} features, model expects {model.schema.count}"
            )
    features = np.array([ex.state.features for ex in examples], dtype=np.float64)
    decisions = np.array([int(ex.decision) for ex in examples], dtype=np.int64)
    return score_matrix(model, features, decisions, threads=threads)


def score_dataset(model: SvmModel, dataset: Dataset, threads: int = 1) -> np.ndarray:
    """
    Raises:
        DimensionMismatch: dataset width differs from the model schema
        SchemaError: same width, but different names or column order
    """
    if dataset.schema.count != model.schema.count:
        raise DimensionMismatch(
            f"dataset has {dataset.schema.count} features, model expects {model.schema.count}"
        )
    if dataset.schema != model.schema:
        moved = [
            name for name, expected in zip(dataset.schema.names, model.schema.names)
            if name != expected
        ]
        raise SchemaError(
            f"dataset columns do not match the model schema (first mismatch: {moved[0]})"
        )
    return score_matrix(model, dataset.features, dataset.decisions, threads=threads)


def detect(model: SvmModel, threshold: Threshold, example: Example) -> AnomalyVerdict:
    return AnomalyVerdict.of(score(model, example), threshold.value)


def detect_batch(
    model: SvmModel, threshold: Threshold, examples: Sequence[Example], threads: int = 1
) -> List[AnomalyVerdict]:
    return [
        AnomalyVerdict.of(AnomalyScore(float(v)), threshold.value)
        for v in score_batch(model, examples, threads=threads)
    ]
