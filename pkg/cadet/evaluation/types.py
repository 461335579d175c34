"""
Evaluation result types.

Metrics whose denominator is zero are the UNDEFINED sentinel rather
than NaN, so they cannot leak silently into comparisons.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from cadet.errors import ConfigError, LengthMismatch
from cadet.data.model import Example


class Undefined(Enum):
    UNDEFINED = "undefined"

    def __str__(self) -> str:
        return self.value


UNDEFINED = Undefined.UNDEFINED

MetricValue = Union[float, Undefined]


def ratio(numerator: int, denominator: int) -> MetricValue:
    if denominator == 0:
        return UNDEFINED
    return numerator / denominator


def is_defined(value: MetricValue) -> bool:
    return not isinstance(value, Undefined)


@dataclass(frozen=True)
class EvalItem:
    """An example and whether its decision was deliberately flipped."""

    example: Example
    expected_anomaly: bool


@dataclass(frozen=True)
class ConfusionMatrix:
    """Positive = anomaly."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp


@dataclass(frozen=True)
class MetricsSummary:
    sensitivity: MetricValue
    specificity: MetricValue
    ppv: MetricValue
    npv: MetricValue


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    sensitivity: float
    fpr: float


@dataclass(frozen=True)
class RocCurve:
    """
    Points in increasing threshold order, from (-inf: 0, 0) to
    (+inf: 1, 1); sensitivity and fpr never decrease along the list.
    """

    points: Tuple[RocPoint, ...]
    auc: float

    def sensitivity_at_fpr(self, fpr: float) -> float:
        """
        Sensitivity on the ROC's upper envelope at a false-positive rate,
        linearly interpolated between points.
        """
        fprs = np.array([p.fpr for p in self.points])
        sens = np.array([p.sensitivity for p in self.points])
        xs = np.unique(fprs)
        ys = np.array([sens[fprs == x].max() for x in xs])
        return float(np.interp(fpr, xs, ys))


@dataclass(frozen=True)
class EvalReport:
    """One detector's results over one list of evaluation items."""

    detector: str
    items_digest: str
    n_items: int
    confusion: ConfusionMatrix
    metrics: MetricsSummary
    roc: Optional[RocCurve] = None
    threshold: Optional[float] = None


@dataclass(frozen=True)
class OperatingPoint:
    target_specificity: float
    threshold: float
    confusion: ConfusionMatrix
    metrics: MetricsSummary


@dataclass(frozen=True)
class Alert:
    patient_id: str
    state_index: int
    decision: int
    score: float
    calibration_percentile: Optional[float]
    expected_anomaly: bool


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    detector: MetricValue
    baseline: MetricValue

    @property
    def delta(self) -> MetricValue:
        if not (is_defined(self.detector) and is_defined(self.baseline)):
            return UNDEFINED
        return float(self.detector) - float(self.baseline)  # type: ignore[arg-type]


@dataclass(frozen=True)
class Comparison:
    detector: str
    baseline: str
    rows: Tuple[ComparisonRow, ...]
    # detector sensitivity read off its ROC at the baseline's specificity
    sensitivity_at_baseline_specificity: MetricValue

    def row(self, metric: str) -> ComparisonRow:
        for r in self.rows:
            if r.metric == metric:
                return r
        raise KeyError(metric)

    @property
    def ppv_ratio(self) -> MetricValue:
        r = self.row("ppv")
        if not (is_defined(r.detector) and is_defined(r.baseline)) or r.baseline == 0:
            return UNDEFINED
        return float(r.detector) / float(r.baseline)  # type: ignore[arg-type]


def items_digest(items: Sequence[EvalItem]) -> str:
    """Content hash identifying an evaluation item list."""
    h = hashlib.sha256()
    for item in items:
        state = item.example.state
        h.update(
            f"{state.patient_id},{state.state_index},{int(item.example.decision)},"
            f"{int(item.expected_anomaly)}\n".encode("utf-8")
        )
    return h.hexdigest()


def check_lengths(left: Sequence[object], right: Sequence[object], what: str) -> None:
    if len(left) != len(right):
        raise LengthMismatch(f"{what}: {len(left)} vs {len(right)} entries")

