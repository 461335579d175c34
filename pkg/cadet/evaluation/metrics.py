"""
Confusion counts, rates, ROC and the detector/baseline comparison.

Aggregation uses integer counts and a single final division, so results
never depend on the order in which items were scored.
"""

from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Union

import numpy as np

from cadet.errors import MismatchedEvalSets, SingleClassExpected
from cadet.detector.calibration import calibrate
from cadet.evaluation.types import (
    UNDEFINED,
    Alert,
    Comparison,
    ComparisonRow,
    ConfusionMatrix,
    EvalItem,
    EvalReport,
    MetricValue,
    MetricsSummary,
    OperatingPoint,
    RocCurve,
    RocPoint,
    check_lengths,
    is_defined,
    items_digest,
    ratio,
)

logger = logging.getLogger(__name__)

DEFAULT_TARGETS = (0.90, 0.94, 0.97, 0.99)

BoolLike = Union[Sequence[bool], np.ndarray]
FloatLike = Union[Sequence[float], np.ndarray]


def confusion(verdicts: BoolLike, expected: BoolLike) -> ConfusionMatrix:
    """
    2x2 counts, positive = anomaly.

    Raises:
        LengthMismatch: lists of different lengths
    """
    check_lengths(verdicts, expected, "verdicts and expected")
    v = np.asarray(verdicts, dtype=bool)
    e = np.asarray(expected, dtype=bool)
    return ConfusionMatrix(
        tp=int(np.count_nonzero(v & e)),
        fp=int(np.count_nonzero(v & ~e)),
        tn=int(np.count_nonzero(~v & ~e)),
        fn=int(np.count_nonzero(~v & e)),
    )


def metrics(cm: ConfusionMatrix) -> MetricsSummary:
    return MetricsSummary(
        sensitivity=ratio(cm.tp, cm.tp + cm.fn),
        specificity=ratio(cm.tn, cm.tn + cm.fp),
        ppv=ratio(cm.tp, cm.tp + cm.fp),
        npv=ratio(cm.tn, cm.tn + cm.fn),
    )


def format_percent(value: MetricValue) -> str:
    """0.15642 -> '15.6%'; undefined stays 'undefined'."""
    if not is_defined(value):
        return str(value)
    return f"{100.0 * float(value):.1f}%"  # type: ignore[arg-type]


def roc(scores: FloatLike, expected: BoolLike) -> RocCurve:
    """
    Exact ROC over every distinct score, anomaly iff score < threshold.

    Tied scores share one threshold point. AUC is the trapezoid area,
    computed from integer counts.

    Raises:
        LengthMismatch: lists of different lengths
        SingleClassExpected: no expected anomalies or no expected normals
    """
    check_lengths(scores, expected, "scores and expected")
    s = np.asarray(scores, dtype=np.float64)
    e = np.asarray(expected, dtype=bool)
    n_pos = int(np.count_nonzero(e))
    n_neg = e.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassExpected(
            f"ROC needs both classes, got {n_pos} anomalies and {n_neg} normals"
        )

    distinct = np.unique(s)
    # flagged below each distinct value: counts of scores strictly smaller
    pos_sorted = np.sort(s[e])
    neg_sorted = np.sort(s[~e])
    tp = np.searchsorted(pos_sorted, distinct, side="left")
    fp = np.searchsorted(neg_sorted, distinct, side="left")
    thresholds = np.concatenate([[-np.inf], distinct, [np.inf]])
    tp = np.concatenate([[0], tp, [n_pos]]).astype(np.int64)
    fp = np.concatenate([[0], fp, [n_neg]]).astype(np.int64)

    points = tuple(
        RocPoint(threshold=float(t), sensitivity=int(a) / n_pos, fpr=int(b) / n_neg)
        for t, a, b in zip(thresholds, tp, fp)
    )
    twice_area = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    auc = twice_area / (2 * n_pos * n_neg)
    return RocCurve(points=points, auc=auc)


def mann_whitney_auc(scores: FloatLike, expected: BoolLike) -> float:
    """
    P(anomaly scores below normal) + P(tie) / 2, counted over all pairs.
    """
    check_lengths(scores, expected, "scores and expected")
    s = np.asarray(scores, dtype=np.float64)
    e = np.asarray(expected, dtype=bool)
    pos = s[e]
    neg = np.sort(s[~e])
    if pos.size == 0 or neg.size == 0:
        raise SingleClassExpected("Mann-Whitney AUC needs both classes")
    above = neg.size - np.searchsorted(neg, pos, side="right")
    ties = np.searchsorted(neg, pos, side="right") - np.searchsorted(neg, pos, side="left")
    twice = int(2 * above.sum() + ties.sum())
    return twice / (2 * pos.size * neg.size)


def evaluate_flags(
    detector: str,
    items: Sequence[EvalItem],
    flags: BoolLike,
    scores: Optional[FloatLike] = None,
    threshold: Optional[float] = None,
) -> EvalReport:
    """
    Report for one detector's anomaly flags (and scores, if it has any).

    The ROC is left out when the items hold only one expected class,
    e.g. every decision flipped or none.
    """
    expected = [item.expected_anomaly for item in items]
    cm = confusion(flags, expected)
    curve = None
    if scores is not None and 0 < cm.positives < len(items):
        curve = roc(scores, expected)
        mw = mann_whitney_auc(scores, expected)
        logger.info("%s: AUC %.6f (rank statistic %.6f)", detector, curve.auc, mw)
    elif scores is not None:
        logger.warning(
            "%s: no ROC, %d of %d items are expected anomalies",
            detector, cm.positives, len(items),
        )
    return EvalReport(
        detector=detector,
        items_digest=items_digest(items),
        n_items=len(items),
        confusion=cm,
        metrics=metrics(cm),
        roc=curve,
        threshold=threshold,
    )


def compare(detector_report: EvalReport, baseline_report: EvalReport) -> Comparison:
    """
    Side-by-side rates, plus the detector's ROC sensitivity at the
    baseline's achieved specificity.

    Raises:
        MismatchedEvalSets: the reports cover different items
    """
    if (
        detector_report.items_digest != baseline_report.items_digest
        or detector_report.n_items != baseline_report.n_items
    ):
        raise MismatchedEvalSets(
            f"{detector_report.detector} and {baseline_report.detector} "
            "were evaluated on different items"
        )
    d, b = detector_report.metrics, baseline_report.metrics
    rows = tuple(
        ComparisonRow(name, getattr(d, name), getattr(b, name))
        for name in ("sensitivity", "specificity", "ppv", "npv")
    )
    at_spec: MetricValue = UNDEFINED
    if detector_report.roc is not None and is_defined(b.specificity):
        at_spec = detector_report.roc.sensitivity_at_fpr(1.0 - float(b.specificity))  # type: ignore[arg-type]
    return Comparison(
        detector=detector_report.detector,
        baseline=baseline_report.detector,
        rows=rows,
        sensitivity_at_baseline_specificity=at_spec,
    )


def operating_points(
    calibration_scores: FloatLike,
    test_scores: FloatLike,
    expected: BoolLike,
    targets: Sequence[float] = DEFAULT_TARGETS,
) -> List[OperatingPoint]:
    """Calibrate at each target specificity and evaluate on the test scores."""
    check_lengths(test_scores, expected, "scores and expected")
    s = np.asarray(test_scores, dtype=np.float64)
    out = []
    for target in targets:
        theta = calibrate(calibration_scores, target)
        cm = confusion(s < theta.value, expected)
        out.append(OperatingPoint(target, theta.value, cm, metrics(cm)))
    return out


def alerts(
    items: Sequence[EvalItem],
    scores: FloatLike,
    threshold: float,
    calibration_scores: Optional[FloatLike] = None,
) -> List[Alert]:
    """
    Every flagged item with its calibration percentile: the fraction of
    calibration scores strictly below its own score (None without
    calibration scores).
    """
    check_lengths(items, scores, "items and scores")
    calib = None
    if calibration_scores is not None and len(calibration_scores) > 0:
        calib = np.sort(np.asarray(calibration_scores, dtype=np.float64))
    out = []
    for item, value in zip(items, np.asarray(scores, dtype=np.float64)):
        if not value < threshold:
            continue
        percentile = None
        if calib is not None:
            percentile = int(np.searchsorted(calib, value, side="left")) / calib.size
        state = item.example.state
        out.append(
            Alert(
                patient_id=state.patient_id,
                state_index=state.state_index,
                decision=int(item.example.decision),
                score=float(value),
                calibration_percentile=percentile,
                expected_anomaly=item.expected_anomaly,
            )
        )
    return out
