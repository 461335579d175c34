"""
Report artifacts: a plain-text summary and CSV tables for plotting.

Floats are written with repr() so repeated runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence, Union

import pandas as pd

from cadet.data.csvio import render_float, write_frame, write_text
from cadet.evaluation.metrics import format_percent
from cadet.evaluation.types import (
    Alert,
    Comparison,
    EvalReport,
    MetricValue,
    OperatingPoint,
    is_defined,
)

ROC_FILE = "roc.csv"
CONFUSION_FILE = "confusion.csv"
OPERATING_POINTS_FILE = "operating_points.csv"
ALERTS_FILE = "alerts.csv"
SUMMARY_FILE = "summary.txt"


def _cell(value: MetricValue) -> str:
    return render_float(value) if is_defined(value) else str(value)  # type: ignore[arg-type]


def roc_frame(report: EvalReport) -> pd.DataFrame:
    points = report.roc.points if report.roc is not None else ()
    return pd.DataFrame(
        {
            "threshold": [render_float(p.threshold) for p in points],
            "sensitivity": [render_float(p.sensitivity) for p in points],
            "fpr": [render_float(p.fpr) for p in points],
        },
        columns=["threshold", "sensitivity", "fpr"],
    )


def confusion_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    columns = ["detector", "tp", "fp", "tn", "fn", "sensitivity", "specificity", "ppv", "npv"]
    rows = [
        [
            r.detector, r.confusion.tp, r.confusion.fp, r.confusion.tn, r.confusion.fn,
            _cell(r.metrics.sensitivity), _cell(r.metrics.specificity),
            _cell(r.metrics.ppv), _cell(r.metrics.npv),
        ]
        for r in reports
    ]
    return pd.DataFrame(rows, columns=columns)


def operating_points_frame(points: Sequence[OperatingPoint]) -> pd.DataFrame:
    columns = ["target", "threshold", "tp", "fp", "tn", "fn", "sensitivity", "specificity", "ppv"]
    rows = [
        [
            render_float(p.target_specificity), render_float(p.threshold),
            p.confusion.tp, p.confusion.fp, p.confusion.tn, p.confusion.fn,
            _cell(p.metrics.sensitivity), _cell(p.metrics.specificity), _cell(p.metrics.ppv),
        ]
        for p in points
    ]
    return pd.DataFrame(rows, columns=columns)


def alerts_frame(alerts: Sequence[Alert]) -> pd.DataFrame:
    columns = [
        "patient_id", "state_index", "decision", "score",
        "calibration_percentile", "expected_anomaly",
    ]
    rows = [
        [
            a.patient_id, a.state_index, a.decision, render_float(a.score),
            (
                render_float(a.calibration_percentile)
                if a.calibration_percentile is not None else "undefined"
            ), int(a.expected_anomaly),
        ]
        for a in alerts
    ]
    return pd.DataFrame(rows, columns=columns)


def format_summary(
    reports: Sequence[EvalReport],
    comparison: Optional[Comparison] = None,
    points: Sequence[OperatingPoint] = (),
) -> str:
    """Fixed-width text table of every report, then comparison and sweep."""
    lines: List[str] = []
    if reports:
        lines.append(f"Evaluation items: {reports[0].n_items}")
        lines.append(
            f"Expected anomalies: {reports[0].confusion.positives}"
        )
        lines.append("")
    header = f"{'detector':<10} {'tp':>6} {'fp':>6} {'tn':>7} {'fn':>6} {'sens':>9} {'spec':>9} {'ppv':>9} {'auc':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for r in reports:
        auc = f"{r.roc.auc:.4f}" if r.roc is not None else "-"
        lines.append(
            f"{r.detector:<10} {r.confusion.tp:>6} {r.confusion.fp:>6} "
            f"{r.confusion.tn:>7} {r.confusion.fn:>6} "
            f"{format_percent(r.metrics.sensitivity):>9} "
            f"{format_percent(r.metrics.specificity):>9} "
            f"{format_percent(r.metrics.ppv):>9} {auc:>8}"
        )
    for r in reports:
        if r.threshold is not None:
            lines.append(f"{r.detector} threshold: {r.threshold!r}")

    if comparison is not None:
        lines.append("")
        lines.append(f"Comparison: {comparison.detector} vs {comparison.baseline}")
        for row in comparison.rows:
            delta = row.delta
            shown = f"{100.0 * float(delta):+.1f} pts" if is_defined(delta) else "undefined"  # type: ignore[arg-type]
            lines.append(
                f"  {row.metric:<12} {format_percent(row.detector):>9} "
                f"{format_percent(row.baseline):>9}  {shown}"
            )
        lines.append(
            f"  {comparison.detector} sensitivity at {comparison.baseline} specificity: "
            f"{format_percent(comparison.sensitivity_at_baseline_specificity)}"
        )
        ratio = comparison.ppv_ratio
        shown = f"{float(ratio):.2f}" if is_defined(ratio) else "undefined"  # type: ignore[arg-type]
        lines.append(f"  PPV ratio: {shown}")

    if points:
        lines.append("")
        lines.append("Operating points (calibrated on held-out scores):")
        for p in points:
            lines.append(
                f"  target {p.target_specificity:.2f}: "
                f"sens {format_percent(p.metrics.sensitivity)}, "
                f"spec {format_percent(p.metrics.specificity)}, "
                f"ppv {format_percent(p.metrics.ppv)} "
                f"({p.confusion.tp} true and {p.confusion.fp} false positives)"
            )
    return "\n".join(lines) + "\n"


def write_report(
    out_dir: Union[str, Path],
    reports: Sequence[EvalReport],
    comparison: Optional[Comparison] = None,
    points: Sequence[OperatingPoint] = (),
    alerts: Optional[Sequence[Alert]] = None,
) -> List[Path]:
    """
    Write summary.txt, confusion.csv and, when available, roc.csv,
    operating_points.csv and alerts.csv. Returns the written paths.
    """
    out = Path(out_dir)
    written = []

    summary = out / SUMMARY_FILE
    write_text(format_summary(reports, comparison, points), summary)
    written.append(summary)

    write_frame(confusion_frame(reports), out / CONFUSION_FILE)
    written.append(out / CONFUSION_FILE)

    scored = [r for r in reports if r.roc is not None]
    if scored:
        write_frame(roc_frame(scored[0]), out / ROC_FILE)
        written.append(out / ROC_FILE)
    if points:
        write_frame(operating_points_frame(points), out / OPERATING_POINTS_FILE)
        written.append(out / OPERATING_POINTS_FILE)
    if alerts is not None:
        write_frame(alerts_frame(alerts), out / ALERTS_FILE)
        written.append(out / ALERTS_FILE)
    return written
