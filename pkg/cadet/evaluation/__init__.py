"""Flip-injection ground truth, metrics, ROC and report artifacts."""

from .types import (
    UNDEFINED,
    Alert,
    Comparison,
    ComparisonRow,
    ConfusionMatrix,
    EvalItem,
    EvalReport,
    MetricsSummary,
    OperatingPoint,
    RocCurve,
    RocPoint,
    Undefined,
    items_digest,
)
from .injection import apply_flips, inject_flips, items_dataset, select_flip_indices
from .metrics import (
    DEFAULT_TARGETS,
    alerts,
    compare,
    confusion,
    evaluate_flags,
    format_percent,
    mann_whitney_auc,
    metrics,
    operating_points,
    roc,
)
from .report import format_summary, write_report

__all__ = [
    "UNDEFINED",
    "Undefined",
    "Alert",
    "Comparison",
    "ComparisonRow",
    "ConfusionMatrix",
    "EvalItem",
    "EvalReport",
    "MetricsSummary",
    "OperatingPoint",
    "RocCurve",
    "RocPoint",
    "items_digest",
    "inject_flips",
    "apply_flips",
    "items_dataset",
    "select_flip_indices",
    "DEFAULT_TARGETS",
    "confusion",
    "metrics",
    "format_percent",
    "roc",
    "mann_whitney_auc",
    "evaluate_flags",
    "compare",
    "operating_points",
    "alerts",
    "format_summary",
    "write_report",
]
