"""Conditional anomaly scoring, threshold calibration and verdicts."""

from .calibration import Threshold, calibrate, empirical_specificity
from .scoring import (
    AnomalyScore,
    AnomalyVerdict,
    detect,
    detect_batch,
    score,
    score_batch,
    score_dataset,
    score_matrix,
)
from .persist import load_model, save_model

__all__ = [
    "AnomalyScore",
    "AnomalyVerdict",
    "Threshold",
    "score",
    "score_batch",
    "score_matrix",
    "score_dataset",
    "calibrate",
    "empirical_specificity",
    "detect",
    "detect_batch",
    "save_model",
    "load_model",
]
