"""
Order-statistic threshold calibration.

With N calibration scores sorted ascending and k = floor(N * (1 - s)),
the threshold is the (k+1)-th smallest score. At most k scores fall
strictly below it, so the empirical specificity on the calibration set
is at least s, and at most s + 1/N when the scores are distinct.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from cadet.errors import ConfigError, EmptyCalibrationSet

logger = logging.getLogger(__name__)

# Absorbs binary rounding in N * (1 - s), e.g. 10 * (1 - 0.9).
FLOOR_EPS = 1e-9


@dataclass(frozen=True)
class Threshold:
    value: float
    target_specificity: float
    calibration_size: int

    def __post_init__(self) -> None:
        check_target(self.target_specificity)
        if self.calibration_size <= 0:
            raise ConfigError(
                f"calibration_size must be positive, got {self.calibration_size}"
            )
        if not math.isfinite(self.value):
            raise ConfigError(f"threshold must be finite, got {self.value}")


def check_target(target_specificity: float) -> None:
    if not 0.0 < target_specificity < 1.0:
        raise ConfigError(
            f"target specificity must be in (0, 1), got {target_specificity}"
        )


def order_statistic_rank(n: int, target_specificity: float) -> int:
    """k = floor(N * (1 - target)), clamped to a valid index."""
    k = int(math.floor(n * (1.0 - target_specificity) + FLOOR_EPS))
    return min(max(k, 0), n - 1)


def calibrate(
    calibration_scores: Union[Sequence[float], np.ndarray], target_specificity: float
) -> Threshold:
    """
    Choose theta from held-out, unflipped scores.

    Raises:
        EmptyCalibrationSet: no scores
        ConfigError: target outside (0, 1)
    """
    check_target(target_specificity)
    scores = np.sort(np.asarray(calibration_scores, dtype=np.float64))
    if scores.size == 0:
        raise EmptyCalibrationSet("calibration needs at least one score")
    k = order_statistic_rank(scores.size, target_specificity)
    theta = float(scores[k])
    logger.info(
        "calibrated threshold %.6g at target specificity %.4g (k=%d of %d)",
        theta, target_specificity, k, scores.size,
    )
    return Threshold(
        value=theta,
        target_specificity=float(target_specificity),
        calibration_size=int(scores.size),
    )


def empirical_specificity(
    calibration_scores: Union[Sequence[float], np.ndarray], threshold: float
) -> float:
    """Fraction of scores not flagged (score >= threshold)."""
    scores = np.asarray(calibration_scores, dtype=np.float64)
    if scores.size == 0:
        raise EmptyCalibrationSet("no scores")
    return float(np.count_nonzero(scores >= threshold)) / scores.size
