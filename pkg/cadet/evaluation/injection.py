"""
Ground truth by decision inversion.

A seeded subset of the test examples has its decision inverted; those
items are the expected anomalies, everything else is expected normal.
"""

from __future__ import annotations

import logging
import math
from typing import List, Sequence

import numpy as np

from cadet.errors import ConfigError, EmptyDataset
from cadet.data.model import Dataset
from cadet.evaluation.types import EvalItem

logger = logging.getLogger(__name__)

FLIP_STREAM = 3


def flip_count(n: int, flip_fraction: float) -> int:
    """round(fraction * N), halves rounded up."""
    return min(n, int(math.floor(flip_fraction * n + 0.5)))


def select_flip_indices(n: int, flip_fraction: float, seed: int) -> np.ndarray:
    """Sorted positions of the items to invert."""
    if not 0.0 < flip_fraction <= 1.0:
        raise ConfigError(f"flip fraction must be in (0, 1], got {flip_fraction}")
    k = flip_count(n, flip_fraction)
    rng = np.random.default_rng([seed, FLIP_STREAM])
    return np.sort(rng.choice(n, size=k, replace=False))


def inject_flips(test_set: Dataset, flip_fraction: float, seed: int) -> List[EvalItem]:
    """
    Evaluation items in dataset order, with the selected decisions inverted.

    Raises:
        EmptyDataset: empty test set
        ConfigError: fraction outside (0, 1]
    """
    if len(test_set) == 0:
        raise EmptyDataset("cannot inject flips into an empty test set")
    chosen = select_flip_indices(len(test_set), flip_fraction, seed)
    items = apply_flips(test_set, chosen)
    logger.info("injected %d flips into %d test items", chosen.size, len(test_set))
    return items


def apply_flips(test_set: Dataset, indices: Sequence[int]) -> List[EvalItem]:
    flipped = set(int(i) for i in indices)
    return [
        EvalItem(
            example=ex.with_decision(ex.decision.flipped()) if i in flipped else ex,
            expected_anomaly=i in flipped,
        )
        for i, ex in enumerate(test_set.examples)
    ]


def items_dataset(test_set: Dataset, items: Sequence[EvalItem]) -> Dataset:
    """The (possibly flipped) examples as a Dataset over the same schema."""
    return test_set.with_examples(item.example for item in items)
