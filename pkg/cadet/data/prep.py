"""
Dataset preparation: patient-level splitting and feature standardization.

States of one patient are generated at consecutive platelet results and
are strongly correlated, so splits partition patients, never rows.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, Sequence, Tuple

import numpy as np

from cadet.errors import ConfigError, DegenerateSplit, EmptyDataset, SchemaError
from cadet.data.model import Dataset, StandardizationStats

logger = logging.getLogger(__name__)

# Distinct stream id so the split never shares random draws with other
# seeded steps that use the same user seed.
SPLIT_STREAM = 1


def split_by_patient(
    dataset: Dataset,
    fractions: Sequence[float],
    seed: int,
) -> Tuple[Dataset, Dataset, Dataset]:
    """
    Partition a dataset into (train, calib, test) by patient.

    Patient ids are sorted, shuffled by a generator seeded from `seed`,
    and cut into blocks of round(f * P) patients (the test block takes the
    remainder). Rows keep their source order inside each part.

    Raises:
        ConfigError: fractions not three positive reals summing to 1
        DegenerateSplit: a part receives zero patients
    """
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ConfigError(f"fractions must be three positive reals, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {sum(fractions)}")

    patients = dataset.patients()
    n_patients = len(patients)
    n_train = _round_half_up(fractions[0] * n_patients)
    n_calib = _round_half_up(fractions[1] * n_patients)
    n_test = n_patients - n_train - n_calib
    sizes = (n_train, n_calib, n_test)
    if min(sizes) <= 0:
        raise DegenerateSplit(
            f"{n_patients} patients with fractions {tuple(fractions)} "
            f"give part sizes {sizes}"
        )

    rng = np.random.default_rng([seed, SPLIT_STREAM])
    order = rng.permutation(n_patients)
    part_of: Dict[str, int] = {}
    for position, patient_index in enumerate(order.tolist()):
        if position < n_train:
            part = 0
        elif position < n_train + n_calib:
            part = 1
        else:
            part = 2
        part_of[patients[patient_index]] = part

    rows: Tuple[list, list, list] = ([], [], [])
    for i, example in enumerate(dataset.examples):
        rows[part_of[example.state.patient_id]].append(i)

    logger.info(
        "split %d patients into %d/%d/%d (rows %d/%d/%d)",
        n_patients, *sizes, *(len(r) for r in rows),
    )
    return (
        dataset.subset(rows[0]),
        dataset.subset(rows[1]),
        dataset.subset(rows[2]),
    )


def fit_standardizer(dataset: Dataset) -> StandardizationStats:
    """
    Per-feature mean and population (divide-by-N) standard deviation.

    Raises:
        EmptyDataset: no examples to fit on
    """
    if len(dataset) == 0:
        raise EmptyDataset("cannot fit standardization on an empty dataset")
    matrix = dataset.features
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)
    constant = stds == 0.0
    if constant.any():
        names = [n for n, c in zip(dataset.schema.names, constant) if c]
        logger.warning("constant features (centered, not scaled): %s", ", ".join(names))
    return StandardizationStats(
        means=tuple(float(m) for m in means),
        stds=tuple(float(s) for s in stds),
        constant=tuple(bool(c) for c in constant),
    )


def standardize_matrix(stats: StandardizationStats, matrix: np.ndarray) -> np.ndarray:
    """z = (x - mean) / scale, row-wise over an (n, K) matrix."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[-1] != stats.count:
        raise SchemaError(
            f"standardization has {stats.count} features, data has {matrix.shape[-1]}"
        )
    return (matrix - stats.mean_vector) / stats.scale_vector


def apply_standardizer(stats: StandardizationStats, dataset: Dataset) -> Dataset:
    """
    Standardize every feature; ids, state indices and decisions untouched.

    Raises:
        SchemaError: stats width differs from the dataset schema
    """
    if stats.count != dataset.schema.count:
        raise SchemaError(
            f"standardization has {stats.count} features, "
            f"schema has {dataset.schema.count}"
        )
    z = standardize_matrix(stats, dataset.features)
    return _replace_features(dataset, z)


def invert_standardizer(stats: StandardizationStats, dataset: Dataset) -> Dataset:
    """x = z * scale + mean; the inverse of apply_standardizer."""
    if stats.count != dataset.schema.count:
        raise SchemaError(
            f"standardization has {stats.count} features, "
            f"schema has {dataset.schema.count}"
        )
    x = dataset.features * stats.scale_vector + stats.mean_vector
    return _replace_features(dataset, x)


def _replace_features(dataset: Dataset, matrix: np.ndarray) -> Dataset:
    return Dataset.from_arrays(
        dataset.schema,
        dataset.patient_ids,
        [ex.state.state_index for ex in dataset.examples],
        matrix.reshape(len(dataset), dataset.schema.count),
        dataset.decisions.tolist(),
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))
