"""Patient-state data model, CSV I/O and preparation."""

from .model import (
    Dataset,
    Decision,
    Example,
    FeatureSchema,
    PatientState,
    StandardizationStats,
)
from .csvio import load_csv, save_csv
from .prep import (
    apply_standardizer,
    fit_standardizer,
    invert_standardizer,
    split_by_patient,
    standardize_matrix,
)

__all__ = [
    "Dataset",
    "Decision",
    "Example",
    "FeatureSchema",
    "PatientState",
    "StandardizationStats",
    "load_csv",
    "save_csv",
    "split_by_patient",
    "fit_standardizer",
    "apply_standardizer",
    "invert_standardizer",
    "standardize_matrix",
]
