"""
The default 43-feature patient-state schema.

    platelet block (13)     recent values 0..2, per-step slopes and
                            relative trends over 1..3 steps, drops from
                            the first value, previous nadir and peak,
                            the running nadir
    hemoglobin block (13)   the same features for hemoglobin
    heparin (2)             exposure flag, hours on the current course
    window statistics (15)  over the last 3 and 5 results: platelet
                            mean/std/min/max, hemoglobin mean/std/min,
                            and the fraction of the last 5 states on
                            heparin
"""

from __future__ import annotations

from typing import List

from cadet.data.model import FeatureSchema

RECENT = (0, 1, 2)
SPANS = (1, 2, 3)
WINDOWS = (3, 5)
HEPARIN_WINDOW = 5


def lab_block(prefix: str) -> List[str]:
    return (
        [f"{prefix}_recent_{k}" for k in RECENT]
        + [f"{prefix}_slope_{w}" for w in SPANS]
        + [f"{prefix}_trend_{w}" for w in SPANS]
        + [
            f"{prefix}_drop_from_first",
            f"{prefix}_drop_from_nadir",
            f"{prefix}_drop_from_peak",
            f"{prefix}_nadir",
        ]
    )


def window_block() -> List[str]:
    names = []
    for w in WINDOWS:
        names += [f"plt_win{w}_{stat}" for stat in ("mean", "std", "min", "max")]
    for w in WINDOWS:
        names += [f"hgb_win{w}_{stat}" for stat in ("mean", "std", "min")]
    names.append(f"heparin_win{HEPARIN_WINDOW}_fraction")
    return names


HEPARIN_FEATURES = ["on_heparin", "heparin_hours"]

FEATURE_NAMES = lab_block("plt") + lab_block("hgb") + HEPARIN_FEATURES + window_block()

DEFAULT_SCHEMA = FeatureSchema.of(FEATURE_NAMES)
