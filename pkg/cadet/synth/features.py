"""
Patient trajectories and per-state feature extraction.

A state is emitted at every platelet result. Features at index t only
look at results 0..t; where a feature needs history that does not exist
yet, the earliest value is carried back.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from cadet.errors import ConfigError
from cadet.data.model import FeatureSchema, PatientState
from cadet.synth.schema import DEFAULT_SCHEMA, HEPARIN_WINDOW, RECENT, SPANS, WINDOWS


@dataclass(frozen=True)
class PatientTrajectory:
    """
    Lab series for one patient, one entry per platelet result.

    times are hours since the first result; heparin_hours counts hours
    since the start of the current heparin course and is 0 off heparin.
    """

    patient_id: str
    times: Tuple[float, ...]
    platelets: Tuple[float, ...]
    hemoglobin: Tuple[float, ...]
    on_heparin: Tuple[bool, ...]
    heparin_hours: Tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.times)
        if n == 0:
            raise ConfigError(f"trajectory {self.patient_id} is empty")
        for name in ("platelets", "hemoglobin", "on_heparin", "heparin_hours"):
            if len(getattr(self, name)) != n:
                raise ConfigError(f"trajectory {self.patient_id}: {name} has wrong length")
        if min(self.platelets) <= 0 or min(self.hemoglobin) <= 0:
            raise ConfigError(f"trajectory {self.patient_id}: lab values must be positive")
        for t in range(n):
            hours = self.heparin_hours[t]
            if hours < 0 or (not self.on_heparin[t] and hours != 0):
                raise ConfigError(
                    f"trajectory {self.patient_id}: bad heparin hours at {t}"
                )
            if t and self.on_heparin[t] and self.on_heparin[t - 1] and hours < self.heparin_hours[t - 1]:
                raise ConfigError(
                    f"trajectory {self.patient_id}: heparin hours decrease at {t}"
                )

    def __len__(self) -> int:
        return len(self.times)


def _lab_features(history: np.ndarray) -> List[float]:
    t = history.size - 1
    current = history[t]

    def back(k: int) -> float:
        return float(history[max(t - k, 0)])

    out = [back(k) for k in RECENT]
    out += [(current - back(w)) / w for w in SPANS]
    out += [(current - back(w)) / back(w) for w in SPANS]

    first = history[0]
    previous_nadir = history[:t].min() if t else current
    peak = history.max()
    out += [
        max(0.0, (first - current) / first),
        max(0.0, (previous_nadir - current) / previous_nadir),
        max(0.0, (peak - current) / peak),
        float(history.min()),
    ]
    return [float(v) for v in out]


def _window(history: np.ndarray, width: int) -> np.ndarray:
    if history.size >= width:
        return history[-width:]
    pad = np.full(width - history.size, history[0])
    return np.concatenate([pad, history])


def extract_features(
    trajectory: PatientTrajectory, time_index: int, schema: FeatureSchema = DEFAULT_SCHEMA
) -> PatientState:
    """
    Feature vector over the default schema for the state at time_index.

    Raises:
        ConfigError: time_index outside the trajectory
    """
    if not 0 <= time_index < len(trajectory):
        raise ConfigError(
            f"time index {time_index} outside trajectory of length {len(trajectory)}"
        )
    t = time_index
    plt = np.asarray(trajectory.platelets[: t + 1], dtype=np.float64)
    hgb = np.asarray(trajectory.hemoglobin[: t + 1], dtype=np.float64)

    values = _lab_features(plt) + _lab_features(hgb)
    values += [1.0 if trajectory.on_heparin[t] else 0.0, float(trajectory.heparin_hours[t])]
    for w in WINDOWS:
        win = _window(plt, w)
        values += [float(win.mean()), float(win.std()), float(win.min()), float(win.max())]
    for w in WINDOWS:
        win = _window(hgb, w)
        values += [float(win.mean()), float(win.std()), float(win.min())]
    exposure = _window(np.asarray(trajectory.on_heparin[: t + 1], dtype=np.float64), HEPARIN_WINDOW)
    values.append(float(exposure.mean()))
    if len(values) != schema.count:
        raise ConfigError(f"extracted {len(values)} features for a schema of {schema.count}")
    return PatientState(
        patient_id=trajectory.patient_id, state_index=t, features=tuple(values)
    )
