"""
Data model for patient states and management decisions.

A conditional anomaly is a statement about a pair (x, y): the context x
is a PatientState (one feature vector taken when a new platelet result
arrives), the target y is the Decision made in that state. A Dataset is
the reference database of such pairs that the detector learns from.

All types are frozen: once built they are safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from functools import cached_property
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from cadet.errors import SchemaError


class Decision(IntEnum):
    """Binary patient-management decision (HPF4 test order vs no order)."""

    NO_ORDER = 0
    ORDER = 1

    def flipped(self) -> "Decision":
        """The opposite decision."""
        return Decision(1 - int(self))

    @property
    def sign(self) -> int:
        """The +1/-1 encoding s = 2y - 1."""
        return 2 * int(self) - 1


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered, duplicate-free list of feature names."""

    names: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.names:
            raise SchemaError("schema must contain at least one feature")
        seen = set()
        for name in self.names:
            if not name or "," in name or name != name.strip():
                raise SchemaError(f"invalid feature name: {name!r}")
            if name in seen:
                raise SchemaError(f"duplicate feature name: {name}")
            seen.add(name)

    @classmethod
    def of(cls, names: Iterable[str]) -> "FeatureSchema":
        return cls(tuple(names))

    @property
    def count(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        """Column position of a feature; SchemaError if absent."""
        try:
            return self.names.index(name)
        except ValueError:
            raise SchemaError(f"unknown feature: {name}") from None

    def __contains__(self, name: object) -> bool:
        return name in self.names


@dataclass(frozen=True)
class PatientState:
    """
    Context attributes x: a patient's condition at one time point.

    state_index orders the states of one patient in time.
    """

    patient_id: str
    state_index: int
    features: Tuple[float, ...]

    def __post_init__(self) -> None:
        if self.state_index < 0:
            raise SchemaError(
                f"state_index must be non-negative, got {self.state_index}"
            )
        for value in self.features:
            if not math.isfinite(value):
                raise SchemaError(
                    f"non-finite feature value in state "
                    f"{self.patient_id}/{self.state_index}"
                )

    def vector(self) -> np.ndarray:
        return np.asarray(self.features, dtype=np.float64)


@dataclass(frozen=True)
class Example:
    """The pair (x, y) whose conditional anomaly is assessed."""

    state: PatientState
    decision: Decision

    def with_decision(self, decision: Decision) -> "Example":
        return replace(self, decision=decision)


@dataclass(frozen=True)
class Dataset:
    """
    The reference database E: examples over one schema, in source order.
    """

    schema: FeatureSchema
    examples: Tuple[Example, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        width = self.schema.count
        for example in self.examples:
            if len(example.state.features) != width:
                raise SchemaError(
                    f"state {example.state.patient_id}/{example.state.state_index} "
                    f"has {len(example.state.features)} features, schema has {width}"
                )

    @classmethod
    def from_arrays(
        cls,
        schema: FeatureSchema,
        patient_ids: Sequence[str],
        state_indices: Sequence[int],
        features: np.ndarray,
        decisions: Sequence[int],
    ) -> "Dataset":
        """Build a dataset from column arrays (one row per example)."""
        matrix = np.asarray(features, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != schema.count:
            raise SchemaError(
                f"feature matrix shape {matrix.shape} does not match "
                f"schema width {schema.count}"
            )
        examples = tuple(
            Example(
                state=PatientState(
                    patient_id=str(pid),
                    state_index=int(idx),
                    features=tuple(float(v) for v in row),
                ),
                decision=Decision(int(dec)),
            )
            for pid, idx, row, dec in zip(
                patient_ids, state_indices, matrix.tolist(), decisions
            )
        )
        return cls(schema=schema, examples=examples)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[Example]:
        return iter(self.examples)

    @cached_property
    def features(self) -> np.ndarray:
        """(n, K) read-only feature matrix."""
        if not self.examples:
            return np.zeros((0, self.schema.count), dtype=np.float64)
        matrix = np.array(
            [ex.state.features for ex in self.examples], dtype=np.float64
        )
        matrix.setflags(write=False)
        return matrix

    @cached_property
    def decisions(self) -> np.ndarray:
        """(n,) int array of 0/1 decisions."""
        arr = np.array([int(ex.decision) for ex in self.examples], dtype=np.int64)
        arr.setflags(write=False)
        return arr

    @property
    def patient_ids(self) -> List[str]:
        return [ex.state.patient_id for ex in self.examples]

    def patients(self) -> List[str]:
        """Distinct patient ids, sorted."""
        return sorted({ex.state.patient_id for ex in self.examples})

    def subset(self, indices: Iterable[int]) -> "Dataset":
        """Rows at the given positions, in the given order."""
        return Dataset(
            schema=self.schema,
            examples=tuple(self.examples[i] for i in indices),
        )

    def with_examples(self, examples: Iterable[Example]) -> "Dataset":
        return Dataset(schema=self.schema, examples=tuple(examples))

    def class_counts(self) -> Tuple[int, int]:
        """(no-order count, order count)."""
        n_order = int(self.decisions.sum()) if self.examples else 0
        return len(self.examples) - n_order, n_order


@dataclass(frozen=True)
class StandardizationStats:
    """
    Per-feature mean and population standard deviation.

    Zero-variance features are flagged constant; their scale is 1 so
    they are centered but not divided.
    """

    means: Tuple[float, ...]
    stds: Tuple[float, ...]
    constant: Tuple[bool, ...]

    def __post_init__(self) -> None:
        if not (len(self.means) == len(self.stds) == len(self.constant)):
            raise SchemaError("standardization vectors have different lengths")

    @property
    def count(self) -> int:
        return len(self.means)

    @cached_property
    def mean_vector(self) -> np.ndarray:
        return np.asarray(self.means, dtype=np.float64)

    @cached_property
    def scale_vector(self) -> np.ndarray:
        return np.asarray(self.scales, dtype=np.float64)

    @property
    def scales(self) -> Tuple[float, ...]:
        return tuple(
            1.0 if flag else sd for sd, flag in zip(self.stds, self.constant)
        )

    @classmethod
    def from_scales(
        cls, means: Sequence[float], scales: Sequence[float]
    ) -> "StandardizationStats":
        """Rebuild stats from effective scales (as stored in model files)."""
        return cls(
            means=tuple(float(m) for m in means),
            stds=tuple(float(s) for s in scales),
            constant=tuple(False for _ in scales),
        )
