"""
Trained SVM discriminant and the training entry point.

The discriminant is

    f(x) = sum_i coeff_i * K(sv_i, z) + b,   z = (x - mean) / scale,

with coeff_i = a_i * s_i. Standardization is fit on the training set and
stored with the model, so callers always pass raw patient states.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from cadet.errors import ConfigError, DimensionMismatch, SingleClassData
from cadet.data.model import Dataset, FeatureSchema, PatientState, StandardizationStats
from cadet.data.prep import fit_standardizer, standardize_matrix
from cadet.svm.kernels import KernelKind, KernelSpec, kernel_block
from cadet.svm.solver import SolveDiagnostics, solve_dual

logger = logging.getLogger(__name__)

SUBSAMPLE_STREAM = 2
# Rows per scoring chunk. Fixed so batch results never depend on how
# chunks are spread over threads.
LINEAR_CHUNK = 4096
RBF_CHUNK = 64


class ClassWeighting(str, Enum):
    BALANCED = "balanced"
    NONE = "none"


@dataclass(frozen=True)
class TrainConfig:
    """
    Training knobs.

    max_passes caps SMO sweeps, one sweep being N accepted pair updates
    for the (possibly subsampled) training size N; None means 10 * N
    sweeps.
    """

    c: float = 1.0
    class_weighting: ClassWeighting = ClassWeighting.BALANCED
    tol: float = 1e-3
    max_passes: Optional[int] = None
    seed: int = 0
    max_train: int = 5000
    debug: bool = False

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_passes is not None and self.max_passes <= 0:
            raise ConfigError(f"max_passes must be positive, got {self.max_passes}")
        if self.max_train <= 0:
            raise ConfigError(f"max_train must be positive, got {self.max_train}")


@dataclass(frozen=True)
class SvmModel:
    """Immutable trained discriminant."""

    kernel: KernelSpec
    support_vectors: Tuple[Tuple[float, ...], ...]
    coefficients: Tuple[float, ...]
    bias: float
    stats: StandardizationStats
    schema: FeatureSchema

    def __post_init__(self) -> None:
        if len(self.coefficients) != len(self.support_vectors):
            raise DimensionMismatch(
                f"{len(self.coefficients)} coefficients for "
                f"{len(self.support_vectors)} support vectors"
            )
        if self.stats.count != self.schema.count:
            raise DimensionMismatch("standardization width differs from schema")
        for sv in self.support_vectors:
            if len(sv) != self.schema.count:
                raise DimensionMismatch(
                    f"support vector of length {len(sv)}, schema has {self.schema.count}"
                )

    @cached_property
    def sv_matrix(self) -> np.ndarray:
        if not self.support_vectors:
            return np.zeros((0, self.schema.count), dtype=np.float64)
        return np.array(self.support_vectors, dtype=np.float64)

    @cached_property
    def coef_vector(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=np.float64)

    @cached_property
    def weights(self) -> np.ndarray:
        """Primal weight vector w = sum coeff_i sv_i (linear kernel only)."""
        return self.coef_vector @ self.sv_matrix

    @property
    def support_count(self) -> int:
        return len(self.coefficients)


def class_costs(
    decisions: np.ndarray, c: float, weighting: ClassWeighting
) -> np.ndarray:
    """
    Per-example upper bounds C_i.

    Balanced: the minority class gets C * N_majority / N_minority, the
    majority class keeps C. Equal class sizes leave every bound at C.
    """
    costs = np.full(decisions.shape[0], float(c), dtype=np.float64)
    if weighting == ClassWeighting.NONE:
        return costs
    n_pos = int(np.count_nonzero(decisions == 1))
    n_neg = decisions.shape[0] - n_pos
    if n_pos == n_neg:
        return costs
    minority = 1 if n_pos < n_neg else 0
    n_min, n_maj = min(n_pos, n_neg), max(n_pos, n_neg)
    costs[decisions == minority] = c * (n_maj / n_min)
    return costs


def subsample_majority(decisions: np.ndarray, max_train: int, seed: int) -> np.ndarray:
    """
    Row positions kept for training, in ascending order.

    All minority rows are kept; the majority is drawn without replacement
    by a generator seeded from `seed` until max_train rows are reached.
    """
    n = decisions.shape[0]
    if n <= max_train:
        return np.arange(n)
    n_pos = int(np.count_nonzero(decisions == 1))
    minority = 1 if n_pos <= n - n_pos else 0
    minority_rows = np.flatnonzero(decisions == minority)
    majority_rows = np.flatnonzero(decisions != minority)
    keep = max(max_train - minority_rows.size, 1)
    rng = np.random.default_rng([seed, SUBSAMPLE_STREAM])
    chosen = rng.choice(majority_rows.size, size=min(keep, majority_rows.size), replace=False)
    return np.sort(np.concatenate([minority_rows, majority_rows[chosen]]))


def train(
    train_set: Dataset,
    kernel: KernelSpec,
    config: TrainConfig = TrainConfig(),
) -> Tuple[SvmModel, SolveDiagnostics]:
    """
    Fit the soft-margin SVM on a dataset of (state, decision) examples.

    Raises:
        SingleClassData: the training set holds only one decision value
    """
    decisions = train_set.decisions
    if len(train_set) == 0 or np.unique(decisions).size < 2:
        raise SingleClassData(
            "training data must contain both order and no-order decisions"
        )

    stats = fit_standardizer(train_set)
    rows = subsample_majority(decisions, config.max_train, config.seed)
    if rows.size < len(train_set):
        logger.info(
            "subsampled majority class: training on %d of %d rows",
            rows.size, len(train_set),
        )
    matrix = standardize_matrix(stats, train_set.features[rows])
    kept = decisions[rows]
    signs = 2.0 * kept.astype(np.float64) - 1.0
    costs = class_costs(kept, config.c, config.class_weighting)
    sweeps = config.max_passes if config.max_passes is not None else 10 * rows.size

    solution = solve_dual(
        matrix, signs, costs, kernel,
        tol=config.tol, max_passes=sweeps * rows.size, debug=config.debug,
    )
    support = np.flatnonzero(solution.alphas > 0.0)
    model = SvmModel(
        kernel=kernel,
        support_vectors=tuple(tuple(row) for row in matrix[support].tolist()),
        coefficients=tuple((solution.alphas[support] * signs[support]).tolist()),
        bias=solution.bias,
        stats=stats,
        schema=train_set.schema,
    )
    return model, solution.diagnostics


def discriminant(model: SvmModel, state: PatientState) -> float:
    """
    f(x) for one raw (unstandardized) state.

    Raises:
        DimensionMismatch: state width differs from the model schema
    """
    if len(state.features) != model.schema.count:
        raise DimensionMismatch(
            f"state has {len(state.features)} features, model expects {model.schema.count}"
        )
    return float(discriminant_matrix(model, np.asarray([state.features]))[0])


def discriminant_matrix(
    model: SvmModel, features: np.ndarray, threads: int = 1
) -> np.ndarray:
    """
    f(x) for every row of a raw (n, K) feature matrix.

    Rows are processed in fixed-size chunks; `threads` only changes how
    chunks are scheduled, never the values.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.schema.count:
        raise DimensionMismatch(
            f"feature matrix of shape {features.shape}, model expects "
            f"{model.schema.count} columns"
        )
    z = standardize_matrix(model.stats, features)
    chunk = LINEAR_CHUNK if model.kernel.kind == KernelKind.LINEAR else RBF_CHUNK
    starts = range(0, z.shape[0], chunk)

    def run(start: int) -> np.ndarray:
        return _chunk_values(model, z[start:start + chunk])

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    if not parts:
        return np.zeros(0, dtype=np.float64)
    return np.concatenate(parts)


def _chunk_values(model: SvmModel, z: np.ndarray) -> np.ndarray:
    if model.support_count == 0:
        return np.full(z.shape[0], model.bias, dtype=np.float64)
    if model.kernel.kind == KernelKind.LINEAR:
        return z @ model.weights + model.bias
    block = kernel_block(model.kernel, z, model.sv_matrix)
    return block @ model.coef_vector + model.bias
