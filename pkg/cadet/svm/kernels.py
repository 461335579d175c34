"""
Kernel functions.

Both kernels are written so that K(a, b) and K(b, a) evaluate the same
floating-point operations in the same order: the dot product multiplies
elementwise (commutative) and sums in index order; the RBF kernel sums
squared differences, and (a - b)**2 == (b - a)**2 exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from cadet.errors import ConfigError, DimensionMismatch

VectorLike = Union[Sequence[float], np.ndarray]


class KernelKind(str, Enum):
    LINEAR = "linear"
    RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice; gamma is required (and positive) for rbf only."""

    kind: KernelKind = KernelKind.LINEAR
    gamma: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind == KernelKind.RBF:
            if self.gamma is None or not self.gamma > 0:
                raise ConfigError(f"rbf kernel requires gamma > 0, got {self.gamma}")
        elif self.gamma is not None:
            raise ConfigError("gamma only applies to the rbf kernel")

    @staticmethod
    def linear() -> "KernelSpec":
        return KernelSpec(KernelKind.LINEAR)

    @staticmethod
    def rbf(gamma: float) -> "KernelSpec":
        return KernelSpec(KernelKind.RBF, float(gamma))

    @staticmethod
    def default_rbf(feature_count: int) -> "KernelSpec":
        """RBF with gamma = 1 / feature_count (for standardized data)."""
        return KernelSpec.rbf(1.0 / feature_count)

    def describe(self) -> str:
        if self.kind == KernelKind.RBF:
            return f"rbf {self.gamma!r}"
        return "linear"


def kernel_eval(kernel: KernelSpec, a: VectorLike, b: VectorLike) -> float:
    """
    K(a, b): dot product (linear) or exp(-gamma * ||a - b||^2) (rbf).

    Raises:
        DimensionMismatch: vectors of different lengths
    """
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"kernel arguments have lengths {va.size} and {vb.size}")
    if kernel.kind == KernelKind.LINEAR:
        return float(np.sum(va * vb))
    assert kernel.gamma is not None
    diff = va - vb
    return float(np.exp(-kernel.gamma * np.sum(diff * diff)))


def kernel_column(kernel: KernelSpec, matrix: np.ndarray, row: np.ndarray) -> np.ndarray:
    """K(x_t, row) for every row x_t of matrix."""
    if kernel.kind == KernelKind.LINEAR:
        return matrix @ row
    assert kernel.gamma is not None
    diff = matrix - row
    return np.exp(-kernel.gamma * np.einsum("ij,ij->i", diff, diff))


def kernel_diagonal(kernel: KernelSpec, matrix: np.ndarray) -> np.ndarray:
    """K(x_t, x_t) for every row."""
    if kernel.kind == KernelKind.LINEAR:
        return np.einsum("ij,ij->i", matrix, matrix)
    return np.ones(matrix.shape[0], dtype=np.float64)


def kernel_block(kernel: KernelSpec, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """(len(rows), len(cols)) kernel block."""
    if kernel.kind == KernelKind.LINEAR:
        return rows @ cols.T
    assert kernel.gamma is not None
    diff = rows[:, np.newaxis, :] - cols[np.newaxis, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return np.exp(-kernel.gamma * sq)


def gram_matrix(kernel: KernelSpec, matrix: np.ndarray) -> np.ndarray:
    """Dense Gram matrix built entry by entry with kernel_eval semantics."""
    n = matrix.shape[0]
    gram = np.empty((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i, n):
            gram[i, j] = gram[j, i] = kernel_eval(kernel, matrix[i], matrix[j])
    return gram
