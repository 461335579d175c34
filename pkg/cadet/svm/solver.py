"""
SMO dual solver for the soft-margin SVM with per-example costs.

Solves, in the minimisation form used throughout this module,

    min_a  1/2 a'Qa - e'a     s.t.  0 <= a_i <= C_i,  s'a = 0,

with Q_ij = s_i s_j K(x_i, x_j). The reported dual objective is the
maximisation form D(a) = e'a - 1/2 a'Qa.

Working-set selection takes the maximal violating pair: with
G = Qa - e and v_t = -s_t G_t,

    I_up  = {t : a_t < C_t, s_t = +1} U {t : a_t > 0, s_t = -1}
    I_low = {t : a_t < C_t, s_t = -1} U {t : a_t > 0, s_t = +1}

i = argmax over I_up of v, j = argmin over I_low of v. The pair is
moved along d = (s_i e_i - s_j e_j), which keeps s'a fixed, by the
largest step the box allows up to the unconstrained optimum. The solver
stops when v_i - v_j < tol.

Only two kernel columns are needed per update, so the Gram matrix is
never materialised; recently used columns are kept in a small LRU cache.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from cadet.errors import InfeasibleAlphas, SolverInvariantError
from cadet.svm.kernels import KernelSpec, kernel_column, kernel_diagonal

logger = logging.getLogger(__name__)

# Curvature floor for non-positive-definite pairs (duplicate points).
TAU = 1e-12
FEASIBILITY_TOL = 1e-9
CACHE_COLUMNS = 512
LOG_EVERY = 1000

ArrayLike = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class SolveDiagnostics:
    """How the dual solve went; non-convergence is reported here, not raised."""

    dual_objective: float
    max_kkt_violation: float
    passes: int
    support_count: int
    converged: bool = True


@dataclass
class DualSolution:
    alphas: np.ndarray
    bias: float
    gradient: np.ndarray
    diagnostics: SolveDiagnostics


class _ColumnCache:
    """LRU cache of kernel columns K(:, i)."""

    def __init__(self, kernel: KernelSpec, matrix: np.ndarray, capacity: int):
        self._kernel = kernel
        self._matrix = matrix
        self._capacity = capacity
        self._columns: "OrderedDict[int, np.ndarray]" = OrderedDict()

    def column(self, i: int) -> np.ndarray:
        col = self._columns.get(i)
        if col is not None:
            self._columns.move_to_end(i)
            return col
        col = kernel_column(self._kernel, self._matrix, self._matrix[i])
        self._columns[i] = col
        if len(self._columns) > self._capacity:
            self._columns.popitem(last=False)
        return col


def solve_dual(
    matrix: np.ndarray,
    signs: np.ndarray,
    costs: np.ndarray,
    kernel: KernelSpec,
    tol: float,
    max_passes: int,
    debug: bool = False,
) -> DualSolution:
    """
    Run SMO to tolerance `tol` or until `max_passes` pair updates.

    Args:
        matrix: (n, K) training inputs (already standardized)
        signs: (n,) labels in {-1, +1}
        costs: (n,) per-example upper bounds C_i
        kernel: kernel kind and parameters
        tol: stopping gap on the maximal violating pair
        max_passes: cap on accepted pair updates
        debug: verify the dual objective never decreases

    Raises:
        SolverInvariantError: debug mode found a decreasing update
    """
    n = matrix.shape[0]
    signs = np.asarray(signs, dtype=np.float64)
    costs = np.asarray(costs, dtype=np.float64)
    alphas = np.zeros(n, dtype=np.float64)
    grad = -np.ones(n, dtype=np.float64)
    diag = kernel_diagonal(kernel, matrix)
    cache = _ColumnCache(kernel, matrix, CACHE_COLUMNS)

    passes = 0
    converged = False
    objective = 0.0
    while True:
        i, j, gap = _select_pair(alphas, grad, signs, costs)
        if gap < tol:
            converged = True
            break
        if passes >= max_passes:
            break

        col_i = cache.column(i)
        col_j = cache.column(j)
        eta = diag[i] + diag[j] - 2.0 * col_i[j]
        if eta <= 0.0:
            eta = TAU

        bound_i = costs[i] - alphas[i] if signs[i] > 0 else alphas[i]
        bound_j = alphas[j] if signs[j] > 0 else costs[j] - alphas[j]
        step = min(gap / eta, bound_i, bound_j)

        alphas[i] += signs[i] * step
        alphas[j] -= signs[j] * step
        # Land exactly on the box when the step was clipped by it.
        if step == bound_i:
            alphas[i] = costs[i] if signs[i] > 0 else 0.0
        if step == bound_j:
            alphas[j] = 0.0 if signs[j] > 0 else costs[j]

        grad += signs * step * (col_i - col_j)
        passes += 1

        if debug:
            updated = _objective_from_gradient(alphas, grad)
            if updated < objective - 1e-12 * max(1.0, abs(objective)):
                raise SolverInvariantError(
                    f"dual objective decreased at update {passes}: "
                    f"{objective!r} -> {updated!r}"
                )
            objective = updated
            balance = float(np.dot(alphas, signs))
            if abs(balance) > FEASIBILITY_TOL:
                raise SolverInvariantError(
                    f"equality constraint drifted to {balance!r} at update {passes}"
                )

        if passes % LOG_EVERY == 0:
            logger.debug(
                "smo update %d: gap %.3e objective %.6f",
                passes, gap, _objective_from_gradient(alphas, grad),
            )

    bias = _bias(alphas, grad, signs, costs)
    violation = _kkt_violation_from_gradient(alphas, grad, signs, costs, bias)
    diagnostics = SolveDiagnostics(
        dual_objective=_objective_from_gradient(alphas, grad),
        max_kkt_violation=violation,
        passes=passes,
        support_count=int(np.count_nonzero(alphas > 0.0)),
        converged=converged,
    )
    if converged:
        logger.info(
            "smo converged after %d updates, %d support vectors, violation %.3e",
            passes, diagnostics.support_count, violation,
        )
    else:
        logger.warning(
            "smo stopped at the update cap (%d) with violation %.3e > tol %.3e",
            passes, violation, tol,
        )
    return DualSolution(alphas=alphas, bias=bias, gradient=grad, diagnostics=diagnostics)


def _violation_sets(
    alphas: np.ndarray, signs: np.ndarray, costs: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    below_cap = alphas < costs
    above_zero = alphas > 0.0
    positive = signs > 0
    up = (positive & below_cap) | (~positive & above_zero)
    low = (~positive & below_cap) | (positive & above_zero)
    return up, low


def _select_pair(
    alphas: np.ndarray, grad: np.ndarray, signs: np.ndarray, costs: np.ndarray
) -> Tuple[int, int, float]:
    """Maximal violating pair (i, j) and its gap v_i - v_j."""
    up, low = _violation_sets(alphas, signs, costs)
    if not up.any() or not low.any():
        return -1, -1, float("-inf")
    values = -signs * grad
    i = int(np.argmax(np.where(up, values, -np.inf)))
    j = int(np.argmin(np.where(low, values, np.inf)))
    return i, j, float(values[i] - values[j])


def _bias(
    alphas: np.ndarray, grad: np.ndarray, signs: np.ndarray, costs: np.ndarray
) -> float:
    """
    Bias b of f(x) = sum a_i s_i K(x_i, x) + b.

    Free vectors satisfy s f = 1 exactly, i.e. b = v_t; average them.
    With no free vector b is the midpoint of the feasible interval
    [max over I_up of v, min over I_low of v].
    """
    values = -signs * grad
    free = (alphas > 0.0) & (alphas < costs)
    if free.any():
        return float(np.mean(values[free]))
    up, low = _violation_sets(alphas, signs, costs)
    lower = float(values[up].max()) if up.any() else None
    upper = float(values[low].min()) if low.any() else None
    if lower is None and upper is None:
        return 0.0
    if lower is None:
        return float(upper)  # type: ignore[arg-type]
    if upper is None:
        return lower
    return 0.5 * (lower + upper)


def _objective_from_gradient(alphas: np.ndarray, grad: np.ndarray) -> float:
    # Qa = G + e, so e'a - 1/2 a'Qa = 1/2 a'(e - G).
    return float(0.5 * np.dot(alphas, 1.0 - grad))


def _kkt_violation_from_gradient(
    alphas: np.ndarray,
    grad: np.ndarray,
    signs: np.ndarray,
    costs: np.ndarray,
    bias: float,
) -> float:
    if alphas.size == 0:
        return 0.0
    # s_t f_t - 1 = G_t + s_t b
    slack = grad + signs * bias
    at_zero = alphas <= 0.0
    at_cap = alphas >= costs
    free = ~(at_zero | at_cap)
    violation = np.zeros_like(alphas)
    violation[at_zero] = np.maximum(0.0, -slack[at_zero])
    violation[at_cap] = np.maximum(0.0, slack[at_cap])
    violation[free] = np.abs(slack[free])
    return float(violation.max())


def as_signs(labels: ArrayLike) -> np.ndarray:
    """Labels as +1/-1; 0/1 decisions are mapped through s = 2y - 1."""
    arr = np.asarray(labels, dtype=np.float64)
    if arr.size and np.all((arr == 0.0) | (arr == 1.0)) and np.any(arr == 0.0):
        return 2.0 * arr - 1.0
    if not np.all((arr == 1.0) | (arr == -1.0)):
        raise InfeasibleAlphas("labels must be +1/-1 or 0/1")
    return arr


def check_feasible(
    alphas: np.ndarray, signs: np.ndarray, costs: Optional[np.ndarray] = None
) -> None:
    """
    Raises:
        InfeasibleAlphas: a_i < 0, a_i > C_i or |s'a| > 1e-9
    """
    if alphas.shape != signs.shape:
        raise InfeasibleAlphas(
            f"{alphas.size} coefficients for {signs.size} labels"
        )
    if np.any(alphas < -FEASIBILITY_TOL):
        raise InfeasibleAlphas("negative dual coefficient")
    if costs is not None and np.any(alphas > costs + FEASIBILITY_TOL):
        raise InfeasibleAlphas("dual coefficient above its cost bound")
    balance = float(np.dot(alphas, signs))
    if abs(balance) > FEASIBILITY_TOL:
        raise InfeasibleAlphas(f"equality constraint violated: s'a = {balance!r}")


def dual_objective(
    alphas: ArrayLike,
    labels: ArrayLike,
    gram: np.ndarray,
    costs: Optional[ArrayLike] = None,
) -> float:
    """
    Exact dual value sum(a) - 1/2 sum_ij a_i a_j s_i s_j K_ij.

    Raises:
        InfeasibleAlphas: alphas outside the feasible set
    """
    a = np.asarray(alphas, dtype=np.float64)
    s = as_signs(labels)
    c = None if costs is None else np.asarray(costs, dtype=np.float64)
    check_feasible(a, s, c)
    weighted = a * s
    return float(a.sum() - 0.5 * weighted @ np.asarray(gram) @ weighted)


def max_kkt_violation(
    alphas: ArrayLike,
    labels: ArrayLike,
    gram: np.ndarray,
    bias: float,
    costs: ArrayLike,
) -> float:
    """
    Largest KKT violation over the training examples for a given bias.

    With f_t = sum_i a_i s_i K_it + b and m_t = s_t f_t: points at a = 0
    need m >= 1, points at a = C need m <= 1, free points need m = 1.

    Raises:
        InfeasibleAlphas: alphas outside the feasible set
    """
    a = np.asarray(alphas, dtype=np.float64)
    s = as_signs(labels)
    c = np.asarray(costs, dtype=np.float64)
    check_feasible(a, s, c)
    grad = s * (np.asarray(gram) @ (a * s)) - 1.0
    return _kkt_violation_from_gradient(a, grad, s, c, bias)


def bias_for(
    alphas: ArrayLike, labels: ArrayLike, gram: np.ndarray, costs: ArrayLike
) -> float:
    """Bias the solver would assign to a given feasible dual point."""
    a = np.asarray(alphas, dtype=np.float64)
    s = as_signs(labels)
    c = np.asarray(costs, dtype=np.float64)
    grad = s * (np.asarray(gram) @ (a * s)) - 1.0
    return _bias(a, grad, s, c)
