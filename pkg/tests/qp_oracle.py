"""
Exhaustive active-set oracle for tiny soft-margin SVM duals.

Every index is guessed to sit at 0, at its cap C_i, or strictly inside
the box. For each guess the free coefficients and the bias solve the
linear KKT system

    sum_j Q_ij a_j + s_i b = 1      (i free)
    sum_j s_j a_j = 0

and feasible, consistent candidates are scored with the dual objective.
The best one is the global optimum, since the true optimum is a
stationary point of the face it lies on. Cost is 3^n solves, so this is
for n <= 6 only. Shares no code with the SMO solver.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

AT_ZERO, AT_CAP, FREE = 0, 1, 2
FEAS_TOL = 1e-9
SNAP_TOL = 1e-10


@dataclass(frozen=True)
class OracleSolution:
    alphas: np.ndarray
    objective: float
    has_free: bool


def linear_gram(x):
    return x @ x.T


def rbf_gram(x, gamma, y=None):
    y = x if y is None else y
    sq = np.sum(x * x, axis=1)[:, None] + np.sum(y * y, axis=1)[None, :] - 2.0 * x @ y.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def objective(alphas, signs, gram):
    weighted = alphas * signs
    return float(alphas.sum() - 0.5 * weighted @ gram @ weighted)


def solve(gram, signs, costs):
    """Global maximiser of the dual over {0 <= a <= C, s'a = 0}."""
    n = len(signs)
    q = signs[:, None] * signs[None, :] * gram
    best = None
    for states in product((AT_ZERO, AT_CAP, FREE), repeat=n):
        states = np.array(states)
        alphas = np.where(states == AT_CAP, costs, 0.0).astype(float)
        free = np.flatnonzero(states == FREE)
        if free.size:
            # unknowns: a_free..., b
            k = free.size
            a = np.zeros((k + 1, k + 1))
            rhs = np.zeros(k + 1)
            fixed = np.flatnonzero(states != FREE)
            a[:k, :k] = q[np.ix_(free, free)]
            a[:k, k] = signs[free]
            rhs[:k] = 1.0 - q[np.ix_(free, fixed)] @ alphas[fixed]
            a[k, :k] = signs[free]
            rhs[k] = -signs[fixed] @ alphas[fixed]
            sol, *_ = np.linalg.lstsq(a, rhs, rcond=None)
            if np.max(np.abs(a @ sol - rhs)) > 1e-8:
                continue
            alphas[free] = sol[:k]
            if np.any(alphas[free] <= FEAS_TOL) or np.any(alphas[free] >= costs[free] - FEAS_TOL):
                continue
        if abs(signs @ alphas) > FEAS_TOL:
            continue
        value = objective(alphas, signs, gram)
        if best is None or value > best.objective:
            best = OracleSolution(alphas=alphas, objective=value, has_free=bool(free.size))
    assert best is not None, "no feasible vertex"
    return best


def snap(alphas, costs):
    """Move coefficients within SNAP_TOL of a bound onto it."""
    out = alphas.copy()
    out[np.abs(out) <= SNAP_TOL] = 0.0
    near_cap = np.abs(out - costs) <= SNAP_TOL
    out[near_cap] = costs[near_cap]
    return out
