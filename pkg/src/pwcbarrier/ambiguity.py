"""Worst-case expectation over interval-constrained probability simplices.

The set ``{p : lower <= p <= upper, sum(p) = 1}`` is the feasible region of a
tiny LP. Its maximiser for a linear objective is found greedily: start from
``lower`` and pour the remaining mass into the entries with the largest
coefficients first.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionMismatch, DimensionTooLarge, InfeasibleRow

FEAS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AmbiguityRow:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).ravel()
        hi = np.array(self.upper, dtype=float).ravel()
        if lo.shape != hi.shape or lo.size == 0:
            raise DimensionMismatch("lower and upper must be nonempty and the same length")
        if np.any(lo < -FEAS_TOL) or np.any(hi > 1 + FEAS_TOL) or np.any(lo > hi + FEAS_TOL):
            raise InfeasibleRow("need 0 <= lower <= upper <= 1")
        if lo.sum() > 1 + FEAS_TOL or hi.sum() < 1 - FEAS_TOL:
            raise InfeasibleRow(f"empty ambiguity set: sum(lower)={lo.sum()}, sum(upper)={hi.sum()}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __len__(self) -> int:
        return self.lower.size

    def contains(self, p: np.ndarray, tol: float = 1e-12) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(
            np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol) and abs(p.sum() - 1) <= tol
        )


@dataclass(frozen=True)
class WorstCaseResult:
    value: float
    distribution: np.ndarray


def greedy_fill(coefficients: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Maximising distributions for many rows sharing one coefficient vector.

    ``lower``/``upper`` have shape (rows, m). Returns an array of the same
    shape. Ties in ``coefficients`` go to the lower index.
    """
    order = np.argsort(-np.asarray(coefficients, dtype=float), kind="stable")
    lo = lower[:, order]
    slack = np.maximum(upper[:, order] - lo, 0.0)
    budget = np.maximum(1.0 - lower.sum(axis=1), 0.0)
    before = np.cumsum(slack, axis=1) - slack
    fill = np.clip(budget[:, None] - before, 0.0, slack)
    p = np.empty_like(lo)
    p[:, order] = lo + fill
    return p


def worst_case_expectation(coefficients, row: AmbiguityRow) -> WorstCaseResult:
    c = np.asarray(coefficients, dtype=float).ravel()
    if c.size != len(row):
        raise DimensionMismatch(f"{c.size} coefficients for a row of length {len(row)}")
    p = greedy_fill(c, row.lower[None, :], row.upper[None, :])[0]
    return WorstCaseResult(float(c @ p), p)


def _vertex_enumeration(c: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    # A vertex of box-cut-by-hyperplane has all but at most one coordinate at a bound.
    m = c.size
    best = -np.inf
    for free in range(m):
        others = [k for k in range(m) if k != free]
        for pattern in itertools.product((0, 1), repeat=m - 1):
            p = np.empty(m)
            for k, bit in zip(others, pattern):
                p[k] = hi[k] if bit else lo[k]
            p[free] = 1.0 - p[others].sum() if others else 1.0
            if lo[free] - FEAS_TOL <= p[free] <= hi[free] + FEAS_TOL:
                best = max(best, float(c @ p))
    return best


def _lp_value(c: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    res = linprog(
        -c,
        A_eq=np.ones((1, c.size)),
        b_eq=[1.0],
        bounds=list(zip(lo, hi)),
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise InfeasibleRow(f"reference LP failed: {res.message}")
    return float(-res.fun)


def brute_force_oracle(coefficients, row: AmbiguityRow, tol: float = 1e-9) -> float:
    """Reference maximum by vertex enumeration, cross-checked with a generic LP.

    Test-only; exponential in the row length.
    """
    c = np.asarray(coefficients, dtype=float).ravel()
    if c.size != len(row):
        raise DimensionMismatch(f"{c.size} coefficients for a row of length {len(row)}")
    if c.size > 12:
        raise DimensionTooLarge(f"oracle supports rows of length <= 12, got {c.size}")
    enum = _vertex_enumeration(c, row.lower, row.upper)
    lp = _lp_value(c, row.lower, row.upper)
    if abs(enum - lp) > tol:
        raise AssertionError(f"oracle disagreement: enumeration {enum!r} vs LP {lp!r}")
    return enum
