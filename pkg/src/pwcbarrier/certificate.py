"""Exact checking of piecewise-constant barriers and empirical validation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.stats import beta as beta_dist

from .ambiguity import greedy_fill
from .barrier import PwcBarrier
from .dynamics import LinearDynamics
from .errors import DimensionMismatch, LengthMismatch, NegativeInput
from .geometry import Hyperrectangle, Partition
from .transition_bounds import TransitionBounds


def row_expectations(values: np.ndarray, bounds: TransitionBounds, rows: np.ndarray | None = None):
    """Worst-case next-step barrier expectation per row, with the witnesses."""
    coeff = np.append(values, 1.0)
    lo, hi = bounds.lower, bounds.upper
    if rows is not None:
        lo, hi = lo[rows], hi[rows]
    p = greedy_fill(coeff, lo, hi)
    return p @ coeff, p


def evaluate_certificate(
    barrier: PwcBarrier, bounds: TransitionBounds, partition: Partition
) -> tuple[float, float, np.ndarray]:
    """Smallest (eta, beta) for which ``barrier`` satisfies every constraint."""
    barrier.check(partition)
    if bounds.n_regions != partition.n_cells:
        raise LengthMismatch(f"bounds have {bounds.n_regions} rows, partition {partition.n_cells} cells")
    b = barrier.values
    init = sorted(partition.initial_cell_indices)
    eta = float(b[init].max()) if init else 0.0
    beta_i = np.zeros(partition.n_cells)
    safe = partition.safe_indices
    if safe.size:
        _, p = row_expectations(b, bounds, safe)
        # sum_j p_j (c_j - b_i) uses sum(p) = 1 exactly, so a constant barrier gives beta = 0.
        coeff = np.append(b, 1.0)
        beta_i[safe] = np.maximum(0.0, np.einsum("rj,rj->r", p, coeff[None, :] - b[safe, None]))
    return eta, float(beta_i.max(initial=0.0)), beta_i


def psafe(eta: float, beta: float, N: int) -> float:
    """Lower bound ``1 - (eta + N beta)`` on N-step safety, clamped to [0, 1]."""
    if eta < 0 or beta < 0:
        raise NegativeInput(f"eta and beta must be nonnegative, got {eta}, {beta}")
    if N < 1:
        raise NegativeInput(f"horizon must be positive, got {N}")
    return max(0.0, min(1.0, 1.0 - (eta + N * beta)))


def barrier_value(barrier: PwcBarrier, partition: Partition, x: Sequence[float]) -> float:
    idx = partition.locate(x)
    if idx is None or partition.unsafe_cell_flags[idx]:
        return 1.0
    return float(barrier.values[idx])


@dataclass(frozen=True)
class ValidationReport:
    samples: int
    violations: int
    empirical_safety: float
    confidence_lower: float
    certified: float
    consistent: bool
    margin: float
    initial_points: int
    worst_point_safety: float
    generator: str = "numpy PCG64 via SeedSequence([seed, point_index])"

    def to_dict(self) -> dict:
        return asdict(self)


def initial_points(initial: Hyperrectangle, per_dim: int = 5) -> np.ndarray:
    """Regular grid over the initial box; includes every vertex."""
    axes = [np.linspace(lo, hi, per_dim) if hi > lo else np.array([lo]) for lo, hi in zip(initial.low, initial.high)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _simulate_point(dyn, x0, count, N, space, unsafe, rng) -> int:
    x = np.tile(x0, (count, 1))
    bad = np.zeros(count, dtype=bool)
    sigma = dyn.noise.array

    def hit(states):
        out = np.any((states < space.lows) | (states > space.highs), axis=1)
        for u in unsafe:
            out |= np.all((states >= u.lows) & (states <= u.highs), axis=1)
        return out

    bad |= hit(x)
    for _ in range(N):
        x = dyn(x) + rng.standard_normal(x.shape) * sigma
        bad |= hit(x)
    return int(bad.sum())


def validate_monte_carlo(
    dyn: LinearDynamics,
    partition: Partition,
    initial: Hyperrectangle,
    N: int,
    samples: int,
    seed: int,
    certified: float,
    unsafe: Sequence[Hyperrectangle] = (),
    grid_per_dim: int = 5,
) -> ValidationReport:
    """Simulate trajectories and test the certified bound for contradiction.

    Trajectories start from a grid over ``initial``; each start point uses
    its own stream seeded by ``(seed, point_index)`` so results do not depend
    on evaluation order.
    """
    if samples < 1000:
        raise ValueError("at least 1000 samples are required")
    if dyn.dim != partition.dim or initial.dim != partition.dim:
        raise DimensionMismatch("dynamics, partition and initial region dimensions differ")
    if not 0 <= certified <= 1:
        raise ValueError(f"certified probability {certified} outside [0, 1]")
    starts = initial_points(initial, grid_per_dim)
    k = len(starts)
    counts = np.full(k, samples // k)
    counts[: samples % k] += 1
    violations = np.zeros(k, dtype=int)
    for idx, (x0, cnt) in enumerate(zip(starts, counts)):
        if cnt == 0:
            continue
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, idx])))
        violations[idx] = _simulate_point(dyn, x0, int(cnt), N, partition.space, list(unsafe), rng)

    total_bad = int(violations.sum())
    safe_count = samples - total_bad
    empirical = safe_count / samples
    # One-sided 99% Clopper-Pearson lower bound on the safety probability.
    conf_lower = 0.0 if safe_count == 0 else float(beta_dist.ppf(0.01, safe_count, total_bad + 1))
    margin = 3.0 * math.sqrt(certified * (1.0 - certified) / samples) + 1e-3
    consistent = certified <= 1.0 and total_bad / samples <= 1.0 - certified + margin
    per_point = 1.0 - violations / np.maximum(counts, 1)
    return ValidationReport(
        samples=samples,
        violations=total_bad,
        empirical_safety=empirical,
        confidence_lower=conf_lower,
        certified=float(certified),
        consistent=bool(consistent),
        margin=margin,
        initial_points=k,
        worst_point_safety=float(per_point.min()),
    )
