"""Sound interval bounds on the Gaussian transition kernel between grid cells.

For a fixed mean ``m`` the probability of landing in a box is a product of
one-dimensional masses ``g(m) = Phi((u - m)/s) - Phi((l - m)/s)``. Each
factor is unimodal in ``m`` with its peak at the interval midpoint, so the
extrema over a mean interval need only a clamped midpoint and the two
endpoints. Because the factors are nonnegative and depend on disjoint
coordinates, the extrema of the product over a mean box are the products of
the per-axis extrema.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .dynamics import PwaInclusionDynamics
from .errors import DimensionMismatch, InfeasibleRow, InvertedInterval, NonPositiveSigma
from .geometry import Partition

_SQRT2 = np.sqrt(2.0)
ROW_TOL = 1e-12


def _mass(lo, hi, mean, sigma):
    """Vectorised Gaussian interval mass, differencing only small tails."""
    a = (np.asarray(lo, dtype=float) - mean) / sigma
    b = (np.asarray(hi, dtype=float) - mean) / sigma
    a, b = np.broadcast_arrays(a, b)
    out = np.empty(a.shape)
    right = a >= 0
    left = b <= 0
    mid = ~(right | left)
    # Right of the mean: both upper tails are small, subtract those.
    out[right] = 0.5 * (erfc(a[right] / _SQRT2) - erfc(b[right] / _SQRT2))
    out[left] = 0.5 * (erfc(-b[left] / _SQRT2) - erfc(-a[left] / _SQRT2))
    out[mid] = 1.0 - 0.5 * (erfc(-a[mid] / _SQRT2) + erfc(b[mid] / _SQRT2))
    return np.clip(out, 0.0, 1.0)


def gaussian_mass(interval_low: float, interval_high: float, mean: float, sigma: float) -> float:
    """P(l <= X <= u) for X ~ N(mean, sigma^2)."""
    if interval_low > interval_high:
        raise InvertedInterval(f"interval [{interval_low}, {interval_high}] is inverted")
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    return float(_mass(interval_low, interval_high, mean, sigma))


def _factor_extrema(t_lo, t_hi, m_lo, m_hi, sigma):
    mid = 0.5 * (t_lo + t_hi)
    peak = np.clip(mid, m_lo, m_hi)
    fmax = _mass(t_lo, t_hi, peak, sigma)
    fmin = np.minimum(_mass(t_lo, t_hi, m_lo, sigma), _mass(t_lo, t_hi, m_hi, sigma))
    return fmin, fmax


def factor_bounds(
    target_low: float, target_high: float, mean_low: float, mean_high: float, sigma: float
) -> tuple[float, float]:
    """(min, max) of the 1-D Gaussian mass of a target interval as the mean ranges."""
    if target_low > target_high:
        raise InvertedInterval(f"target [{target_low}, {target_high}] is inverted")
    if mean_low > mean_high:
        raise InvertedInterval(f"mean interval [{mean_low}, {mean_high}] is inverted")
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    fmin, fmax = _factor_extrema(target_low, target_high, mean_low, mean_high, sigma)
    return float(fmin), float(fmax)


@dataclass(frozen=True, eq=False)
class TransitionBounds:
    """Interval transition matrix over ``n_regions`` cells plus an unsafe column.

    ``lower``/``upper`` have shape (n, n + 1); column ``n`` is the unsafe
    sink. Rows of unsafe-flagged cells are absorbing (all mass on the sink)
    and columns of unsafe-flagged cells are zero, their mass being folded
    into the sink.
    """

    lower: np.ndarray
    upper: np.ndarray
    sigma: tuple[float, ...] = ()
    dynamics: str = ""
    partition_hash: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        if lo.ndim != 2 or lo.shape[1] != lo.shape[0] + 1 or hi.shape != lo.shape:
            raise DimensionMismatch(f"bounds must be n x (n+1), got {lo.shape} and {hi.shape}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "sigma", tuple(float(s) for s in self.sigma))

    @property
    def n_regions(self) -> int:
        return self.lower.shape[0]

    def check_feasible(self, tol: float = ROW_TOL) -> None:
        lo, hi = self.lower, self.upper
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InfeasibleRow("bounds contain non-finite entries")
        bad = np.argwhere((lo < 0) | (hi > 1) | (lo > hi))
        if bad.size:
            i, j = bad[0]
            raise InfeasibleRow(f"entry ({i}, {j}) violates 0 <= lower <= upper <= 1", row=int(i))
        slo, shi = lo.sum(axis=1), hi.sum(axis=1)
        for i in np.flatnonzero((slo > 1 + tol) | (shi < 1 - tol)):
            raise InfeasibleRow(
                f"row {i}: sum(lower) = {slo[i]!r}, sum(upper) = {shi[i]!r}; need sum(lower) <= 1 <= sum(upper)",
                row=int(i),
            )

    def identical(self, other: "TransitionBounds") -> bool:
        """Bitwise equality of both matrices and all metadata."""
        return (
            self.lower.shape == other.lower.shape
            and self.lower.tobytes() == other.lower.tobytes()
            and self.upper.tobytes() == other.upper.tobytes()
            and self.sigma == other.sigma
            and self.dynamics == other.dynamics
            and self.partition_hash == other.partition_hash
        )

    def fingerprint(self) -> str:
        h = hashlib.sha256(self.lower.tobytes())
        h.update(self.upper.tobytes())
        return h.hexdigest()


def _rows(dyn: PwaInclusionDynamics, partition: Partition, rows: np.ndarray, mlo, mhi):
    """Bounds for source cells ``rows`` against every target cell and the space box."""
    n_cells = partition.n_cells
    sigma = dyn.noise.array
    shape = (len(rows),) + partition.cells_per_dim
    up = np.ones(shape)
    low = np.ones(shape)
    box_up = np.ones(len(rows))
    box_low = np.ones(len(rows))
    for d in range(partition.dim):
        e = np.asarray(partition.edges[d])
        m_lo = mlo[rows, d][:, None]
        m_hi = mhi[rows, d][:, None]
        fmin, fmax = _factor_extrema(e[None, :-1], e[None, 1:], m_lo, m_hi, sigma[d])
        bshape = [len(rows)] + [1] * partition.dim
        bshape[d + 1] = partition.cells_per_dim[d]
        up *= fmax.reshape(bshape)
        low *= fmin.reshape(bshape)
        smin, smax = _factor_extrema(e[0], e[-1], m_lo[:, 0], m_hi[:, 0], sigma[d])
        box_up *= smax
        box_low *= smin
    return low.reshape(len(rows), n_cells), up.reshape(len(rows), n_cells), box_low, box_up


def compute_transition_bounds(
    dyn: PwaInclusionDynamics, partition: Partition, threads: int = 1
) -> TransitionBounds:
    if not dyn.matches(partition):
        raise DimensionMismatch("dynamics regions do not coincide with the partition cells")
    n = partition.n_cells
    mlo, mhi = dyn.image_hulls()
    unsafe = partition.unsafe_mask
    safe_rows = np.flatnonzero(~unsafe)

    lower = np.zeros((n, n + 1))
    upper = np.zeros((n, n + 1))

    def work(rows: np.ndarray) -> None:
        low, up, box_low, box_up = _rows(dyn, partition, rows, mlo, mhi)
        # Mass landing in unsafe-flagged cells belongs to the sink.
        uns_low = low[:, unsafe].sum(axis=1)
        uns_up = up[:, unsafe].sum(axis=1)
        low[:, unsafe] = 0.0
        up[:, unsafe] = 0.0
        safe_low = np.maximum(box_low - uns_up, low.sum(axis=1))
        safe_up = np.minimum(box_up - uns_low, up.sum(axis=1))
        safe_low = np.clip(safe_low, 0.0, 1.0)
        safe_up = np.clip(safe_up, 0.0, 1.0)
        lower[rows, :n] = low
        upper[rows, :n] = up
        lower[rows, n] = np.maximum(0.0, 1.0 - safe_up)
        upper[rows, n] = np.minimum(1.0, 1.0 - safe_low)

    if len(safe_rows):
        chunks = np.array_split(safe_rows, max(1, min(threads, len(safe_rows))) * 4)
        chunks = [c for c in chunks if len(c)]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(work, chunks))
        else:
            for c in chunks:
                work(c)
    # Unsafe cells are absorbing.
    lower[unsafe, n] = 1.0
    upper[unsafe, n] = 1.0

    np.clip(lower, 0.0, 1.0, out=lower)
    np.clip(upper, 0.0, 1.0, out=upper)
    bounds = TransitionBounds(
        lower,
        upper,
        sigma=dyn.noise.sigma,
        dynamics=dyn.descriptor,
        partition_hash=partition.digest(),
        metadata={"image_relaxation": "interval_hull", "unsafe_column": "complement_of_safe_mass"},
    )
    bounds.check_feasible()
    return bounds
