"""System models with additive diagonal Gaussian noise.

Two representations are supported: a single affine map ``f(x) = A x + b`` and
a piecewise-affine inclusion that sandwiches an unknown ``f`` between a lower
and an upper affine map on every cell of a grid partition. Downstream code
only sees the inclusion form; :func:`lift_linear_to_inclusion` converts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InconsistentBounds, IndexOutOfRange, NonPositiveSigma
from .geometry import Hyperrectangle, Partition

VERTEX_TOL = 1e-9


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must have {ndim} dimensions, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GaussianNoise:
    sigma: tuple[float, ...]

    def __post_init__(self):
        sigma = tuple(float(s) for s in np.ravel(self.sigma))
        if not sigma:
            raise DimensionMismatch("sigma must have at least one entry")
        if any(not s > 0 for s in sigma):
            raise NonPositiveSigma(f"sigma must be positive, got {list(sigma)}")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_covariance(cls, cov) -> "GaussianNoise":
        cov = np.asarray(cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise DimensionMismatch("covariance must be square")
        if np.any(cov - np.diag(np.diag(cov)) != 0):
            raise ValueError("only diagonal noise covariance is supported")
        return cls(tuple(np.sqrt(np.diag(cov))))

    @property
    def dim(self) -> int:
        return len(self.sigma)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.sigma)


@dataclass(frozen=True, eq=False)
class LinearDynamics:
    A: np.ndarray
    b: np.ndarray
    noise: GaussianNoise

    def __post_init__(self):
        A = _frozen(self.A, 2, "A")
        b = _frozen(self.b, 1, "b")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if b.shape != (n,) or self.noise.dim != n:
            raise DimensionMismatch(
                f"A is {n}x{n} but b has {b.size} entries and sigma has {self.noise.dim}"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Noiseless one-step map; ``x`` may be a batch of row vectors."""
        return np.asarray(x) @ self.A.T + self.b


@dataclass(frozen=True)
class MeanIntervalVector:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen(self.lower, 1, "lower")
        hi = _frozen(self.upper, 1, "upper")
        if lo.shape != hi.shape:
            raise DimensionMismatch("lower and upper differ in length")
        if np.any(lo > hi):
            raise ValueError("mean interval has lower > upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def __eq__(self, other):
        if not isinstance(other, MeanIntervalVector):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)


def _hull_min(A: np.ndarray, b: np.ndarray, lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    # Batched over leading axes: A (..., n, n), b/lows/highs (..., n).
    pos, neg = np.maximum(A, 0.0), np.minimum(A, 0.0)
    return b + np.einsum("...ij,...j->...i", pos, lows) + np.einsum("...ij,...j->...i", neg, highs)


def _hull_max(A: np.ndarray, b: np.ndarray, lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    pos, neg = np.maximum(A, 0.0), np.minimum(A, 0.0)
    return b + np.einsum("...ij,...j->...i", pos, highs) + np.einsum("...ij,...j->...i", neg, lows)


def image_interval_linear(dyn: LinearDynamics, cell: Hyperrectangle) -> MeanIntervalVector:
    """Interval hull of ``{A x + b : x in cell}``."""
    if cell.dim != dyn.dim:
        raise DimensionMismatch(f"cell has dimension {cell.dim}, dynamics {dyn.dim}")
    lo, hi = cell.lows, cell.highs
    return MeanIntervalVector(_hull_min(dyn.A, dyn.b, lo, hi), _hull_max(dyn.A, dyn.b, lo, hi))


@dataclass(frozen=True, eq=False)
class PwaInclusionDynamics:
    """Per-region affine bounds ``A_lower x + b_lower <= f(x) <= A_upper x + b_upper``.

    Arrays are stacked over regions: ``A_lower`` has shape (R, n, n) and
    ``b_lower`` shape (R, n). ``region_lows``/``region_highs`` hold the box of
    each region, shape (R, n).
    """

    A_lower: np.ndarray
    A_upper: np.ndarray
    b_lower: np.ndarray
    b_upper: np.ndarray
    region_lows: np.ndarray
    region_highs: np.ndarray
    noise: GaussianNoise
    check_vertices: bool = True
    descriptor: str = "pwa_inclusion"

    def __post_init__(self):
        Al = _frozen(self.A_lower, 3, "A_lower")
        Au = _frozen(self.A_upper, 3, "A_upper")
        bl = _frozen(self.b_lower, 2, "b_lower")
        bu = _frozen(self.b_upper, 2, "b_upper")
        lo = _frozen(self.region_lows, 2, "region_lows")
        hi = _frozen(self.region_highs, 2, "region_highs")
        R, n = lo.shape
        if n != self.noise.dim:
            raise DimensionMismatch(f"regions have dimension {n}, sigma has {self.noise.dim}")
        for name, arr, shape in (
            ("A_lower", Al, (R, n, n)),
            ("A_upper", Au, (R, n, n)),
            ("b_lower", bl, (R, n)),
            ("b_upper", bu, (R, n)),
            ("region_highs", hi, (R, n)),
        ):
            if arr.shape != shape:
                raise DimensionMismatch(f"{name} has shape {arr.shape}, expected {shape}")
        if np.any(lo > hi):
            raise ValueError("a region has low > high")
        for name, arr in (("A_lower", Al), ("A_upper", Au), ("b_lower", bl), ("b_upper", bu)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "region_lows", lo)
        object.__setattr__(self, "region_highs", hi)
        if self.check_vertices:
            self.verify_consistency()

    @property
    def dim(self) -> int:
        return self.region_lows.shape[1]

    @property
    def n_regions(self) -> int:
        return self.region_lows.shape[0]

    def verify_consistency(self) -> None:
        """Check lower map <= upper map at all 2^n vertices of every region."""
        n = self.dim
        bits = ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
        for r in range(self.n_regions):
            verts = np.where(bits, self.region_highs[r], self.region_lows[r])
            low_vals = verts @ self.A_lower[r].T + self.b_lower[r]
            up_vals = verts @ self.A_upper[r].T + self.b_upper[r]
            gap = low_vals - up_vals
            if np.any(gap > VERTEX_TOL):
                v, d = np.unravel_index(np.argmax(gap), gap.shape)
                raise InconsistentBounds(
                    f"region {r}: lower map exceeds upper map by {gap[v, d]:.3g} "
                    f"in output {d} at vertex {verts[v].tolist()}",
                    region=r,
                )

    def region(self, i: int) -> Hyperrectangle:
        return Hyperrectangle(tuple(self.region_lows[i]), tuple(self.region_highs[i]))

    def image_hulls(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean-interval lower/upper arrays for every region, each (R, n)."""
        lo = _hull_min(self.A_lower, self.b_lower, self.region_lows, self.region_highs)
        hi = _hull_max(self.A_upper, self.b_upper, self.region_lows, self.region_highs)
        return lo, hi

    def matches(self, partition: Partition, atol: float = 1e-9) -> bool:
        return (
            self.n_regions == partition.n_cells
            and np.allclose(self.region_lows, partition.lows, rtol=0, atol=atol)
            and np.allclose(self.region_highs, partition.highs, rtol=0, atol=atol)
        )


def image_interval_pwa(dyn: PwaInclusionDynamics, region_index: int) -> MeanIntervalVector:
    if not 0 <= region_index < dyn.n_regions:
        raise IndexOutOfRange(f"region {region_index} not in [0, {dyn.n_regions})")
    r = region_index
    lo, hi = dyn.region_lows[r], dyn.region_highs[r]
    return MeanIntervalVector(
        _hull_min(dyn.A_lower[r], dyn.b_lower[r], lo, hi),
        _hull_max(dyn.A_upper[r], dyn.b_upper[r], lo, hi),
    )


def lift_linear_to_inclusion(dyn: LinearDynamics, partition: Partition) -> PwaInclusionDynamics:
    if partition.dim != dyn.dim:
        raise DimensionMismatch(f"partition has dimension {partition.dim}, dynamics {dyn.dim}")
    R = partition.n_cells
    A = np.broadcast_to(dyn.A, (R, dyn.dim, dyn.dim))
    b = np.broadcast_to(dyn.b, (R, dyn.dim))
    return PwaInclusionDynamics(
        A, A, b, b, partition.lows, partition.highs, dyn.noise,
        check_vertices=False, descriptor="linear",
    )


def linear_dynamics(A: Sequence[Sequence[float]], b: Sequence[float], sigma: Sequence[float]) -> LinearDynamics:
    return LinearDynamics(np.asarray(A, dtype=float), np.asarray(b, dtype=float), GaussianNoise(tuple(sigma)))
