"""Axis-aligned boxes and grid partitions of the safe state space."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InitialOutsideSpace,
    InitialUnsafeOverlap,
    InvertedBounds,
    NonPositiveEpsilon,
)


@dataclass(frozen=True)
class Hyperrectangle:
    low: tuple[float, ...]
    high: tuple[float, ...]

    def __post_init__(self):
        low = tuple(float(v) for v in self.low)
        high = tuple(float(v) for v in self.high)
        if len(low) != len(high) or len(low) == 0:
            raise DimensionMismatch(
                f"low has {len(low)} entries, high has {len(high)}; need equal length >= 1"
            )
        for d, (lo, hi) in enumerate(zip(low, high)):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise InvertedBounds(f"dimension {d}: non-finite bound")
            if lo > hi:
                raise InvertedBounds(f"dimension {d}: low {lo} > high {hi}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def from_center(cls, center: Sequence[float], radius: Sequence[float] | float) -> "Hyperrectangle":
        c = np.asarray(center, dtype=float)
        r = np.broadcast_to(np.asarray(radius, dtype=float), c.shape)
        return cls(tuple(c - r), tuple(c + r))

    @property
    def dim(self) -> int:
        return len(self.low)

    @property
    def lows(self) -> np.ndarray:
        return np.array(self.low)

    @property
    def highs(self) -> np.ndarray:
        return np.array(self.high)

    @property
    def center(self) -> np.ndarray:
        return (self.lows + self.highs) / 2

    @property
    def extent(self) -> np.ndarray:
        return self.highs - self.lows

    def volume(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, x: Sequence[float]) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lows) and np.all(x <= self.highs))

    def contains_box(self, other: "Hyperrectangle") -> bool:
        return bool(np.all(other.lows >= self.lows) and np.all(other.highs <= self.highs))

    def intersects_closed(self, other: "Hyperrectangle") -> bool:
        return bool(np.all(self.lows <= other.highs) and np.all(other.lows <= self.highs))

    def interior_intersects(self, other: "Hyperrectangle") -> bool:
        """True if the open interior of ``self`` meets the closed box ``other``."""
        return bool(np.all(self.lows < other.highs) and np.all(other.lows < self.highs))

    def vertices(self) -> np.ndarray:
        """All 2^n corners, shape (2^n, n)."""
        n = self.dim
        bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
        return np.where(bits == 1, self.highs, self.lows)


def make_hyperrectangle(low: Sequence[float], high: Sequence[float]) -> Hyperrectangle:
    return Hyperrectangle(tuple(low), tuple(high))


@dataclass(frozen=True)
class Partition:
    """Row-major grid of cells tiling ``space``.

    Cells are half-open ``[low, high)`` per dimension except the last cell
    along each axis, which is closed, so every point of ``space`` belongs to
    exactly one cell.
    """

    space: Hyperrectangle
    cells_per_dim: tuple[int, ...]
    edges: tuple[tuple[float, ...], ...]
    requested_epsilon: tuple[float, ...]
    unsafe_cell_flags: tuple[bool, ...] = ()
    initial_cell_indices: frozenset[int] = frozenset()
    lows: np.ndarray = field(init=False, repr=False, compare=False)
    highs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n_cells = int(np.prod(self.cells_per_dim))
        if not self.unsafe_cell_flags:
            object.__setattr__(self, "unsafe_cell_flags", (False,) * n_cells)
        if len(self.unsafe_cell_flags) != n_cells:
            raise DimensionMismatch("unsafe_cell_flags length does not match cell count")
        for i in self.initial_cell_indices:
            if not 0 <= i < n_cells:
                raise IndexError(f"initial cell index {i} out of range")
            if self.unsafe_cell_flags[i]:
                raise InitialUnsafeOverlap(f"cell {i} is both initial and unsafe")
        idx = np.array(list(np.ndindex(*self.cells_per_dim)), dtype=int).reshape(n_cells, self.dim)
        lows = np.empty((n_cells, self.dim))
        highs = np.empty((n_cells, self.dim))
        for d in range(self.dim):
            e = np.asarray(self.edges[d])
            lows[:, d] = e[idx[:, d]]
            highs[:, d] = e[idx[:, d] + 1]
        lows.flags.writeable = False
        highs.flags.writeable = False
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def n_cells(self) -> int:
        return len(self.unsafe_cell_flags)

    def __len__(self) -> int:
        return self.n_cells

    @property
    def cells(self) -> tuple[Hyperrectangle, ...]:
        return tuple(Hyperrectangle(tuple(lo), tuple(hi)) for lo, hi in zip(self.lows, self.highs))

    def cell(self, i: int) -> Hyperrectangle:
        return Hyperrectangle(tuple(self.lows[i]), tuple(self.highs[i]))

    @property
    def unsafe_mask(self) -> np.ndarray:
        return np.array(self.unsafe_cell_flags, dtype=bool)

    @property
    def safe_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.unsafe_mask)

    @property
    def widths(self) -> np.ndarray:
        return np.array([(e[-1] - e[0]) / len(e[:-1]) for e in self.edges])

    @property
    def was_rounded(self) -> bool:
        """Whether any axis needed a cell count that shrank the requested width."""
        ext = self.space.extent
        return any(
            not math.isclose(ext[d] / (2 * self.requested_epsilon[d]), self.cells_per_dim[d], rel_tol=1e-12)
            for d in range(self.dim)
        )

    def grid_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(k) for k in np.unravel_index(flat, self.cells_per_dim))

    def locate(self, x: Sequence[float]) -> int | None:
        """Index of the cell owning ``x``, or None outside the space."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"point has shape {x.shape}, expected ({self.dim},)")
        if not self.space.contains(x):
            return None
        ks = []
        for d in range(self.dim):
            e = self.edges[d]
            k = int(np.searchsorted(e, x[d], side="right")) - 1
            ks.append(min(max(k, 0), self.cells_per_dim[d] - 1))
        return int(np.ravel_multi_index(tuple(ks), self.cells_per_dim))

    def locate_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised :meth:`locate`; returns -1 for points outside the space."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        inside = np.all((xs >= self.space.lows) & (xs <= self.space.highs), axis=1)
        ks = []
        for d in range(self.dim):
            k = np.searchsorted(self.edges[d], xs[:, d], side="right") - 1
            ks.append(np.clip(k, 0, self.cells_per_dim[d] - 1))
        flat = np.ravel_multi_index(tuple(ks), self.cells_per_dim)
        return np.where(inside, flat, -1)

    def descriptor(self) -> dict:
        return {
            "low": list(self.space.low),
            "high": list(self.space.high),
            "cells_per_dim": list(self.cells_per_dim),
            "requested_epsilon": list(self.requested_epsilon),
            "unsafe_cell_flags": [bool(f) for f in self.unsafe_cell_flags],
            "initial_cell_indices": sorted(self.initial_cell_indices),
        }

    def digest(self) -> str:
        """Content hash of the grid geometry and markings."""
        h = hashlib.sha256()
        for part in (self.space.low, self.space.high):
            h.update(",".join(float(v).hex() for v in part).encode())
        h.update(repr(self.cells_per_dim).encode())
        h.update(bytes(int(f) for f in self.unsafe_cell_flags))
        h.update(repr(sorted(self.initial_cell_indices)).encode())
        return h.hexdigest()


def _axis_edges(lo: float, hi: float, count: int) -> tuple[float, ...]:
    width = (hi - lo) / count
    edges = [lo + k * width for k in range(count)] + [hi]
    return tuple(edges)


def generate_partition(space: Hyperrectangle, epsilon: Sequence[float] | float) -> Partition:
    """Grid ``space`` into equal cells of half-width at most ``epsilon`` per axis."""
    eps = np.broadcast_to(np.asarray(epsilon, dtype=float), (space.dim,)) if np.ndim(epsilon) == 0 \
        else np.asarray(epsilon, dtype=float)
    if eps.shape != (space.dim,):
        raise DimensionMismatch(f"epsilon has {eps.size} entries, space has dimension {space.dim}")
    if np.any(~(eps > 0)):
        raise NonPositiveEpsilon(f"epsilon must be positive in every dimension, got {eps.tolist()}")
    counts = []
    for d in range(space.dim):
        ratio = space.extent[d] / (2 * eps[d])
        # Absorb float noise such as 1.5 / 0.1875 = 8.000000000000002.
        count = math.ceil(ratio - 1e-9 * max(ratio, 1.0))
        counts.append(max(count, 1))
    edges = tuple(_axis_edges(space.low[d], space.high[d], counts[d]) for d in range(space.dim))
    return Partition(space, tuple(counts), edges, tuple(float(e) for e in eps))


def mark_regions(
    partition: Partition,
    initial: Hyperrectangle,
    unsafe: Iterable[Hyperrectangle] = (),
) -> Partition:
    if initial.dim != partition.dim:
        raise DimensionMismatch("initial region dimension does not match the partition")
    if not partition.space.contains_box(initial):
        raise InitialOutsideSpace(f"initial region {initial} is not inside {partition.space}")
    unsafe = list(unsafe)
    for u in unsafe:
        if u.dim != partition.dim:
            raise DimensionMismatch("unsafe region dimension does not match the partition")

    lows, highs = partition.lows, partition.highs
    init_mask = np.all((lows <= initial.highs) & (highs >= initial.lows), axis=1)
    unsafe_mask = np.zeros(partition.n_cells, dtype=bool)
    for u in unsafe:
        unsafe_mask |= np.all((lows < u.highs) & (highs > u.lows), axis=1)
    clash = np.flatnonzero(init_mask & unsafe_mask)
    if clash.size:
        raise InitialUnsafeOverlap(f"cells {clash.tolist()} intersect both the initial and an unsafe region")
    return Partition(
        partition.space,
        partition.cells_per_dim,
        partition.edges,
        partition.requested_epsilon,
        tuple(bool(f) for f in unsafe_mask),
        frozenset(int(i) for i in np.flatnonzero(init_mask)),
    )
