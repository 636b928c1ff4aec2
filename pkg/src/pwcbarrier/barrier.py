"""Barrier values, engine settings and the certificate result record."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .errors import LengthMismatch, NegativeBarrierValue
from .geometry import Partition


class Engine(str, Enum):
    DUAL = "dual"
    CEGIS = "cegis"
    GD = "gd"

    @classmethod
    def parse(cls, name: str) -> "Engine":
        key = str(name).strip().lower()
        aliases = {"dual_alg": "dual", "cegis_alg": "cegis", "gd_alg": "gd", "gradient_descent": "gd"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True, eq=False)
class PwcBarrier:
    """One value per partition cell; the barrier is 1 outside the grid."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if np.any(~np.isfinite(v)):
            raise ValueError("barrier values must be finite")
        neg = np.flatnonzero(v < 0)
        if neg.size:
            raise NegativeBarrierValue(f"cell {neg[0]} has barrier value {v[neg[0]]}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def for_partition(cls, values, partition: Partition) -> "PwcBarrier":
        """Clamp to [0, 1] and pin unsafe cells to 1."""
        v = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
        if v.size != partition.n_cells:
            raise LengthMismatch(f"{v.size} barrier values for {partition.n_cells} cells")
        v[partition.unsafe_mask] = 1.0
        return cls(v)

    def __len__(self) -> int:
        return self.values.size

    def check(self, partition: Partition) -> None:
        if self.values.size != partition.n_cells:
            raise LengthMismatch(f"{self.values.size} barrier values for {partition.n_cells} cells")
        off = np.flatnonzero(partition.unsafe_mask & (self.values != 1.0))
        if off.size:
            raise ValueError(f"unsafe cell {off[0]} has barrier value {self.values[off[0]]}, expected 1")


@dataclass(frozen=True)
class GdSettings:
    num_iterations: int = 10_000
    initial_lr: float = 1e-2
    decay: float = 0.9999
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.decay <= 1:
            raise ValueError(f"decay must be in (0, 1], got {self.decay}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if not self.initial_lr > 0:
            raise ValueError(f"initial_lr must be positive, got {self.initial_lr}")
        if self.num_iterations < 0:
            raise ValueError("num_iterations must be nonnegative")


@dataclass(frozen=True)
class CegisSettings:
    num_iterations: int = 10
    adaptive: bool = True
    tolerance: float = 1e-8
    distribution_guided: bool = True
    # Safety net for adaptive mode; finite anyway since witnesses are vertices.
    max_iterations: int = 10_000

    def __post_init__(self):
        if not self.distribution_guided:
            raise ValueError("only distribution-guided CEGIS is implemented")
        if self.num_iterations < 1:
            raise ValueError("num_iterations must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")


@dataclass(frozen=True, eq=False)
class CertificateResult:
    barrier: PwcBarrier
    eta: float
    beta: float
    beta_per_region: np.ndarray
    p_safe: float
    horizon: int
    engine: Engine
    iterations: int
    wall_time: float
    metadata: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.eta + self.horizon * self.beta

    def to_dict(self) -> dict:
        return {
            "engine": self.engine.value,
            "horizon": self.horizon,
            "eta": self.eta,
            "beta": self.beta,
            "p_safe": self.p_safe,
            "objective": self.objective,
            "iterations": self.iterations,
            "barrier": [float(v) for v in self.barrier.values],
            "beta_per_region": [float(v) for v in self.beta_per_region],
            "metadata": self.metadata,
        }


def settings_dict(settings) -> dict:
    return asdict(settings) if settings is not None else {}
