from __future__ import annotations

import scipy
import numpy as np

from ..barrier import CertificateResult, Engine, PwcBarrier
from ..certificate import evaluate_certificate, psafe
from ..errors import LengthMismatch
from ..geometry import Partition
from ..transition_bounds import TransitionBounds

LP_SOLVER = f"scipy.optimize.linprog[highs] (scipy {scipy.__version__})"
LP_OPTIONS = {"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9}


def check_inputs(bounds: TransitionBounds, partition: Partition, N: int) -> None:
    if bounds.n_regions != partition.n_cells:
        raise LengthMismatch(f"bounds have {bounds.n_regions} rows, partition {partition.n_cells} cells")
    if not partition.initial_cell_indices:
        raise ValueError("partition has no initial cells; call mark_regions first")
    if int(N) != N or N < 1:
        raise ValueError(f"time horizon must be a positive integer, got {N}")
    bounds.check_feasible()


def finalize(
    values: np.ndarray,
    bounds: TransitionBounds,
    partition: Partition,
    N: int,
    engine: Engine,
    iterations: int,
    started: float,
    metadata: dict,
    clock,
) -> CertificateResult:
    """Re-derive (eta, beta) from the barrier itself so the reported numbers are sound."""
    barrier = PwcBarrier.for_partition(values, partition)
    eta, beta, beta_i = evaluate_certificate(barrier, bounds, partition)
    meta = {"barrier_cap": 1.0, "certificate_check": "exact re-evaluation", **metadata}
    return CertificateResult(
        barrier=barrier,
        eta=eta,
        beta=beta,
        beta_per_region=beta_i,
        p_safe=psafe(eta, beta, N),
        horizon=int(N),
        engine=engine,
        iterations=iterations,
        wall_time=clock() - started,
        metadata=meta,
    )
