"""Counterexample-guided synthesis over finite sets of witness distributions."""

from __future__ import annotations

import logging
import time

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ..ambiguity import greedy_fill
from ..barrier import CegisSettings, CertificateResult, Engine, settings_dict
from ..certificate import row_expectations
from ..errors import LpInfeasible, LpSolverFailure
from ..geometry import Partition
from ..transition_bounds import TransitionBounds
from .common import LP_OPTIONS, LP_SOLVER, check_inputs, finalize

log = logging.getLogger(__name__)


def _candidate(witness_rows, witnesses, n, safe, unsafe, initial, N):
    """min eta + N beta subject to the constraints of the current witnesses."""
    i_beta, i_eta = 2 * n, 2 * n + 1
    W = np.asarray(witnesses)
    k = len(witness_rows)
    # sum_j p_j b_j + p_u <= b_i + beta_i
    dense = np.zeros((k, 2 * n + 2))
    dense[:, :n] = W[:, :n]
    ar = np.arange(k)
    wr = np.asarray(witness_rows)
    dense[ar, wr] -= 1.0
    dense[ar, n + wr] = -1.0
    rhs = list(-W[:, n])
    extra_rows = []
    for i in safe:
        row = np.zeros(2 * n + 2)
        row[n + i] = 1.0
        row[i_beta] = -1.0
        extra_rows.append(row)
        rhs.append(0.0)
    for i in initial:
        row = np.zeros(2 * n + 2)
        row[i] = 1.0
        row[i_eta] = -1.0
        extra_rows.append(row)
        rhs.append(0.0)
    A = sparse.csr_matrix(np.vstack([dense] + ([np.array(extra_rows)] if extra_rows else [])))
    bounds = [(0.0, 1.0)] * n + [(0.0, None)] * n + [(0.0, None), (0.0, None)]
    for i in np.flatnonzero(unsafe):
        bounds[i] = (1.0, 1.0)
        bounds[n + i] = (0.0, 0.0)
    c = np.zeros(2 * n + 2)
    c[i_eta] = 1.0
    c[i_beta] = float(N)
    res = linprog(c, A_ub=A, b_ub=np.array(rhs), bounds=bounds, method="highs", options=LP_OPTIONS)
    if res.status == 2:
        raise LpInfeasible(f"CEGIS candidate LP infeasible: {res.message}")
    if res.status != 0:
        raise LpSolverFailure(f"CEGIS candidate LP failed (status {res.status}): {res.message}")
    return res.x[:n], res.x[n : 2 * n], float(res.fun)


def synthesize_cegis(
    bounds: TransitionBounds,
    partition: Partition,
    N: int = 1,
    settings: CegisSettings | None = None,
) -> CertificateResult:
    started = time.perf_counter()
    settings = settings or CegisSettings()
    check_inputs(bounds, partition, N)
    n = partition.n_cells
    safe = partition.safe_indices
    unsafe = partition.unsafe_mask
    initial = sorted(partition.initial_cell_indices)

    # One deterministic feasible point per row: lower bounds, then fill in index order.
    seeds = greedy_fill(np.zeros(n + 1), bounds.lower[safe], bounds.upper[safe])
    witness_rows = list(safe)
    witnesses = list(seeds)
    seen = {int(i): {seeds[k].tobytes()} for k, i in enumerate(safe)}

    limit = settings.max_iterations if settings.adaptive else settings.num_iterations
    iterations = 0
    converged = False
    lp_objective = float("nan")
    b = np.zeros(n)
    while iterations < limit:
        iterations += 1
        b, beta_i, lp_objective = _candidate(witness_rows, witnesses, n, safe, unsafe, initial, N)
        exp, p = row_expectations(b, bounds, safe)
        violating = np.flatnonzero(exp > b[safe] + beta_i[safe] + settings.tolerance)
        added = 0
        for k in violating:
            i = int(safe[k])
            key = p[k].tobytes()
            if key in seen[i]:
                continue
            seen[i].add(key)
            witness_rows.append(i)
            witnesses.append(p[k])
            added += 1
        log.debug("cegis iteration %d: objective %.6g, %d witnesses added", iterations, lp_objective, added)
        if added == 0:
            converged = True
            break

    meta = {
        "solver": LP_SOLVER,
        "lp_objective": lp_objective,
        "converged": converged,
        "witnesses": len(witnesses),
        "settings": settings_dict(settings),
    }
    return finalize(b, bounds, partition, N, Engine.CEGIS, iterations, started, meta, time.perf_counter)
