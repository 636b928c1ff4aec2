"""Single-LP synthesis obtained by dualising each row's inner maximisation.

For a row with bounds ``[l, u]`` the inner problem
``max { c.p : l <= p <= u, sum p = 1 }`` has the dual
``min { lam + u.mu - l.nu : lam + mu_j - nu_j >= c_j, mu, nu >= 0 }``.
Strong duality lets the outer minimisation absorb the dual variables.
"""

from __future__ import annotations

import time

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from ..barrier import CertificateResult, Engine
from ..errors import LpInfeasible, LpSolverFailure
from ..geometry import Partition
from ..transition_bounds import TransitionBounds
from .common import LP_OPTIONS, LP_SOLVER, check_inputs, finalize

# Entries below this are treated as zero inside the LP only; the final
# certificate is re-evaluated against the unpruned bounds.
PRUNE = 1e-12


def synthesize_dual(
    bounds: TransitionBounds, partition: Partition, N: int = 1, prune: float = PRUNE
) -> CertificateResult:
    started = time.perf_counter()
    check_inputs(bounds, partition, N)
    n = partition.n_cells
    safe = partition.safe_indices
    unsafe = partition.unsafe_mask

    # Variable layout: b (n) | beta_i (n) | beta | eta | per safe row: lam, mu..., nu...
    i_beta, i_eta = 2 * n, 2 * n + 1
    nvar = 2 * n + 2
    rows, cols, vals, rhs = [], [], [], []
    r = 0
    var_bounds = [(0.0, 1.0)] * n + [(0.0, None)] * n + [(0.0, None), (0.0, None)]
    for i in np.flatnonzero(unsafe):
        var_bounds[i] = (1.0, 1.0)
        var_bounds[n + i] = (0.0, 0.0)

    for i in safe:
        up, lo = bounds.upper[i], bounds.lower[i]
        active = np.flatnonzero(up > prune)
        with_nu = active[lo[active] > prune]
        lam = nvar
        mu = {j: nvar + 1 + k for k, j in enumerate(active)}
        nu = {j: nvar + 1 + len(active) + k for k, j in enumerate(with_nu)}
        nvar += 1 + len(active) + len(with_nu)
        var_bounds += [(None, None)] + [(0.0, None)] * (len(active) + len(with_nu))
        # lam + mu_j - nu_j >= c_j  with c_j = b_j for cells, 1 for the sink.
        for j in active:
            rows += [r, r]
            cols += [lam, mu[j]]
            vals += [-1.0, -1.0]
            if j in nu:
                rows.append(r)
                cols.append(nu[j])
                vals.append(1.0)
            if j < n:
                rows.append(r)
                cols.append(j)
                vals.append(1.0)
                rhs.append(0.0)
            else:
                rhs.append(-1.0)
            r += 1
        # lam + u.mu - l.nu <= b_i + beta_i
        rows += [r] * (3 + len(active) + len(with_nu))
        cols += [lam, i, n + i] + [mu[j] for j in active] + [nu[j] for j in with_nu]
        vals += [1.0, -1.0, -1.0] + list(up[active]) + list(-lo[with_nu])
        rhs.append(0.0)
        r += 1
        rows += [r, r]
        cols += [n + i, i_beta]
        vals += [1.0, -1.0]
        rhs.append(0.0)
        r += 1
    for i in sorted(partition.initial_cell_indices):
        rows += [r, r]
        cols += [i, i_eta]
        vals += [1.0, -1.0]
        rhs.append(0.0)
        r += 1

    A_ub = sparse.csr_matrix((vals, (rows, cols)), shape=(r, nvar))
    c = np.zeros(nvar)
    c[i_eta] = 1.0
    c[i_beta] = float(N)
    res = linprog(c, A_ub=A_ub, b_ub=np.array(rhs), bounds=var_bounds, method="highs", options=LP_OPTIONS)
    if res.status == 2:
        raise LpInfeasible(f"dual LP infeasible: {res.message}")
    if res.status != 0:
        raise LpSolverFailure(f"dual LP failed (status {res.status}): {res.message}")
    meta = {
        "solver": LP_SOLVER,
        "lp_objective": float(res.fun),
        "lp_variables": int(nvar),
        "lp_constraints": int(r),
        "prune_threshold": prune,
    }
    return finalize(res.x[:n], bounds, partition, N, Engine.DUAL, 1, started, meta, time.perf_counter)
