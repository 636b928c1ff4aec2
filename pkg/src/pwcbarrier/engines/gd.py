"""Projected subgradient descent with momentum on ``eta(b) + N beta(b)``.

Subgradients pass through the maximisers: the highest initial cell for
``eta`` and, for ``beta``, the worst row together with its worst-case
distribution. The raw subgradient scales with ``N``, which makes the default
learning rate overshoot the unit box, so each step uses the unit-norm
direction. Every iterate's objective is known exactly, and the best one is
returned.
"""

from __future__ import annotations

import time

import numpy as np

from ..barrier import CertificateResult, Engine, GdSettings, settings_dict
from ..certificate import row_expectations
from ..geometry import Partition
from ..transition_bounds import TransitionBounds
from .common import check_inputs, finalize


def _objective_and_subgradient(b, bounds, safe, initial, N):
    n = b.size
    grad = np.zeros(n)
    top = initial[np.argmax(b[initial])]
    grad[top] += 1.0
    beta = 0.0
    if safe.size:
        exp, p = row_expectations(b, bounds, safe)
        gaps = exp - b[safe]
        k = int(np.argmax(gaps))
        if gaps[k] > 0:
            beta = float(gaps[k])
            grad += N * p[k, :n]
            grad[safe[k]] -= N
    return float(b[top]) + N * beta, grad


def synthesize_gd(
    bounds: TransitionBounds,
    partition: Partition,
    N: int = 1,
    settings: GdSettings | None = None,
) -> CertificateResult:
    started = time.perf_counter()
    settings = settings or GdSettings()
    check_inputs(bounds, partition, N)
    n = partition.n_cells
    safe = partition.safe_indices
    unsafe = partition.unsafe_mask
    initial = np.array(sorted(partition.initial_cell_indices))

    b = np.zeros(n)
    b[unsafe] = 1.0
    step = np.zeros(n)
    lr = settings.initial_lr
    best_b, best_obj, best_iter = b.copy(), np.inf, 0
    for t in range(settings.num_iterations + 1):
        obj, grad = _objective_and_subgradient(b, bounds, safe, initial, N)
        if obj < best_obj:
            best_b, best_obj, best_iter = b.copy(), obj, t
        if t == settings.num_iterations:
            break
        norm = np.linalg.norm(grad)
        if norm == 0.0:
            break
        step = settings.momentum * step + lr * (grad / norm)
        b = np.clip(b - step, 0.0, 1.0)
        b[unsafe] = 1.0
        lr *= settings.decay

    meta = {
        "settings": settings_dict(settings),
        "initialisation": "zeros",
        "step": "normalised subgradient",
        "best_iteration": best_iter,
        "tracked_objective": best_obj,
    }
    return finalize(best_b, bounds, partition, N, Engine.GD, t, started, meta, time.perf_counter)
