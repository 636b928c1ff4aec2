"""Reference computations shared by the unit and acceptance tests."""

import numpy as np
from scipy.special import ndtr


def kernel_at_means(partition, means, sigma):
    """Exact T(q_j | x) given the noise-free successors ``means`` (k, n); shape (k, cells + 1).

    Unsafe-flagged cells are folded into the last (sink) column.
    """
    sig = np.asarray(sigma, dtype=float)
    z_hi = (partition.highs[None, :, :] - means[:, None, :]) / sig
    z_lo = (partition.lows[None, :, :] - means[:, None, :]) / sig
    cells = np.prod(ndtr(z_hi) - ndtr(z_lo), axis=2)
    inside = np.prod(ndtr((partition.space.highs - means) / sig) - ndtr((partition.space.lows - means) / sig), axis=1)
    sink = 1.0 - inside + cells[:, partition.unsafe_mask].sum(axis=1)
    cells[:, partition.unsafe_mask] = 0.0
    return np.column_stack([cells, sink])


def exact_kernel(dyn, partition, xs):
    return kernel_at_means(partition, dyn(xs), dyn.noise.sigma)
