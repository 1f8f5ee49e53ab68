"""Maximum mean discrepancy between two scalar samples.

Radial-basis kernel k(a, b) = exp(-(a - b)^2 / (2 h^2)) with the bandwidth
h either fixed or set by the median of pairwise pooled distances.  The
estimate is the biased V-statistic of squared MMD, which is non-negative by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KernelSpec:
    """Radial-basis kernel; bandwidth None means the median heuristic."""

    bandwidth: float | None = None

    def __post_init__(self):
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


def median_heuristic(x, y) -> float:
    """Median pairwise distance over the pooled sample; 1.0 when degenerate."""
    pooled = np.concatenate([np.asarray(x, dtype=np.float64).ravel(),
                             np.asarray(y, dtype=np.float64).ravel()])
    if pooled.shape[0] < 2:
        raise ValueError("need at least two pooled values")
    diff = np.abs(pooled[:, None] - pooled[None, :])
    iu = np.triu_indices(pooled.shape[0], k=1)
    med = float(np.median(diff[iu]))
    return med if med > 0 else 1.0


def mmd(x, y, kernel: KernelSpec = KernelSpec()) -> float:
    """Squared-MMD V-statistic between two scalar samples.

    mean k(x, x') + mean k(y, y') - 2 mean k(x, y); zero for identical
    samples, symmetric in (x, y).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape[0] < 2 or y.shape[0] < 2:
        raise ValueError("both samples need at least two values")
    h = kernel.bandwidth if kernel.bandwidth is not None else median_heuristic(x, y)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    gamma = 1.0 / (2.0 * h * h)

    def k_mean(a, b):
        return float(np.mean(np.exp(-gamma * (a[:, None] - b[None, :]) ** 2)))

    # cross term evaluated in both orientations so the result is exactly
    # symmetric in (x, y) despite summation order
    cross = k_mean(x, y) + k_mean(y, x)
    return k_mean(x, x) + k_mean(y, y) - cross
