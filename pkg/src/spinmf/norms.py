"""Matrix norms used by the analytic error bounds."""

from __future__ import annotations

import numpy as np

from .errors import SizeGuardRefusal
from .exact import spin_states


def frobenius_norm(M) -> float:
    """Square root of the sum of squared entries."""
    M = np.asarray(M, dtype=np.float64)
    return float(np.sqrt((M * M).sum()))


def inf_to_one_norm(M, max_n: int = 24) -> float:
    """max over x in {-1,+1}^n of sum_i |sum_j M_ij x_j|.

    The maximum of ||Mx||_1 over the unit infinity-ball is attained at a ±1
    vertex, so exhaustive enumeration over sign vectors is exact. Guarded by
    ``max_n`` because the sweep is 2^n.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {M.shape}")
    n = M.shape[1]
    if n > max_n:
        raise SizeGuardRefusal(
            f"inf_to_one_norm enumerates 2^{n} sign vectors; refusing above n <= {max_n}"
        )
    best = 0.0
    for block in spin_states(n):
        vals = np.abs(block @ M.T).sum(axis=1)
        best = max(best, float(vals.max()))
    return best
