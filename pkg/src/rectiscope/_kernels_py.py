"""Pure-numpy implementations of the hot kernels.

Same contract as the compiled `_kernels` extension; selected at import time
by `_backend` when the extension is unavailable (or forced via
RECTISCOPE_BACKEND=pure).  Both backends agree to floating-point roundoff;
tests pin them together at 1e-12 relative.
"""

from __future__ import annotations

import numpy as np


def segment_moments(positions, weights, starts):
    """Raw weighted moments of contiguous atom segments.

    positions (N, n) and weights (N,) must already be ordered so that each
    segment is a contiguous, non-empty slice; segment i spans
    [starts[i], starts[i+1]) with the last segment ending at N.

    Returns (mass (M,), first (M, n), second (M, n, n)) about the origin.
    """
    positions = np.asarray(positions, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    M = starts.shape[0]
    n = positions.shape[1]
    if M == 0:
        return (
            np.empty((0,)),
            np.empty((0, n)),
            np.empty((0, n, n)),
        )
    mass = np.add.reduceat(weights, starts)
    wx = weights[:, None] * positions
    first = np.add.reduceat(wx, starts, axis=0)
    outer = wx[:, :, None] * positions[:, None, :]
    second = np.add.reduceat(outer, starts, axis=0)
    return mass, first, second


def line_grid_objective(positions, weights, cos_t, sin_t, offsets, p):
    """Weighted p-th power distances to a grid of lines in the plane.

    The line with angle index t and offset s is {x : x . (cos_t, sin_t) = s}.
    Returns out (T, S) with out[t, s] = sum_i w_i |x_i . n_t - offsets[s]|^p.
    """
    positions = np.asarray(positions, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    cos_t = np.asarray(cos_t, dtype=np.float64)
    sin_t = np.asarray(sin_t, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    N = positions.shape[0]
    T = cos_t.shape[0]
    S = offsets.shape[0]
    out = np.empty((T, S))
    if N == 0:
        out.fill(0.0)
        return out
    normals = np.stack([cos_t, sin_t])          # (2, T)
    proj = positions @ normals                  # (N, T)
    # chunk the offset axis to bound the (N, T, chunk) temporary
    chunk = max(1, int(4_000_000 // max(N * T, 1)))
    for lo in range(0, S, chunk):
        hi = min(S, lo + chunk)
        diff = np.abs(proj[:, :, None] - offsets[None, None, lo:hi])
        if p == 2.0:
            np.multiply(diff, diff, out=diff)
        elif p != 1.0:
            np.power(diff, p, out=diff)
        out[:, lo:hi] = np.einsum("i,its->ts", weights, diff)
    return out
