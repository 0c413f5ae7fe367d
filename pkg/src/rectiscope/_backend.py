"""Kernel backend selection.

Tries the compiled Cython extension first and falls back to the pure-numpy
implementation.  RECTISCOPE_BACKEND=pure|compiled forces a choice (the
latter raises if the extension was never built).  Wrappers coerce inputs to
the contiguous dtypes the compiled kernels require, so callers never care
which backend is active.
"""

from __future__ import annotations

import os

import numpy as np

_choice = os.environ.get("RECTISCOPE_BACKEND", "auto").lower()

if _choice in ("pure", "python"):
    from . import _kernels_py as _impl

    BACKEND = "pure"
elif _choice in ("compiled", "cython", "c"):
    from . import _kernels as _impl  # type: ignore[attr-defined]

    BACKEND = "compiled"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "pure"


def segment_moments(positions, weights, starts):
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    starts = np.ascontiguousarray(starts, dtype=np.int64)
    return _impl.segment_moments(positions, weights, starts)


def line_grid_objective(positions, weights, cos_t, sin_t, offsets, p):
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    cos_t = np.ascontiguousarray(cos_t, dtype=np.float64)
    sin_t = np.ascontiguousarray(sin_t, dtype=np.float64)
    offsets = np.ascontiguousarray(offsets, dtype=np.float64)
    return _impl.line_grid_objective(positions, weights, cos_t, sin_t, offsets, float(p))
