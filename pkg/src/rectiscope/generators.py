"""Deterministic generators of canonical test measures.

Each generator returns a `DiscreteMeasure` that is an exact function of its
parameters (atom-midpoint discretizations, never sampling), so analytic
values for masses, density sums, and betas can be asserted in tests:

  atom                one weighted point
  segment             2^K equal subsegments, one atom per midpoint,
                      weight = subsegment length (arclength measure)
  polyline            same discretization along a vertex chain
  circle              2^K arc midpoints, weight = arc length
  cantor-quarter-line middle-half Cantor set on the x axis: 2^k atoms at
                      stage-k interval midpoints, weight 2^-k
  four-corner-cantor  corner self-similar set with ratio 1/4: 4^k atoms at
                      stage-k square centers, weight 4^-k
  uniform-square      4^K grid cell centers of [0,1)^2, weight 4^-K
  random              seeded uniform cloud in [0,1)^n (for harnesses)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InputError
from .measure import DiscreteMeasure

KINDS = (
    "atom",
    "segment",
    "polyline",
    "circle",
    "cantor-quarter-line",
    "four-corner-cantor",
    "uniform-square",
    "random",
)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    level: int = 0
    position: Tuple[float, ...] = (0.1, 0.1)
    weight: float = 1.0
    start: Tuple[float, ...] = (0.0, 0.0)
    end: Tuple[float, ...] = (1.0, 0.0)
    vertices: Optional[Tuple[Tuple[float, ...], ...]] = None
    center: Tuple[float, ...] = (0.5, 0.5)
    radius: float = 0.25
    natoms: int = 32
    dim: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown generator kind {self.kind!r}; choose from {KINDS}")
        if self.level < 0:
            raise InputError("generator level must be >= 0")


def single_atom(position=(0.1, 0.1), weight: float = 1.0) -> DiscreteMeasure:
    return DiscreteMeasure(np.asarray([position], dtype=np.float64), [weight])


def segment_measure(start, end, level: int) -> DiscreteMeasure:
    """Arclength measure of a segment: 2^level midpoint atoms."""
    a = np.asarray(start, dtype=np.float64)
    b = np.asarray(end, dtype=np.float64)
    count = 1 << level
    t = (np.arange(count) + 0.5) / count
    pos = a + t[:, None] * (b - a)
    seg = float(np.linalg.norm(b - a))
    if seg == 0.0:
        raise InputError("segment endpoints coincide")
    return DiscreteMeasure(pos, np.full(count, seg / count))


def polyline_measure(vertices: Sequence[Sequence[float]], level: int) -> DiscreteMeasure:
    """Arclength measure of a polyline: 2^level equal-arclength midpoints."""
    verts = np.asarray(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[0] < 2:
        raise InputError("polyline needs at least two vertices")
    seglen = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    if np.any(seglen == 0.0):
        raise InputError("polyline has a zero-length segment")
    total = float(seglen.sum())
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    count = 1 << level
    s = (np.arange(count) + 0.5) * (total / count)
    seg_idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seglen) - 1)
    local = (s - cum[seg_idx]) / seglen[seg_idx]
    pos = verts[seg_idx] + local[:, None] * (verts[seg_idx + 1] - verts[seg_idx])
    return DiscreteMeasure(pos, np.full(count, total / count))


def circle_measure(center, radius: float, level: int) -> DiscreteMeasure:
    """Arclength measure of a circle: 2^level arc midpoints."""
    if radius <= 0:
        raise InputError("circle radius must be positive")
    c = np.asarray(center, dtype=np.float64)
    count = 1 << level
    phi = 2.0 * np.pi * (np.arange(count) + 0.5) / count
    pos = c + radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    total = 2.0 * np.pi * radius
    return DiscreteMeasure(pos, np.full(count, total / count))


def _cantor_starts(level: int) -> np.ndarray:
    """Left endpoints of the stage-k intervals of the middle-half Cantor set."""
    starts = np.zeros(1)
    for t in range(level):
        gap = 3.0 * 4.0 ** (-(t + 1))
        starts = np.concatenate([starts, starts + gap])
        starts.sort()
    return starts


def cantor_quarter_line(level: int) -> DiscreteMeasure:
    """Natural measure of the middle-half Cantor set embedded on the x axis.

    2^level atoms at stage-level interval midpoints, each weight 2^-level;
    all atoms have y = 0, so a line fit through the axis is exact.
    """
    if level < 0:
        raise InputError("level must be >= 0")
    starts = _cantor_starts(level)
    half = 0.5 * 4.0 ** (-level)
    pos = np.zeros((starts.size, 2))
    pos[:, 0] = starts + half
    return DiscreteMeasure(pos, np.full(starts.size, 2.0 ** (-level)))


def four_corner_cantor(level: int) -> DiscreteMeasure:
    """Natural measure of the four-corner self-similar set (ratio 1/4).

    4^level atoms at stage-level square centers, each weight 4^-level.  The
    planar exemplar whose triple-cube betas stay bounded away from zero at
    every scale coarser than its discretization.
    """
    if level < 0:
        raise InputError("level must be >= 0")
    starts = np.zeros((1, 2))
    for t in range(level):
        gap = 3.0 * 4.0 ** (-(t + 1))
        shifts = np.array([[0.0, 0.0], [gap, 0.0], [0.0, gap], [gap, gap]])
        starts = (starts[:, None, :] + shifts[None, :, :]).reshape(-1, 2)
    order = np.lexsort(starts.T[::-1])
    starts = starts[order]
    half = 0.5 * 4.0 ** (-level)
    return DiscreteMeasure(starts + half, np.full(starts.shape[0], 4.0 ** (-level)))


def uniform_square(level: int) -> DiscreteMeasure:
    """Uniform area measure of [0,1)^2 discretized on a 2^level grid."""
    if level < 0:
        raise InputError("level must be >= 0")
    count = 1 << level
    ticks = (np.arange(count) + 0.5) / count
    xx, yy = np.meshgrid(ticks, ticks, indexing="ij")
    pos = np.stack([xx.ravel(), yy.ravel()], axis=1)
    return DiscreteMeasure(pos, np.full(count * count, 4.0 ** (-level)))


def random_measure(seed: int, natoms: int, dim: int = 2) -> DiscreteMeasure:
    """Seeded uniform cloud in [0,1)^dim with weights in [0.5, 1.5)."""
    if natoms < 1:
        raise InputError("random measure needs at least one atom")
    rng = np.random.default_rng(seed)
    pos = rng.random((natoms, dim))
    w = 0.5 + rng.random(natoms)
    return DiscreteMeasure(pos, w)


def generate(spec: GeneratorSpec) -> DiscreteMeasure:
    """Dispatch on the spec kind; output is a pure function of the spec."""
    if spec.kind == "atom":
        return single_atom(spec.position, spec.weight)
    if spec.kind == "segment":
        return segment_measure(spec.start, spec.end, spec.level)
    if spec.kind == "polyline":
        if spec.vertices is None:
            raise InputError("polyline generator requires vertices")
        return polyline_measure(spec.vertices, spec.level)
    if spec.kind == "circle":
        return circle_measure(spec.center, spec.radius, spec.level)
    if spec.kind == "cantor-quarter-line":
        return cantor_quarter_line(spec.level)
    if spec.kind == "four-corner-cantor":
        return four_corner_cantor(spec.level)
    if spec.kind == "uniform-square":
        return uniform_square(spec.level)
    if spec.kind == "random":
        return random_measure(spec.seed, spec.natoms, spec.dim)
    raise InputError(f"unknown generator kind {spec.kind!r}")
