"""Discrete measures and the half-open dyadic cube system.

A finite weighted point cloud stands in for a locally finite Borel measure:
atoms are (position, weight) pairs with positive weights.  The cube system is
the origin-anchored dyadic grid: level j >= 0 tiles R^n by half-open cubes
prod_i [k_i 2^-j, (k_i+1) 2^-j) of side 2^-j <= 1.  A `MassTree` aggregates
atom weights per cube, sparsely, down to a chosen depth; every other module
reads masses and per-cube atom segments from it.

Half-open membership makes cube assignment deterministic: each atom belongs
to exactly one cube per level.  Masses are accumulated in double precision in
a fixed (level, lexicographic-coordinate) order so repeated builds are
byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .errors import DepthError, InputError

# Coordinates are mapped to int64 cube indices via floor(x * 2^K); keep a wide
# safety margin below 2^63.
_MAX_ABS_INDEX = 2 ** 52


class DiscreteMeasure:
    """Finite collection of weighted atoms in R^n.

    positions: (N, n) float64, weights: (N,) float64, all weights > 0.
    Immutable by convention: arrays are stored read-only.
    """

    def __init__(self, positions, weights):
        pos = np.ascontiguousarray(positions, dtype=np.float64)
        w = np.ascontiguousarray(weights, dtype=np.float64)
        if pos.ndim != 2:
            raise InputError(f"positions must be a 2-D array, got shape {pos.shape}")
        if pos.shape[1] < 1:
            raise InputError("dimension must be >= 1")
        if w.shape != (pos.shape[0],):
            raise InputError(
                f"weights shape {w.shape} does not match {pos.shape[0]} atoms"
            )
        if pos.size and not np.all(np.isfinite(pos)):
            raise InputError("non-finite atom coordinate")
        if w.size and not np.all(np.isfinite(w)):
            raise InputError("non-finite atom weight")
        if np.any(w <= 0.0):
            raise InputError("atom weights must be strictly positive")
        pos.setflags(write=False)
        w.setflags(write=False)
        self.positions = pos
        self.weights = w

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def natoms(self) -> int:
        return self.positions.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return self.natoms

    def __repr__(self) -> str:
        return f"DiscreteMeasure(natoms={self.natoms}, dim={self.dim}, mass={self.total_mass:g})"

    def restrict(self, predicate: Callable[[np.ndarray], bool]) -> "DiscreteMeasure":
        """Keep atoms whose position satisfies `predicate`; weights unchanged.

        The predicate must be pure and total on positions.  An empty result is
        represented as a measure with zero atoms (same dimension).
        """
        keep = np.fromiter(
            (bool(predicate(self.positions[i])) for i in range(self.natoms)),
            dtype=bool,
            count=self.natoms,
        )
        return self.restrict_mask(keep)

    def restrict_mask(self, mask: np.ndarray) -> "DiscreteMeasure":
        mask = np.asarray(mask, dtype=bool)
        return DiscreteMeasure(self.positions[mask], self.weights[mask])

    def restrict_indices(self, indices) -> "DiscreteMeasure":
        idx = np.asarray(indices, dtype=np.int64)
        return DiscreteMeasure(self.positions[idx], self.weights[idx])

    def translate(self, vector) -> "DiscreteMeasure":
        v = np.asarray(vector, dtype=np.float64)
        return DiscreteMeasure(self.positions + v, self.weights)

    def scale(self, factor: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.positions * float(factor), self.weights)


def empty_measure(dim: int) -> DiscreteMeasure:
    return DiscreteMeasure(np.empty((0, dim)), np.empty((0,)))


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball; membership uses <= radius."""

    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise InputError("ball radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=np.float64)

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    def contains(self, x) -> bool:
        d = np.asarray(x, dtype=np.float64) - self.center_array
        return float(d @ d) <= self.radius * self.radius

    def member_mask(self, positions: np.ndarray) -> np.ndarray:
        d = positions - self.center_array
        return np.einsum("ij,ij->i", d, d) <= self.radius * self.radius

    def label(self) -> str:
        c = ",".join(repr(v) for v in self.center)
        return f"ball({c};r={self.radius!r})"


@dataclass(frozen=True)
class DyadicCubeId:
    """Address of the half-open cube prod_i [k_i 2^-j, (k_i+1) 2^-j).

    level j >= 0 (side 2^-j <= 1), coords k in Z^n.
    """

    level: int
    coords: tuple

    def __post_init__(self):
        if self.level < 0:
            raise InputError("cube level must be >= 0 (side at most 1)")
        object.__setattr__(self, "coords", tuple(int(k) for k in self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def diam(self) -> float:
        return math.sqrt(self.dim) * self.side

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.coords, dtype=np.float64) + 0.5) * self.side

    def parent(self) -> "DyadicCubeId":
        if self.level == 0:
            raise InputError("level-0 cube has no parent within the system")
        return DyadicCubeId(self.level - 1, tuple(k >> 1 for k in self.coords))

    def child(self, offsets: Sequence[int]) -> "DyadicCubeId":
        if len(offsets) != self.dim or any(o not in (0, 1) for o in offsets):
            raise InputError("child offsets must be 0/1 per dimension")
        return DyadicCubeId(
            self.level + 1, tuple(2 * k + o for k, o in zip(self.coords, offsets))
        )

    def children(self) -> Iterator["DyadicCubeId"]:
        for bits in range(1 << self.dim):
            yield self.child([(bits >> i) & 1 for i in range(self.dim)])

    def contains(self, x) -> bool:
        return tuple(cube_coords_of(np.asarray(x, float), self.level)) == self.coords

    def ancestor(self, level: int) -> "DyadicCubeId":
        if not 0 <= level <= self.level:
            raise InputError("ancestor level out of range")
        shift = self.level - level
        return DyadicCubeId(level, tuple(k >> shift for k in self.coords))

    def triple(self) -> "TripleCube":
        return TripleCube(self)

    def label(self) -> str:
        return f"{self.level}:{','.join(str(k) for k in self.coords)}"


@dataclass(frozen=True)
class TripleCube:
    """Concentric half-open box of side 3 * 2^-j around a dyadic cube."""

    base: DyadicCubeId

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def diam(self) -> float:
        return 3.0 * self.base.diam

    @property
    def center(self) -> np.ndarray:
        return self.base.center

    @property
    def bounds(self):
        side = self.base.side
        k = np.asarray(self.base.coords, dtype=np.float64)
        return (k - 1.0) * side, (k + 2.0) * side

    def contains(self, x) -> bool:
        lo, hi = self.bounds
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(lo <= x) and np.all(x < hi))

    def member_mask(self, positions: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds
        return np.all((positions >= lo) & (positions < hi), axis=1)

    def label(self) -> str:
        return "3x" + self.base.label()


def cube_coords_of(x: np.ndarray, level: int) -> np.ndarray:
    """Integer coords of the level-j cube containing x (half-open rule).

    Multiplication by 2^j is exact in binary floating point, so the floor is
    the mathematically correct one for the stored double coordinates.
    """
    scaled = np.floor(x * (2.0 ** level))
    if np.any(np.abs(scaled) > _MAX_ABS_INDEX):
        raise InputError("coordinate magnitude too large for this depth")
    return scaled.astype(np.int64)


def cube_of_point(x, level: int) -> DyadicCubeId:
    return DyadicCubeId(level, tuple(cube_coords_of(np.asarray(x, float), level)))


def cube_geometry(q: DyadicCubeId):
    """(center, Euclidean diameter sqrt(n) * side, triple-box bounds)."""
    return q.center, q.diam, q.triple().bounds


def ball_mass(mu: DiscreteMeasure, ball: Ball) -> float:
    """Total weight inside the closed ball (distance <= r counts)."""
    if mu.natoms == 0:
        return 0.0
    return float(mu.weights[ball.member_mask(mu.positions)].sum())


def restrict_to_region(mu: DiscreteMeasure, region) -> DiscreteMeasure:
    """Restriction of the measure to a cube, triple cube, or ball."""
    if mu.natoms == 0:
        return mu
    if isinstance(region, DyadicCubeId):
        coords = cube_coords_grid(mu.positions, region.level)
        mask = np.all(coords == np.asarray(region.coords, dtype=np.int64), axis=1)
    elif isinstance(region, (TripleCube, Ball)):
        mask = region.member_mask(mu.positions)
    else:
        raise InputError(f"unsupported region type {type(region).__name__}")
    return mu.restrict_mask(mask)


def region_diam(region) -> float:
    if isinstance(region, (DyadicCubeId, TripleCube, Ball)):
        return region.diam
    raise InputError(f"unsupported region type {type(region).__name__}")


def region_label(region) -> str:
    return region.label()


def cube_coords_grid(positions: np.ndarray, level: int) -> np.ndarray:
    """(N, n) int64 cube coords at one level for many positions at once."""
    scaled = np.floor(positions * (2.0 ** level))
    if scaled.size and np.any(np.abs(scaled) > _MAX_ABS_INDEX):
        raise InputError("coordinate magnitude too large for this depth")
    return scaled.astype(np.int64)


class _Level:
    """Per-level aggregation: occupied cubes in lexicographic coord order.

    keys:      (M, n) int64 sorted unique cube coords
    mass:      (M,)  exact sums of contained atom weights
    start:     (M,)  segment starts into `order`
    order:     (N,)  atom indices sorted by cube (stable in original order)
    atom_cube: (N,)  cube index (into keys) per original atom index
    """

    __slots__ = ("level", "keys", "mass", "start", "order", "atom_cube", "_index")

    def __init__(self, level, keys, mass, start, order, atom_cube):
        self.level = level
        self.keys = keys
        self.mass = mass
        self.start = start
        self.order = order
        self.atom_cube = atom_cube
        self._index = {tuple(int(v) for v in row): i for i, row in enumerate(keys)}

    @property
    def ncubes(self) -> int:
        return self.keys.shape[0]

    def lookup(self, coords) -> Optional[int]:
        return self._index.get(tuple(int(c) for c in coords))

    def segment(self, i: int):
        n = self.order.shape[0]
        end = self.start[i + 1] if i + 1 < self.ncubes else n
        return self.order[self.start[i]: end]


class MassTree:
    """Sparse per-cube mass aggregation over levels 0..depth.

    Only positive-mass cubes are stored.  The tree keeps a reference to the
    measure it was built from; it is immutable after construction and safe
    for concurrent reads.
    """

    def __init__(self, measure: DiscreteMeasure, depth: int, levels):
        self.measure = measure
        self.depth = depth
        self._levels = levels

    # -- construction ------------------------------------------------------

    @staticmethod
    def build(measure: DiscreteMeasure, depth: int) -> "MassTree":
        if int(depth) != depth or depth < 0:
            raise InputError("tree depth must be a nonnegative integer")
        depth = int(depth)
        n = measure.dim
        N = measure.natoms
        levels = []
        if N == 0:
            for j in range(depth + 1):
                levels.append(
                    _Level(
                        j,
                        np.empty((0, n), dtype=np.int64),
                        np.empty((0,)),
                        np.empty((0,), dtype=np.int64),
                        np.empty((0,), dtype=np.int64),
                        np.empty((0,), dtype=np.int64),
                    )
                )
            return MassTree(measure, depth, levels)

        deepest = cube_coords_grid(measure.positions, depth)
        for j in range(depth + 1):
            keyj = deepest // (1 << (depth - j)) if j < depth else deepest
            # lexicographic: first coordinate is the primary sort key
            order = np.lexsort(keyj.T[::-1])
            sk = keyj[order]
            newseg = np.empty(N, dtype=bool)
            newseg[0] = True
            np.any(sk[1:] != sk[:-1], axis=1, out=newseg[1:])
            start = np.flatnonzero(newseg)
            keys = np.ascontiguousarray(sk[start])
            mass = np.add.reduceat(measure.weights[order], start)
            cube_idx_sorted = np.cumsum(newseg) - 1
            atom_cube = np.empty(N, dtype=np.int64)
            atom_cube[order] = cube_idx_sorted
            levels.append(_Level(j, keys, mass, start, order, atom_cube))
        return MassTree(measure, depth, levels)

    # -- queries -----------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.measure.dim

    @property
    def total_mass(self) -> float:
        return self.measure.total_mass

    def level(self, j: int) -> _Level:
        if not 0 <= j <= self.depth:
            raise DepthError(f"level {j} outside tree depth 0..{self.depth}")
        return self._levels[j]

    def roots(self):
        """Occupied level-0 cubes in lexicographic order."""
        return list(self.occupied(0))

    def occupied(self, j: int) -> Iterator[DyadicCubeId]:
        lv = self.level(j)
        for row in lv.keys:
            yield DyadicCubeId(j, tuple(int(v) for v in row))

    def cube_mass(self, q: DyadicCubeId) -> float:
        """Exact sum of contained atom weights; 0.0 for absent cubes."""
        if q.level > self.depth:
            raise DepthError(
                f"cube level {q.level} exceeds tree depth {self.depth}"
            )
        lv = self.level(q.level)
        i = lv.lookup(q.coords)
        return 0.0 if i is None else float(lv.mass[i])

    def atoms_in(self, q: DyadicCubeId) -> np.ndarray:
        """Indices of atoms contained in q (empty array when absent)."""
        if q.level > self.depth:
            raise DepthError(
                f"cube level {q.level} exceeds tree depth {self.depth}"
            )
        lv = self.level(q.level)
        i = lv.lookup(q.coords)
        if i is None:
            return np.empty((0,), dtype=np.int64)
        return np.array(lv.segment(i), copy=True)

    def children(self, q: DyadicCubeId):
        """Occupied children of q, lexicographic order."""
        if q.level + 1 > self.depth:
            raise DepthError("children below tree depth")
        return [c for c in q.children() if self.cube_mass(c) > 0.0]

    def cube_of_atom(self, atom_index: int, j: int) -> DyadicCubeId:
        lv = self.level(j)
        row = lv.keys[lv.atom_cube[atom_index]]
        return DyadicCubeId(j, tuple(int(v) for v in row))

    # -- verification ------------------------------------------------------

    def additivity_max_rel_error(self) -> float:
        """max over stored cubes of |mass - sum(children masses)| / mass."""
        worst = 0.0
        for j in range(self.depth):
            lv, below = self._levels[j], self._levels[j + 1]
            if lv.ncubes == 0:
                continue
            child_parent = below.keys // 2
            sums = np.zeros(lv.ncubes)
            for ci in range(below.ncubes):
                pi = lv.lookup(child_parent[ci])
                sums[pi] += below.mass[ci]
            rel = np.abs(lv.mass - sums) / np.maximum(lv.mass, 1e-300)
            worst = max(worst, float(rel.max()))
        return worst

    def level_partition_max_abs_error(self) -> float:
        """max over levels of |sum of level masses - total mass|."""
        total = self.total_mass
        worst = 0.0
        for lv in self._levels:
            worst = max(worst, abs(float(lv.mass.sum()) - total))
        return worst


def build_mass_tree(mu: DiscreteMeasure, depth: int) -> MassTree:
    """Aggregate cube masses for levels 0..depth (sparse, deterministic)."""
    return MassTree.build(mu, depth)
