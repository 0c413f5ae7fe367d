"""L^p beta numbers: normalized distances of a measure to affine planes.

For a bounded region R (dyadic cube, triple cube, or closed ball) and an
m-plane l, the standard-normalized quantity is

    beta_p(mu, R)^p = inf_l  sum_i w_i (dist(x_i, l) / diam R)^p / mu(R)

which lies in [0, 1]; a zero-mass region is assigned beta = 0.  Closed balls
also admit the alternate normalization

    beta~_p(mu, B(x,r))^p = inf_l  sum_i w_i (dist(x_i, l) / r)^p / r^m

which is >= 0 and unbounded.  Both share the same minimizing plane, so the
alternate value is the standard one times 2 * (mass / r^m)^(1/p).

p = 2 has a closed-form minimizer (weighted PCA through the weighted
centroid); every other p is solved by iteratively reweighted plane fits
warm-started at the p = 2 minimizer, reported as an upper bound on the true
infimum.  An independent dense grid oracle over (angle, offset) is provided
for n = 2, m = 1 so the optimizers can be cross-checked without sharing any
machinery with them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _backend
from .errors import InputError, RangeError
from .measure import (
    Ball,
    DiscreteMeasure,
    MassTree,
    region_diam,
    region_label,
    restrict_to_region,
)

LN2 = math.log(2.0)


def check_p_range(m: int, p: float) -> None:
    """Admissible exponents for the flatness diagnostics.

    Any p >= 1 is allowed for m = 1 or m = 2; for m >= 3 the exponent must
    satisfy p < 2m/(m-2).  Violations raise RangeError.
    """
    if m < 1:
        raise RangeError(f"plane dimension m={m} must be >= 1")
    if p < 1:
        raise RangeError(f"exponent p={p} must be >= 1")
    if m >= 3:
        limit = 2.0 * m / (m - 2.0)
        if not p < limit:
            raise RangeError(
                f"exponent p={p} not admissible for m={m}: requires 1 <= p < {limit:g}"
            )


@dataclass(frozen=True)
class AffinePlane:
    """Affine m-plane: basepoint plus m orthonormal direction vectors."""

    basepoint: np.ndarray
    directions: np.ndarray  # (m, n), rows orthonormal

    def __post_init__(self):
        b = np.asarray(self.basepoint, dtype=np.float64)
        d = np.atleast_2d(np.asarray(self.directions, dtype=np.float64))
        object.__setattr__(self, "basepoint", b)
        object.__setattr__(self, "directions", d)
        m, n = d.shape
        if not 1 <= m <= n - 1:
            raise InputError(f"plane dimension m={m} must satisfy 1 <= m <= n-1={n - 1}")
        gram = d @ d.T
        if not np.allclose(gram, np.eye(m), atol=1e-10):
            raise InputError("plane directions must be orthonormal (1e-10)")

    @property
    def m(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def distances(self, positions: np.ndarray) -> np.ndarray:
        diff = positions - self.basepoint
        proj = diff @ self.directions.T
        residual = diff - proj @ self.directions
        return np.sqrt(np.einsum("ij,ij->i", residual, residual))


@dataclass(frozen=True)
class BetaResult:
    value: float
    plane: Optional[AffinePlane]
    normalization: str  # "standard" | "alternate"
    region: object
    m: int
    p: float
    converged: bool = True

    def region_label(self) -> str:
        return region_label(self.region)


@dataclass(frozen=True)
class JonesEstimate:
    """Truncated multiscale flatness energy at a point.

    value = sum over octaves k = 0..depth of beta(B(x, 2^-k))^2 * ln 2, the
    one-sample-per-octave discretization of the integral of beta^2 dr/r over
    radii (0, 1].  Empty octaves contribute zero.
    """

    x: tuple
    m: int
    p: float
    depth: int
    octave_betas: tuple
    octave_masses: tuple
    value: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "value", float(sum(b * b for b in self.octave_betas) * LN2)
        )


def _validate_m(m: int, n: int) -> None:
    if not 1 <= m <= n - 1:
        raise InputError(f"plane dimension m={m} must satisfy 1 <= m <= n-1={n - 1}")


def _weighted_pca(positions: np.ndarray, weights: np.ndarray, m: int):
    """Optimal m-plane and squared residual of a weighted p=2 fit.

    Uses the SVD of the weighted, centered data matrix rather than an
    eigendecomposition of the scatter: small singular values come out with
    absolute accuracy ~eps * sigma_max, so near-flat configurations yield
    residuals (and betas) accurate to ~1e-15 instead of ~1e-8.
    """
    mass = float(weights.sum())
    centroid = (weights @ positions) / mass
    centered = positions - centroid
    scaled = np.sqrt(weights)[:, None] * centered
    _, sigma, vt = np.linalg.svd(scaled, full_matrices=True)
    residual = float(np.square(sigma[m:]).sum()) if sigma.size > m else 0.0
    return AffinePlane(centroid, vt[:m]), residual


def _direct_beta_value(positions, weights, m: int, diam: float) -> float:
    _, residual = _weighted_pca(positions, weights, m)
    mass = float(weights.sum())
    return min(math.sqrt(max(residual, 0.0) / (mass * diam * diam)), 1.0)


def beta2_closed_form(mu: DiscreteMeasure, region, m: int = 1) -> BetaResult:
    """Exact p = 2 beta of a measure already restricted to `region`.

    basepoint = weighted centroid, directions = top-m eigenvectors of the
    weighted second-moment matrix, beta^2 = (sum of the n-m smallest
    eigenvalues) / (mass * diam^2).  Zero mass gives beta 0 with no plane.
    """
    _validate_m(m, mu.dim)
    diam = region_diam(region)
    if mu.natoms == 0:
        return BetaResult(0.0, None, "standard", region, m, 2.0)
    mass = mu.total_mass
    plane, residual = _weighted_pca(mu.positions, mu.weights, m)
    value = math.sqrt(max(residual, 0.0) / (mass * diam * diam))
    return BetaResult(min(value, 1.0), plane, "standard", region, m, 2.0)


def alternate_from_standard(value: float, p: float, mass: float, ball: Ball, m: int) -> float:
    """Convert a standard-normalized ball beta to the alternate normalization.

    Identical minimizing plane; the values differ by the explicit factor
    2 * (mass / r^m)^(1/p).
    """
    if mass == 0.0:
        return 0.0
    return value * 2.0 * (mass / ball.radius ** m) ** (1.0 / p)


def beta2_ball_alternate(mu: DiscreteMeasure, ball: Ball, m: int = 1) -> BetaResult:
    """p = 2 beta of a ball under the alternate (density-free) normalization."""
    std = beta2_closed_form(mu, ball, m)
    value = alternate_from_standard(std.value, 2.0, mu.total_mass, ball, m)
    return BetaResult(value, std.plane, "alternate", ball, m, 2.0)


def _lp_value(positions, weights, plane, p, diam, mass) -> float:
    d = plane.distances(positions) / diam
    return float((np.sum(weights * d ** p) / mass) ** (1.0 / p))


def _irls(positions, weights, plane, m, p, diam, mass, tol, max_iter):
    """Iteratively reweighted plane fits for the L^p objective.

    Keeps the best iterate seen, so the returned value never exceeds the
    objective of the starting plane.
    """
    damping = (1e-9 * diam) ** 2
    best_val = _lp_value(positions, weights, plane, p, diam, mass)
    best_plane = plane
    prev = best_val
    converged = False
    for _ in range(max_iter):
        d = plane.distances(positions)
        rw = weights * (d * d + damping) ** ((p - 2.0) / 2.0)
        plane, _ = _weighted_pca(positions, rw, m)
        val = _lp_value(positions, weights, plane, p, diam, mass)
        if val < best_val:
            best_val, best_plane = val, plane
        if abs(val - prev) <= tol * max(abs(prev), 1e-300):
            converged = True
            break
        prev = val
    return best_val, best_plane, converged


def _start_planes(positions, weights, m, base_plane):
    """Deterministic multistart set: the p=2 plane, eigenvector-subset planes,
    and fixed in-plane rotations of the boundary eigenvector pair.

    The extra starts cost little and rescue configurations whose p=2 spectrum
    is degenerate (tied eigenvalues), where a single warm start can stall on
    a symmetric saddle of the L^p objective.
    """
    n = positions.shape[1]
    mass = float(weights.sum())
    centroid = (weights @ positions) / mass
    centered = positions - centroid
    scatter = (weights[:, None] * centered).T @ centered
    _, eigvecs = np.linalg.eigh(scatter)

    starts = [base_plane]
    subsets = list(itertools.combinations(range(n), m))
    if len(subsets) > 8:
        top = tuple(range(n - m, n))
        subsets = [top] + [
            top[:-1] + (i,) for i in range(n - m) if i not in top
        ][:7]
    for subset in subsets:
        directions = eigvecs[:, list(subset)].T
        starts.append(AffinePlane(centroid, directions))
    # rotate the weakest in-plane direction toward the strongest residual one
    u = eigvecs[:, n - m]
    v = eigvecs[:, n - m - 1]
    for angle in (math.pi / 8, math.pi / 4, 3 * math.pi / 8):
        rotated = math.cos(angle) * u + math.sin(angle) * v
        directions = np.vstack([rotated, eigvecs[:, n - m + 1:].T]) if m > 1 else rotated[None, :]
        starts.append(AffinePlane(centroid, directions))
    return starts


def beta_p_general(
    mu: DiscreteMeasure,
    region,
    m: int = 1,
    p: float = 2.0,
    *,
    tol: float = 1e-9,
    max_iter: int = 500,
) -> BetaResult:
    """L^p beta of a measure already restricted to `region` (upper bound).

    p = 2 delegates to the closed form.  Other exponents run iteratively
    reweighted fits from the p = 2 minimizer (plus deterministic auxiliary
    starts); the result never exceeds the objective of the p = 2 plane.  A
    run that hits the iteration cap on the winning start is flagged via
    `converged=False`.
    """
    if p < 1:
        raise RangeError(f"exponent p={p} must be >= 1")
    _validate_m(m, mu.dim)
    if p == 2.0:
        return beta2_closed_form(mu, region, m)
    diam = region_diam(region)
    if mu.natoms == 0:
        return BetaResult(0.0, None, "standard", region, m, p)
    mass = mu.total_mass
    base = beta2_closed_form(mu, region, m)
    # exactly flat input: the p=2 plane is optimal for every p
    if base.value <= 1e-14:
        return BetaResult(
            _lp_value(mu.positions, mu.weights, base.plane, p, diam, mass),
            base.plane,
            "standard",
            region,
            m,
            p,
        )
    best_val, best_plane, best_conv = math.inf, None, False
    for plane in _start_planes(mu.positions, mu.weights, m, base.plane):
        val, fitted, conv = _irls(
            mu.positions, mu.weights, plane, m, p, diam, mass, tol, max_iter
        )
        if val < best_val:
            best_val, best_plane, best_conv = val, fitted, conv
    return BetaResult(min(best_val, 1.0), best_plane, "standard", region, m, p, best_conv)


# ---------------------------------------------------------------------------
# independent grid oracle (n = 2, m = 1)
# ---------------------------------------------------------------------------

def beta_oracle(
    mu: DiscreteMeasure,
    region,
    p: float = 2.0,
    *,
    coarse_theta: int = 512,
    coarse_offset: int = 256,
    refine_tol: float = 1e-8,
    max_rounds: int = 80,
    top_k: int = 3,
) -> float:
    """Dense (angle x offset) grid search for the planar line beta.

    Lines are {x : x . (cos t, sin t) = s}.  The coarse grid covers
    t in [0, pi) and |s| <= max|x_i|; the best cells are then refined by
    repeated zooming until successive refinements change the value by less
    than `refine_tol` (well under the 1e-6 the oracle promises).  Shares no
    code path with the eigen/IRLS solvers.
    """
    if mu.dim != 2:
        raise InputError("the grid oracle is defined for n=2 only")
    if mu.natoms > 200:
        raise InputError("the grid oracle is restricted to small instances (<= 200 atoms)")
    if p < 1:
        raise RangeError(f"exponent p={p} must be >= 1")
    if mu.natoms == 0:
        return 0.0
    diam = region_diam(region)
    mass = mu.total_mass
    radius = float(np.sqrt(np.einsum("ij,ij->i", mu.positions, mu.positions)).max())
    radius = max(radius, 1e-12)

    thetas = np.arange(coarse_theta) * (math.pi / coarse_theta)
    offsets = np.linspace(-radius, radius, coarse_offset)
    grid = _backend.line_grid_objective(
        mu.positions, mu.weights, np.cos(thetas), np.sin(thetas), offsets, p
    )
    flat = np.argsort(grid, axis=None, kind="stable")[:top_k]
    dt = math.pi / coarse_theta
    ds = offsets[1] - offsets[0] if coarse_offset > 1 else radius

    best_obj = math.inf
    for cell in flat:
        ti, si = np.unravel_index(cell, grid.shape)
        t0, s0 = thetas[ti], offsets[si]
        wt, ws = 2.5 * dt, 2.5 * ds
        prev = math.inf
        for _ in range(max_rounds):
            tg = np.linspace(t0 - wt, t0 + wt, 33)
            sg = np.linspace(s0 - ws, s0 + ws, 33)
            sub = _backend.line_grid_objective(
                mu.positions, mu.weights, np.cos(tg), np.sin(tg), sg, p
            )
            k = int(np.argmin(sub))
            ti2, si2 = np.unravel_index(k, sub.shape)
            t0, s0 = float(tg[ti2]), float(sg[si2])
            obj = float(sub[ti2, si2])
            val = (obj / mass) ** (1.0 / p) / diam
            pv = (prev / mass) ** (1.0 / p) / diam if math.isfinite(prev) else math.inf
            if abs(pv - val) < refine_tol:
                break
            prev = obj
            wt /= 8.0
            ws /= 8.0
        best_obj = min(best_obj, obj)
    return (best_obj / mass) ** (1.0 / p) / diam


# ---------------------------------------------------------------------------
# Jones function (truncated dyadic octaves)
# ---------------------------------------------------------------------------

def jones_function(
    mu: DiscreteMeasure, x, m: int = 1, p: float = 2.0, depth: int = 10
) -> JonesEstimate:
    """Truncated flatness energy sum_k beta(B(x, 2^-k))^2 ln 2, k = 0..depth.

    One beta sample per octave; empty octaves contribute zero, matching the
    zero-mass convention.  Nondecreasing in depth.
    """
    if depth < 0:
        raise InputError("depth must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    betas, masses = [], []
    for k in range(depth + 1):
        ball = Ball(tuple(x), 2.0 ** (-k))
        sub = restrict_to_region(mu, ball)
        masses.append(sub.total_mass)
        if sub.natoms == 0:
            betas.append(0.0)
        elif p == 2.0:
            betas.append(beta2_closed_form(sub, ball, m).value)
        else:
            betas.append(beta_p_general(sub, ball, m, p).value)
    return JonesEstimate(tuple(float(v) for v in x), m, p, depth, tuple(betas), tuple(masses))


# ---------------------------------------------------------------------------
# bulk per-cube sweeps over a mass tree
# ---------------------------------------------------------------------------

def _batched_beta_from_moments(mass, first, second, m, diam):
    """Vector of betas from per-region raw moments (origin-based).

    scatter = second - outer(first, first)/mass; beta^2 = (sum of the n-m
    smallest eigenvalues) / (mass * diam^2).
    """
    n = first.shape[1]
    centroid = first / mass[:, None]
    scatter = second - centroid[:, :, None] * first[:, None, :]
    scatter = 0.5 * (scatter + np.swapaxes(scatter, 1, 2))
    eigvals = np.linalg.eigvalsh(scatter)
    residual = np.clip(eigvals[:, : n - m], 0.0, None).sum(axis=1)
    beta_sq = residual / (mass * diam * diam)
    return np.sqrt(np.clip(beta_sq, 0.0, 1.0))


def _local_level_moments(tree: MassTree, level: int):
    """Per-cube raw moments in cube-local coordinates.

    Accumulating about each cube's own center keeps all coordinates at the
    cube-side scale, so the centered scatter loses no precision even when the
    cloud sits far from the origin (translation invariance to ~1e-14).
    """
    lv = tree.level(level)
    side = 2.0 ** (-level)
    centers = (lv.keys.astype(np.float64) + 0.5) * side
    pos = tree.measure.positions[lv.order]
    w = tree.measure.weights[lv.order]
    seg_len = np.diff(np.append(lv.start, lv.order.size))
    local = pos - np.repeat(centers, seg_len, axis=0)
    mass, first, second = _backend.segment_moments(local, w, lv.start)
    return lv, centers, mass, first, second


#: bulk moment betas below this are recomputed through the exact SVD path
#: (the moment path's eigenvalue noise floor is ~1e-8 in beta near zero)
_FLAT_REFINE = 1e-6


def cube_betas(tree: MassTree, level: int, m: int = 1) -> np.ndarray:
    """p=2 beta per occupied cube at one level (order = lexicographic keys)."""
    _validate_m(m, tree.dim)
    lv = tree.level(level)
    if lv.ncubes == 0:
        return np.empty((0,))
    _, _, mass, first, second = _local_level_moments(tree, level)
    diam = math.sqrt(tree.dim) * 2.0 ** (-level)
    betas = _batched_beta_from_moments(mass, first, second, m, diam)
    positions = tree.measure.positions
    weights = tree.measure.weights
    for i in np.flatnonzero(betas <= _FLAT_REFINE):
        seg = lv.segment(i)
        betas[i] = _direct_beta_value(positions[seg], weights[seg], m, diam)
    return betas


def triple_cube_betas(tree: MassTree, level: int, m: int = 1):
    """p=2 beta of the triple cube 3Q per occupied cube Q at one level.

    Returns (betas (M,), masses3 (M,)) aligned with the level's key order.
    Neighbor moments are aggregated additively after re-centering each onto
    the central cube, so the cost is one moment pass plus 3^n hash lookups
    per cube.
    """
    _validate_m(m, tree.dim)
    lv = tree.level(level)
    n = tree.dim
    if lv.ncubes == 0:
        return np.empty((0,)), np.empty((0,))
    _, _, mass, first, second = _local_level_moments(tree, level)
    side = 2.0 ** (-level)
    M = lv.ncubes
    mass3 = np.zeros(M)
    first3 = np.zeros((M, n))
    second3 = np.zeros((M, n, n))
    offsets = [np.asarray(o, dtype=np.int64) for o in itertools.product((-1, 0, 1), repeat=n)]
    keys = lv.keys
    for i in range(M):
        row = keys[i]
        for off in offsets:
            jdx = lv.lookup(row + off)
            if jdx is None:
                continue
            # neighbor moments are about its own center; shift by d to ours
            d = off.astype(np.float64) * side
            mass3[i] += mass[jdx]
            first3[i] += first[jdx] + mass[jdx] * d
            second3[i] += (
                second[jdx]
                + np.outer(d, first[jdx])
                + np.outer(first[jdx], d)
                + mass[jdx] * np.outer(d, d)
            )
    diam = 3.0 * math.sqrt(n) * 2.0 ** (-level)
    betas = _batched_beta_from_moments(mass3, first3, second3, m, diam)
    positions = tree.measure.positions
    weights = tree.measure.weights
    for i in np.flatnonzero(betas <= _FLAT_REFINE):
        segs = []
        for off in offsets:
            jdx = lv.lookup(keys[i] + off)
            if jdx is not None:
                segs.append(lv.segment(jdx))
        seg = np.concatenate(segs)
        betas[i] = _direct_beta_value(positions[seg], weights[seg], m, diam)
    return betas, mass3


@dataclass(frozen=True)
class LiminfBetaReport:
    """Per-atom minimum over scales of the triple-cube beta.

    per_level_beta[j, i] is the beta of 3Q for the level-j cube Q containing
    atom i; min_beta is the minimum over j = 0..depth, a finite-depth
    lower-proxy for the liminf over vanishing scales.
    """

    depth: int
    m: int
    per_level_beta: np.ndarray  # (depth+1, N)
    min_beta: np.ndarray  # (N,)


def liminf_beta_diagnostic(tree: MassTree, depth: Optional[int] = None, m: int = 1) -> LiminfBetaReport:
    """For each atom, min over levels j <= depth of beta2(mu|3Q, 3Q), Q ∋ atom."""
    if depth is None:
        depth = tree.depth
    if depth > tree.depth:
        raise InputError(f"diagnostic depth {depth} exceeds tree depth {tree.depth}")
    N = tree.measure.natoms
    per_level = np.zeros((depth + 1, N))
    for j in range(depth + 1):
        betas, _ = triple_cube_betas(tree, j, m)
        if N:
            per_level[j] = betas[tree.level(j).atom_cube]
    min_beta = per_level.min(axis=0) if N else np.empty((0,))
    return LiminfBetaReport(depth, m, per_level, min_beta)


@dataclass(frozen=True)
class DyadicBetaSumReport:
    """Per-atom truncated sum over the cube chain of beta(3Q)^2 diam Q / mu(Q).

    The summand couples flatness on the tripled cube with the inverse mass
    density; finiteness along the full chain is the cube-based multiscale
    flatness test for measures carried by rectifiable curves.
    """

    depth: int
    m: int
    per_atom_sum: np.ndarray


def dyadic_beta_sum(tree: MassTree, depth: Optional[int] = None, m: int = 1) -> DyadicBetaSumReport:
    if depth is None:
        depth = tree.depth
    if depth > tree.depth:
        raise InputError(f"diagnostic depth {depth} exceeds tree depth {tree.depth}")
    N = tree.measure.natoms
    total = np.zeros(N)
    for j in range(depth + 1):
        lv = tree.level(j)
        if lv.ncubes == 0:
            continue
        betas, _ = triple_cube_betas(tree, j, m)
        diam = math.sqrt(tree.dim) * 2.0 ** (-j)
        per_cube = betas ** 2 * diam / lv.mass
        total += per_cube[lv.atom_cube]
    return DyadicBetaSumReport(depth, m, total)
