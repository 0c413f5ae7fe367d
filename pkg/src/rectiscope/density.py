"""Hausdorff density estimates and the dyadic density sum.

Per-point density ratios mu(B(x, 2^-k)) / (omega_m 2^-km) are reported over
the dyadic radius grid; their min/max over the computed octaves are
finite-scale proxies for the lower/upper density (true limits are not
computable from finitely many scales).

The density sum at a point is S(x) = sum over dyadic cubes Q containing x of
diam Q / mu(Q).  Truncated at depth K it is nondecreasing in K and a lower
bound on the full sum, so the sub-level set {S_K <= N} contains the true
sub-level set.  Finiteness of S forces the 1-density to blow up and makes
the measure extractable onto rectifiable curves; divergence is the failure
mode.  The converging/diverging labels emitted here are engineering
heuristics over the last few octaves, clearly labeled as such.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .beta import check_p_range, jones_function
from .errors import InputError
from .measure import Ball, DiscreteMeasure, MassTree, ball_mass

#: heuristic thresholds for the growth classification
CONVERGING_RATIO = 0.9
DIVERGING_RATIO = 1.1


def unit_ball_volume(m: int) -> float:
    """Volume of the unit ball in R^m (omega_1 = 2, omega_2 = pi, ...)."""
    if m < 1:
        raise InputError("density dimension m must be >= 1")
    return math.pi ** (m / 2.0) / math.gamma(m / 2.0 + 1.0)


@dataclass(frozen=True)
class DensityEstimate:
    """Dyadic-radius density ratios at a point; min/max are finite-scale
    proxies for the lower/upper Hausdorff m-density."""

    x: tuple
    m: int
    depth: int
    ratios: tuple  # k = 0..depth

    @property
    def min_ratio(self) -> float:
        return min(self.ratios)

    @property
    def max_ratio(self) -> float:
        return max(self.ratios)


def density_estimate(mu: DiscreteMeasure, x, m: int = 1, depth: int = 10) -> DensityEstimate:
    """Ratios mu(B(x, 2^-k)) / (omega_m 2^-km) for k = 0..depth."""
    if depth < 0:
        raise InputError("depth must be >= 0")
    omega = unit_ball_volume(m)
    x = np.asarray(x, dtype=np.float64)
    ratios = []
    for k in range(depth + 1):
        r = 2.0 ** (-k)
        ratios.append(ball_mass(mu, Ball(tuple(x), r)) / (omega * r ** m))
    return DensityEstimate(tuple(float(v) for v in x), m, depth, tuple(ratios))


@dataclass(frozen=True)
class SsumReport:
    """Truncated density sums over each atom's cube chain.

    increments[j, i] = diam Q_j(x_i) / mu(Q_j(x_i)); partial_sums is its
    cumulative sum over levels.  octave_ratio is the last increment over the
    increment two octaves earlier (the window of the last three increments);
    sum_ratio compares S_K with S_{K-3}.  Classification (heuristic):
    "diverging" when the partial sums still grow by >= DIVERGING_RATIO over
    the last three octaves, else "converging" when the increments decayed to
    <= CONVERGING_RATIO over that window, else "inconclusive".
    """

    depth: int
    increments: np.ndarray  # (depth+1, N)
    partial_sums: np.ndarray  # (depth+1, N)

    @property
    def natoms(self) -> int:
        return self.increments.shape[1]

    @property
    def s_values(self) -> np.ndarray:
        return self.partial_sums[self.depth]

    @property
    def last_increment(self) -> np.ndarray:
        return self.increments[self.depth]

    @property
    def octave_ratio(self) -> np.ndarray:
        if self.depth < 2:
            return np.full(self.natoms, np.nan)
        return self.increments[self.depth] / self.increments[self.depth - 2]

    @property
    def sum_ratio(self) -> np.ndarray:
        if self.depth < 3:
            return np.full(self.natoms, np.nan)
        return self.partial_sums[self.depth] / self.partial_sums[self.depth - 3]

    @property
    def classification(self):
        out = []
        orat, srat = self.octave_ratio, self.sum_ratio
        for i in range(self.natoms):
            if self.depth < 3:
                out.append("inconclusive")
            elif srat[i] >= DIVERGING_RATIO:
                out.append("diverging")
            elif orat[i] <= CONVERGING_RATIO:
                out.append("converging")
            else:
                out.append("inconclusive")
        return out


def density_sum(tree: MassTree, depth: Optional[int] = None) -> SsumReport:
    """S_K over the unique cube chain of every atom of the tree's measure.

    Every summand is positive (a cube containing an atom carries at least
    that atom's weight), and S_K is nondecreasing in K.
    """
    if depth is None:
        depth = tree.depth
    if depth > tree.depth:
        raise InputError(f"requested depth {depth} exceeds tree depth {tree.depth}")
    N = tree.measure.natoms
    n = tree.dim
    increments = np.zeros((depth + 1, N))
    for j in range(depth + 1):
        lv = tree.level(j)
        if N:
            diam = math.sqrt(n) * 2.0 ** (-j)
            increments[j] = diam / lv.mass[lv.atom_cube]
    return SsumReport(depth, increments, np.cumsum(increments, axis=0))


@dataclass(frozen=True)
class JonesDensityReport:
    """Joint per-atom record of the truncated Jones energy and the
    finite-scale density ratio range; supports checking the rectifiability
    hypotheses "positive lower density and finite flatness energy"
    empirically at truncation depth.  No rectifiability verdict is claimed.
    """

    m: int
    p: float
    depth: int
    jones: np.ndarray  # (N,)
    density_min: np.ndarray  # (N,)
    density_max: np.ndarray  # (N,)


def jones_density_diagnostic(
    mu: DiscreteMeasure, m: int = 1, p: float = 2.0, depth: int = 8
) -> JonesDensityReport:
    """Per-atom J_p estimate plus density min/max, gated on the p range.

    Exponents must satisfy p >= 1, and p < 2m/(m-2) when m >= 3; outside
    that range the diagnostic is rejected with a RangeError.
    """
    check_p_range(m, p)
    N = mu.natoms
    jones = np.zeros(N)
    dmin = np.zeros(N)
    dmax = np.zeros(N)
    for i in range(N):
        x = mu.positions[i]
        jones[i] = jones_function(mu, x, m, p, depth).value
        est = density_estimate(mu, x, m, depth)
        dmin[i] = est.min_ratio
        dmax[i] = est.max_ratio
    return JonesDensityReport(m, p, depth, jones, dmin, dmax)
