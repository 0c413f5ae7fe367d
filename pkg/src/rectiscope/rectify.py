"""Good/bad cube partition and rectifiable-curve extraction.

Given a root cube Q0 with mass eta > 0, a sum bound N, and 0 < eps < 1/eta,
let A be the atoms of Q0 whose truncated density sum satisfies S_K <= N.
A stored cube Q inside Q0 is *bad* when some cube R with Q ⊆ R ⊆ Q0 has
mu(A ∩ R) <= eps * mu(A) * mu(R), and *good* otherwise.  Badness is
inherited by descendants, so a single top-down pass (parent bad OR own
inequality) labels every stored cube; this is equivalent to the existential
ancestor form at O(#cubes) cost.

The partition certifies three properties, each re-checked at runtime:
  (1) every stored descendant of a bad cube is bad;
  (2) the retained set B (A-atoms avoiding all bad cubes) keeps mass
      mu(B) >= (1 - eps*eta) * mu(A);
  (3) the good-cube diameter sum is strictly below N / eps.

Joining each good cube's center to its parent's center yields a tree whose
total length is at most half the good diameter sum, hence below N/(2 eps);
a closed Euler tour turns the tree into a polyline of exactly twice its
length, the explicit stand-in for a Lipschitz parameterization.  Truncation
note: A is computed from S_K <= N, a superset of the untruncated sub-level
set; the partition properties are verified for that set, which is legitimate
because only "S <= N on A" enters their derivation, and it holds a fortiori.

Any measured failure of a certified bound raises InvariantViolation: it
cannot be caused by input data, only by an implementation bug.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ._util import ordered_map
from .density import SsumReport, density_sum
from .errors import InputError, InvariantViolation
from .measure import DyadicCubeId, MassTree

log = logging.getLogger("rectiscope.rectify")

#: floating-point slack for the certified mass inequality
MASS_TOL = 1e-12


@dataclass(frozen=True)
class PartitionConfig:
    """Parameters of one partition run: root cube, sum bound, eps, depth."""

    q0: DyadicCubeId
    s_bound: float
    eps: float
    depth: int

    def __post_init__(self):
        if not (self.s_bound > 0 and math.isfinite(self.s_bound)):
            raise InputError("the sum bound must be a positive finite real")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise InputError("eps must be a positive finite real")
        if self.depth < self.q0.level:
            raise InputError("depth must reach at least the root cube's level")

    def validate_against(self, tree: MassTree) -> float:
        """Returns eta = mu(Q0); enforces eta > 0 and eps < 1/eta."""
        if self.depth > tree.depth:
            raise InputError(
                f"config depth {self.depth} exceeds tree depth {tree.depth}"
            )
        eta = tree.cube_mass(self.q0)
        if eta <= 0.0:
            raise InputError("the root cube carries no mass (eta must be positive)")
        if not self.eps < 1.0 / eta:
            raise InputError(
                f"eps={self.eps} must satisfy 0 < eps < 1/eta = {1.0 / eta}"
            )
        return eta


@dataclass(frozen=True)
class LevelSet:
    """Atoms of Q0 whose truncated density sum is at most the bound.

    Since S_K <= S, this is a superset of the untruncated sub-level set;
    callers treat it as the working set A at depth K.
    """

    q0: DyadicCubeId
    s_bound: float
    depth: int
    indices: np.ndarray
    mass: float


def level_set_A(
    ssum: SsumReport, tree: MassTree, q0: DyadicCubeId, s_bound: float
) -> LevelSet:
    """Atoms x in Q0 with S_K(x) <= s_bound (inclusive)."""
    if s_bound < 0:
        raise InputError("the sum bound must be nonnegative")
    if tree.cube_mass(q0) <= 0.0:
        raise InputError("the root cube carries no mass (eta must be positive)")
    lv = tree.level(q0.level)
    root_idx = lv.lookup(q0.coords)
    members = lv.atom_cube == root_idx
    mask = members & (ssum.s_values <= s_bound)
    indices = np.flatnonzero(mask).astype(np.int64)
    mass = float(tree.measure.weights[indices].sum()) if indices.size else 0.0
    return LevelSet(q0, float(s_bound), ssum.depth, indices, mass)


class _LevelLabels:
    """Stored cubes under Q0 at one level with their labels and masses."""

    __slots__ = ("level", "cube_pos", "mass", "mass_a", "bad", "parent_pos", "sub_of_cube")

    def __init__(self, level, cube_pos, mass, mass_a, bad, parent_pos, sub_of_cube):
        self.level = level
        self.cube_pos = cube_pos  # indices into the tree level's key table
        self.mass = mass
        self.mass_a = mass_a
        self.bad = bad
        self.parent_pos = parent_pos  # index into the previous _LevelLabels arrays
        self.sub_of_cube = sub_of_cube  # tree cube index -> position here (-1 otherwise)


@dataclass
class GoodBadPartition:
    """Good/bad labels for all stored cubes inside Q0 down to the depth."""

    config: PartitionConfig
    eta: float
    level_set: LevelSet
    a_mass: float
    b_indices: np.ndarray
    b_mass: float
    good_diam_sum: float
    _levels: List[_LevelLabels] = field(repr=False)
    tree: MassTree = field(repr=False)

    @property
    def q0_is_good(self) -> bool:
        top = self._levels[0]
        return bool(top.cube_pos.size) and not bool(top.bad[0])

    def is_bad(self, q: DyadicCubeId) -> bool:
        """Label of a stored cube inside Q0 (raises for unstored cubes)."""
        offset = q.level - self.config.q0.level
        if not 0 <= offset < len(self._levels):
            raise InputError("cube level outside the partition range")
        lv = self.tree.level(q.level)
        ci = lv.lookup(q.coords)
        if ci is None:
            raise InputError("cube not stored (zero mass): implicitly bad")
        pos = self._levels[offset].sub_of_cube[ci]
        if pos < 0:
            raise InputError("cube is not a descendant of the root cube")
        return bool(self._levels[offset].bad[pos])

    def good_cubes(self):
        """Good cube ids with (level, lexicographic) deterministic order."""
        out = []
        for ll in self._levels:
            lv = self.tree.level(ll.level)
            for pos in np.flatnonzero(~ll.bad):
                row = lv.keys[ll.cube_pos[pos]]
                out.append(DyadicCubeId(ll.level, tuple(int(v) for v in row)))
        return out

    def rows(self):
        """Report rows: one per stored cube inside Q0."""
        for ll in self._levels:
            lv = self.tree.level(ll.level)
            for pos in range(ll.cube_pos.size):
                row = lv.keys[ll.cube_pos[pos]]
                q = DyadicCubeId(ll.level, tuple(int(v) for v in row))
                yield {
                    "id": q.label(),
                    "level": ll.level,
                    "label": "bad" if ll.bad[pos] else "good",
                    "mass": float(ll.mass[pos]),
                    "massA": float(ll.mass_a[pos]),
                }

    def level_labels(self):
        return self._levels


def classify_cubes(
    tree: MassTree, level_set: LevelSet, config: PartitionConfig
) -> GoodBadPartition:
    """Label every stored cube inside Q0 good or bad (top-down pass).

    With mu(A) = 0 every cube is declared bad and B is empty; otherwise Q0
    itself is always good because eps * eta < 1.
    """
    eta = config.validate_against(tree)
    if config.q0 != level_set.q0:
        raise InputError("level set was computed for a different root cube")
    n = tree.dim
    weights = tree.measure.weights
    a_mass = level_set.mass
    w_a = np.zeros(tree.measure.natoms)
    if level_set.indices.size:
        w_a[level_set.indices] = weights[level_set.indices]

    threshold = config.eps * a_mass
    levels: List[_LevelLabels] = []
    prev: Optional[_LevelLabels] = None
    for j in range(config.q0.level, config.depth + 1):
        lv = tree.level(j)
        if lv.ncubes == 0:
            sub = np.empty((0,), dtype=np.int64)
        else:
            shift = j - config.q0.level
            anc = lv.keys // (1 << shift) if shift else lv.keys
            sub = np.flatnonzero(
                np.all(anc == np.asarray(config.q0.coords, dtype=np.int64), axis=1)
            ).astype(np.int64)
        mass = lv.mass[sub]
        mass_a_all = np.bincount(
            lv.atom_cube, weights=w_a, minlength=lv.ncubes
        ) if lv.atom_cube.size else np.zeros(lv.ncubes)
        mass_a = mass_a_all[sub]
        sub_of_cube = np.full(lv.ncubes, -1, dtype=np.int64)
        sub_of_cube[sub] = np.arange(sub.size)

        if a_mass == 0.0:
            bad = np.ones(sub.size, dtype=bool)
            parent_pos = np.full(sub.size, -1, dtype=np.int64)
        else:
            own = mass_a <= threshold * mass
            if prev is None:
                bad = own
                parent_pos = np.full(sub.size, -1, dtype=np.int64)
            else:
                upl = tree.level(j - 1)
                parent_pos = np.empty(sub.size, dtype=np.int64)
                for t, ci in enumerate(sub):
                    pk = lv.keys[ci] // 2
                    parent_pos[t] = prev.sub_of_cube[upl.lookup(pk)]
                bad = own | prev.bad[parent_pos]
        cur = _LevelLabels(j, sub, mass, mass_a, bad, parent_pos, sub_of_cube)
        levels.append(cur)
        prev = cur

    # B: atoms of A whose deepest cube is good (the whole chain then is)
    if a_mass == 0.0 or level_set.indices.size == 0:
        b_indices = np.empty((0,), dtype=np.int64)
    else:
        deepest = tree.level(config.depth)
        ll = levels[-1]
        pos = ll.sub_of_cube[deepest.atom_cube[level_set.indices]]
        good_atom = (pos >= 0) & ~ll.bad[np.maximum(pos, 0)]
        b_indices = level_set.indices[good_atom]
    b_mass = float(weights[b_indices].sum()) if b_indices.size else 0.0

    good_diam_sum = 0.0
    for ll in levels:
        count_good = int((~ll.bad).sum())
        good_diam_sum += count_good * math.sqrt(n) * 2.0 ** (-ll.level)

    return GoodBadPartition(
        config, eta, level_set, a_mass, b_indices, b_mass, good_diam_sum, levels, tree
    )


# ---------------------------------------------------------------------------
# certified property checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool
    slack: float
    detail: str


@dataclass(frozen=True)
class PartitionPropertyReport:
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self):
        return {
            c.name: {"passed": c.passed, "slack": c.slack, "detail": c.detail}
            for c in self.checks
        }


def partition_properties_check(
    partition: GoodBadPartition, tol: float = MASS_TOL
) -> PartitionPropertyReport:
    """Verify the three certified partition properties; raise on failure.

    `tol` is the floating-point slack granted to the mass inequality; the
    other two checks are exact.  A failed property is an implementation bug
    by construction, so it raises InvariantViolation rather than returning a
    falsy report.
    """
    cfg = partition.config
    levels = partition.level_labels()

    violations = 0
    for ll in levels[1:]:
        if ll.cube_pos.size:
            prev = levels[ll.level - cfg.q0.level - 1]
            violations += int(np.sum(prev.bad[ll.parent_pos] & ~ll.bad))
    inherited = PropertyCheck(
        "inherited_badness",
        violations == 0,
        float(-violations),
        f"{violations} stored child(ren) of bad cubes labeled good",
    )

    target = (1.0 - cfg.eps * partition.eta) * partition.a_mass
    slack2 = partition.b_mass - target
    retained = PropertyCheck(
        "retained_mass",
        slack2 >= -tol * max(1.0, partition.a_mass),
        float(slack2),
        f"mu(B)={partition.b_mass!r} vs (1-eps*eta)*mu(A)={target!r}",
    )

    bound3 = cfg.s_bound / cfg.eps
    slack3 = bound3 - partition.good_diam_sum
    diam_sum = PropertyCheck(
        "good_diameter_sum",
        partition.good_diam_sum < bound3,
        float(slack3),
        f"sum={partition.good_diam_sum!r} vs bound N/eps={bound3!r} (strict)",
    )

    report = PartitionPropertyReport((inherited, retained, diam_sum))
    if not report.all_passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise InvariantViolation(
            f"partition properties failed: {', '.join(failed)} -- this is a bug"
        )
    return report


# ---------------------------------------------------------------------------
# curve tree, length certificate, Euler-tour polyline
# ---------------------------------------------------------------------------

@dataclass
class CurveTree:
    """Segments joining each good cube's center to its parent's center.

    Connected and acyclic by construction (good cubes are closed under
    taking parents up to Q0).  Each edge joining nested cube centers has
    length exactly half the child's diameter, so the total length is at most
    half the good-cube diameter sum.
    """

    root: Optional[DyadicCubeId]
    cube_ids: list
    vertices: np.ndarray  # (V, n) centers
    edges: list  # (parent_vertex, child_vertex)
    edge_lengths: np.ndarray
    total_length: float

    @property
    def is_empty(self) -> bool:
        return self.root is None

    @property
    def nvertices(self) -> int:
        return 0 if self.is_empty else self.vertices.shape[0]


def build_curve_tree(partition: GoodBadPartition) -> CurveTree:
    """One vertex per good cube, one edge per non-root good cube.

    When Q0 itself is bad (only possible with mu(A) = 0) the tree is empty
    and a warning is logged.
    """
    n = partition.tree.dim
    if not partition.q0_is_good:
        log.warning("root cube is bad (mu(A)=0); returning an empty curve tree")
        return CurveTree(None, [], np.empty((0, n)), [], np.empty((0,)), 0.0)
    good = partition.good_cubes()
    index = {q: i for i, q in enumerate(good)}
    vertices = np.vstack([q.center for q in good])
    edges = []
    lengths = []
    for q, vi in index.items():
        if q.level == partition.config.q0.level:
            continue
        pi = index[q.parent()]
        edges.append((pi, vi))
        lengths.append(float(np.linalg.norm(vertices[vi] - vertices[pi])))
    lengths = np.asarray(lengths)
    return CurveTree(
        partition.config.q0, good, vertices, edges, lengths, float(lengths.sum())
    )


@dataclass(frozen=True)
class LengthCertificate:
    length: float
    half_good_diam_sum: float
    bound: float  # N / (2 eps)
    passed: bool

    def as_dict(self):
        return {
            "length": self.length,
            "half_good_diam_sum": self.half_good_diam_sum,
            "bound": self.bound,
            "passed": self.passed,
        }


def tree_length_certificate(
    tree: CurveTree, partition: GoodBadPartition
) -> LengthCertificate:
    """Certify length <= half the good diameter sum and < N/(2 eps)."""
    cfg = partition.config
    half_sum = 0.5 * partition.good_diam_sum
    bound = cfg.s_bound / (2.0 * cfg.eps)
    ok = (
        tree.total_length <= half_sum * (1.0 + 1e-12) + 1e-300
        and tree.total_length < bound
    )
    cert = LengthCertificate(tree.total_length, half_sum, bound, ok)
    if not ok:
        raise InvariantViolation(
            f"curve tree length {tree.total_length!r} violates its certificate "
            f"(half-sum {half_sum!r}, bound {bound!r}) -- this is a bug"
        )
    return cert


@dataclass
class Polyline:
    """Ordered vertex list; length is the sum of consecutive distances."""

    vertices: np.ndarray  # (L, n)
    length: float

    @property
    def nvertices(self) -> int:
        return self.vertices.shape[0]


def parameterize_curve(tree: CurveTree) -> Polyline:
    """Closed depth-first Euler tour visiting every tree edge exactly twice.

    The tour starts and ends at the root, so the polyline length equals
    twice the tree length (up to summation order); every tree vertex
    appears.  An empty tree gives a degenerate polyline.
    """
    n = tree.vertices.shape[1] if tree.nvertices else 0
    if tree.is_empty:
        return Polyline(np.empty((0, n)), 0.0)
    if tree.nvertices == 1:
        return Polyline(tree.vertices[:1].copy(), 0.0)
    adj = {vi: [] for vi in range(tree.nvertices)}
    for pi, vi in tree.edges:
        adj[pi].append(vi)
    tour = [0]
    stack = [(0, iter(adj[0]))]
    while stack:
        v, it = stack[-1]
        child = next(it, None)
        if child is None:
            stack.pop()
            if stack:
                tour.append(stack[-1][0])
        else:
            tour.append(child)
            stack.append((child, iter(adj[child])))
    verts = tree.vertices[tour]
    seglen = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    return Polyline(verts, float(seglen.sum()))


# ---------------------------------------------------------------------------
# coverage report and the multi-eps extraction driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageReport:
    """Distance of the retained atoms to the curve plus a length premeasure.

    h1_estimate sums the diameters of the good cubes at `level` that contain
    at least one retained atom: an upper premeasure for the retained set that
    should shrink as the level grows.
    """

    level: int
    max_distance: float  # 0.0 when B is empty (vacuous)
    h1_estimate: float

    def as_dict(self):
        return {
            "level": self.level,
            "max_distance": self.max_distance,
            "h1_estimate": self.h1_estimate,
        }


def _min_distances_to_polyline(points: np.ndarray, verts: np.ndarray) -> np.ndarray:
    if verts.shape[0] == 0:
        return np.full(points.shape[0], np.inf)
    if verts.shape[0] == 1:
        return np.linalg.norm(points - verts[0], axis=1)
    a = verts[:-1]
    d = verts[1:] - a
    dd = np.einsum("ej,ej->e", d, d)
    dd_safe = np.where(dd > 0.0, dd, 1.0)
    out = np.empty(points.shape[0])
    chunk = max(1, int(2_000_000 // max(a.shape[0], 1)))
    for lo in range(0, points.shape[0], chunk):
        p = points[lo: lo + chunk]
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("pej,ej->pe", ap, d) / dd_safe, 0.0, 1.0)
        proj = ap - t[:, :, None] * d[None, :, :]
        dist = np.sqrt(np.einsum("pej,pej->pe", proj, proj))
        out[lo: lo + chunk] = dist.min(axis=1)
    return out


def coverage_report(
    partition: GoodBadPartition, polyline: Polyline, level: Optional[int] = None
) -> CoverageReport:
    """Max distance from retained atoms to the polyline and the premeasure
    estimate at the chosen level (defaults to the partition depth).

    Every retained atom sits in a good cube chain reaching the full depth,
    so its distance to the curve is at most that cube's diameter.
    """
    cfg = partition.config
    if level is None:
        level = cfg.depth
    if not cfg.q0.level <= level <= cfg.depth:
        raise InputError("coverage level outside the partition range")
    tree = partition.tree
    b = partition.b_indices
    if b.size == 0:
        return CoverageReport(level, 0.0, 0.0)
    dists = _min_distances_to_polyline(tree.measure.positions[b], polyline.vertices)
    ll = partition.level_labels()[level - cfg.q0.level]
    lv = tree.level(level)
    occupied = np.zeros(ll.cube_pos.size, dtype=bool)
    pos = ll.sub_of_cube[lv.atom_cube[b]]
    occupied[pos[pos >= 0]] = True
    count = int(np.sum(occupied & ~ll.bad))
    diam = math.sqrt(tree.dim) * 2.0 ** (-level)
    return CoverageReport(level, float(dists.max()), count * diam)


@dataclass
class FamilyEntry:
    eps: float
    partition: GoodBadPartition
    properties: PartitionPropertyReport
    curve_tree: CurveTree
    certificate: LengthCertificate
    polyline: Polyline
    coverage: CoverageReport


@dataclass
class ExtractionResult:
    """Per-eps curves plus the aggregate coverage of the working set A."""

    q0: DyadicCubeId
    s_bound: float
    depth: int
    eta: float
    a_mass: float
    entries: List[FamilyEntry]
    uncovered_mass: float
    uncovered_bound: float  # eta * mu(A) * min(eps)
    tol: float = MASS_TOL

    @property
    def passed(self) -> bool:
        return self.uncovered_mass <= self.uncovered_bound + self.tol


def extract_rectifiable_family(
    tree: MassTree,
    q0: DyadicCubeId,
    s_bound: float,
    eps_values,
    depth: Optional[int] = None,
    jobs: int = 1,
    tol: float = MASS_TOL,
) -> ExtractionResult:
    """Run the partition and curve construction for a decreasing eps sequence.

    Each eps yields a retained set B_i carried by its curve; the mass of A
    left uncovered by the union of the B_i is certified to be at most
    eta * mu(A) * min(eps_i).
    """
    eps_list = [float(e) for e in eps_values]
    if not eps_list:
        raise InputError("the eps sequence must be nonempty")
    if not all(a > b for a, b in zip(eps_list, eps_list[1:])):
        raise InputError("the eps sequence must be strictly decreasing")
    if depth is None:
        depth = tree.depth
    eta = tree.cube_mass(q0)
    if eta <= 0.0:
        raise InputError("the root cube carries no mass (eta must be positive)")
    for e in eps_list:
        if not 0.0 < e < 1.0 / eta:
            raise InputError(f"eps={e} outside (0, 1/eta) with eta={eta}")

    ssum = density_sum(tree, depth)
    aset = level_set_A(ssum, tree, q0, s_bound)

    def run_one(eps: float) -> FamilyEntry:
        cfg = PartitionConfig(q0, s_bound, eps, depth)
        part = classify_cubes(tree, aset, cfg)
        props = partition_properties_check(part, tol=tol)
        ctree = build_curve_tree(part)
        cert = (
            tree_length_certificate(ctree, part)
            if not ctree.is_empty
            else LengthCertificate(0.0, 0.5 * part.good_diam_sum, s_bound / (2 * eps), True)
        )
        poly = parameterize_curve(ctree)
        cov = coverage_report(part, poly)
        return FamilyEntry(eps, part, props, ctree, cert, poly, cov)

    entries = ordered_map(run_one, eps_list, jobs=jobs)

    covered = np.zeros(tree.measure.natoms, dtype=bool)
    for entry in entries:
        covered[entry.partition.b_indices] = True
    uncovered_idx = aset.indices[~covered[aset.indices]] if aset.indices.size else aset.indices
    uncovered = float(tree.measure.weights[uncovered_idx].sum()) if uncovered_idx.size else 0.0
    bound = eta * aset.mass * min(eps_list)
    result = ExtractionResult(
        q0, float(s_bound), depth, eta, aset.mass, entries, uncovered, bound, tol
    )
    if not result.passed:
        raise InvariantViolation(
            f"uncovered mass {uncovered!r} exceeds certified bound {bound!r} -- this is a bug"
        )
    return result
