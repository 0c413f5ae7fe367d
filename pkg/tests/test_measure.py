"""Mass tree, dyadic cube system, restriction, and ball masses."""

import numpy as np
import pytest

from rectiscope import (
    Ball,
    DepthError,
    DiscreteMeasure,
    DyadicCubeId,
    InputError,
    ball_mass,
    build_mass_tree,
    cube_geometry,
    cube_of_point,
    restrict_to_region,
)
from rectiscope.generators import random_measure
from rectiscope.measure import empty_measure


def test_single_atom_chain():
    mu = DiscreteMeasure([[0.1, 0.1]], [1.0])
    tree = build_mass_tree(mu, 2)
    for j in range(3):
        lv = tree.level(j)
        assert lv.ncubes == 1
        assert lv.mass[0] == 1.0
    # the chain is nested
    q2 = tree.cube_of_atom(0, 2)
    assert q2.parent().parent() == tree.cube_of_atom(0, 0)


def test_empty_measure_empty_tree():
    tree = build_mass_tree(empty_measure(2), 3)
    assert tree.roots() == []
    assert tree.cube_mass(DyadicCubeId(1, (0, 0))) == 0.0


def test_quadrant_atoms_level_masses():
    pos = [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]]
    tree = build_mass_tree(DiscreteMeasure(pos, np.ones(4)), 1)
    assert tree.cube_mass(DyadicCubeId(0, (0, 0))) == 4.0
    for coords in [(0, 0), (1, 0), (0, 1), (1, 1)]:
        assert tree.cube_mass(DyadicCubeId(1, coords)) == 1.0


def test_cube_mass_direct_and_absent():
    mu = DiscreteMeasure([[0.3, 0.3]], [2.0])
    tree = build_mass_tree(mu, 2)
    assert tree.cube_mass(DyadicCubeId(2, (1, 1))) == 2.0
    assert tree.cube_mass(DyadicCubeId(2, (3, 3))) == 0.0


def test_boundary_atom_half_open_rule():
    # 1-D: atom exactly at 0.5 belongs to [0.5, 1), not [0, 0.5)
    mu = DiscreteMeasure([[0.5]], [3.0])
    tree = build_mass_tree(mu, 1)
    assert tree.cube_mass(DyadicCubeId(1, (0,))) == 0.0
    assert tree.cube_mass(DyadicCubeId(1, (1,))) == 3.0


def test_cube_mass_below_depth_raises():
    tree = build_mass_tree(DiscreteMeasure([[0.1, 0.1]], [1.0]), 2)
    with pytest.raises(DepthError):
        tree.cube_mass(DyadicCubeId(3, (0, 0)))


def test_ball_mass_closed_membership():
    mu = DiscreteMeasure([[0.5, 0.0], [1.0, 0.0], [1.5, 0.0]], [1.0, 1.0, 1.0])
    assert ball_mass(mu, Ball((0.0, 0.0), 1.0)) == 2.0  # distance exactly 1 counts
    assert ball_mass(empty_measure(2), Ball((0.0, 0.0), 1.0)) == 0.0


def test_restrict_predicates():
    mu = random_measure(1, 20)
    same = mu.restrict(lambda x: True)
    assert same.natoms == 20 and same.total_mass == mu.total_mass
    none = mu.restrict(lambda x: False)
    assert none.natoms == 0


def test_restrict_to_cube_matches_tree_mass():
    mu = random_measure(2, 50)
    tree = build_mass_tree(mu, 4)
    for q in list(tree.occupied(3))[:5]:
        sub = restrict_to_region(mu, q)
        assert sub.total_mass == pytest.approx(tree.cube_mass(q), rel=1e-12)


def test_cube_geometry():
    center, diam, (lo, hi) = cube_geometry(DyadicCubeId(0, (0, 0)))
    assert diam == pytest.approx(np.sqrt(2))
    assert np.allclose(center, [0.5, 0.5])
    assert np.allclose(lo, [-1, -1]) and np.allclose(hi, [2, 2])
    _, diam3, _ = cube_geometry(DyadicCubeId(1, (0, 0, 0)))
    assert diam3 == pytest.approx(np.sqrt(3) / 2)


def test_parent_child_roundtrip():
    q = DyadicCubeId(3, (5, -2))
    for child in q.children():
        assert child.parent() == q
    # the 2^n children tile q: each corner point of a fine grid lands in one
    pts = np.random.default_rng(0).uniform(
        [5 * 2**-3, -2 * 2**-3], [6 * 2**-3, -1 * 2**-3], size=(64, 2)
    )
    for p in pts:
        owners = [c for c in q.children() if c.contains(p)]
        assert len(owners) == 1


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_additivity_and_partition_invariants(seed):
    mu = random_measure(seed, 200, 2)
    tree = build_mass_tree(mu, 6)
    assert tree.additivity_max_rel_error() <= 1e-12
    assert tree.level_partition_max_abs_error() <= 1e-12 * max(1.0, mu.total_mass)


def test_half_open_determinism_one_cube_per_level():
    mu = random_measure(3, 100, 2)
    tree = build_mass_tree(mu, 5)
    for j in range(6):
        lv = tree.level(j)
        # every atom has exactly one cube index and segments partition atoms
        assert lv.atom_cube.shape == (100,)
        assert np.all(lv.atom_cube >= 0)
        seen = np.concatenate([lv.segment(i) for i in range(lv.ncubes)])
        assert np.array_equal(np.sort(seen), np.arange(100))


def test_build_determinism():
    mu = random_measure(4, 300, 3)
    t1 = build_mass_tree(mu, 5)
    t2 = build_mass_tree(mu, 5)
    for j in range(6):
        assert np.array_equal(t1.level(j).keys, t2.level(j).keys)
        assert np.array_equal(t1.level(j).mass, t2.level(j).mass)


def test_negative_coordinates_supported():
    mu = DiscreteMeasure([[-0.25, -1.75]], [1.0])
    tree = build_mass_tree(mu, 1)
    assert tree.cube_mass(DyadicCubeId(0, (-1, -2))) == 1.0
    assert tree.cube_mass(DyadicCubeId(1, (-1, -4))) == 1.0
    assert cube_of_point([-0.25, -1.75], 1) == DyadicCubeId(1, (-1, -4))


def test_invalid_inputs_rejected():
    with pytest.raises(InputError):
        DiscreteMeasure([[0.0, np.nan]], [1.0])
    with pytest.raises(InputError):
        DiscreteMeasure([[0.0, 0.0]], [0.0])
    with pytest.raises(InputError):
        DiscreteMeasure([[0.0, 0.0]], [-1.0])
    with pytest.raises(InputError):
        DiscreteMeasure([[np.inf, 0.0]], [1.0])
    with pytest.raises(InputError):
        build_mass_tree(DiscreteMeasure([[0.1, 0.1]], [1.0]), -1)
    with pytest.raises(InputError):
        DyadicCubeId(-1, (0, 0))
    with pytest.raises(InputError):
        Ball((0.0, 0.0), 0.0)
