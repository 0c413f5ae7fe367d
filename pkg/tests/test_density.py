"""Density ratios, the truncated density sum, and the joint diagnostic."""

import numpy as np
import pytest

from rectiscope import (
    DiscreteMeasure,
    RangeError,
    build_mass_tree,
    density_estimate,
    density_sum,
    jones_density_diagnostic,
    unit_ball_volume,
)
from rectiscope.generators import (
    cantor_quarter_line,
    four_corner_cantor,
    random_measure,
    segment_measure,
    single_atom,
    uniform_square,
)


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(np.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * np.pi / 3.0)


def test_segment_interior_density_is_one():
    # atoms at (i+0.5)/2^12: a radius-2^-k ball about x=0.5 counts exactly
    # 2^(13-k) atoms, so mu(B) = 2r and the m=1 ratio is exactly 1
    mu = segment_measure((0.0, 0.0), (1.0, 0.0), 12)
    est = density_estimate(mu, (0.5, 0.0), 1, 8)
    for k in range(1, 9):
        assert est.ratios[k] == pytest.approx(1.0, abs=1e-12)
    assert est.ratios[0] == pytest.approx(0.5)  # r=1 sees the whole segment


def test_single_atom_density_blows_up():
    mu = single_atom((0.25, 0.25), 1.0)
    est = density_estimate(mu, (0.25, 0.25), 1, 10)
    for k in range(11):
        assert est.ratios[k] == pytest.approx(2.0**k / 2.0)
    assert est.max_ratio == est.ratios[-1]


def test_empty_octaves_ratio_zero():
    mu = single_atom((10.0, 10.0), 1.0)
    est = density_estimate(mu, (0.0, 0.0), 1, 4)
    assert all(r == 0.0 for r in est.ratios)


def test_density_homogeneity_in_mass():
    mu = random_measure(5, 30)
    scaled = DiscreteMeasure(mu.positions, 3.0 * mu.weights)
    a = density_estimate(mu, (0.5, 0.5), 1, 6)
    b = density_estimate(scaled, (0.5, 0.5), 1, 6)
    assert np.allclose(np.asarray(b.ratios), 3.0 * np.asarray(a.ratios), rtol=1e-12)


def test_single_atom_sum_geometric_value():
    mu = single_atom((0.1, 0.1), 1.0)
    tree = build_mass_tree(mu, 20)
    rep = density_sum(tree, 20)
    assert rep.s_values[0] == pytest.approx(2.0 * np.sqrt(2.0), abs=1e-5)
    assert rep.classification[0] == "converging"
    # nondecreasing partial sums, positive increments
    assert np.all(rep.increments > 0)
    assert np.all(np.diff(rep.partial_sums[:, 0]) > 0)


def test_uniform_square_sum_exact_formula_and_divergence():
    mu = uniform_square(8)
    tree = build_mass_tree(mu, 8)
    rep = density_sum(tree, 8)
    expected = np.sqrt(2.0) * (2.0**9 - 1.0)
    assert np.allclose(rep.s_values, expected, rtol=1e-12)
    # per-level increments are exactly sqrt(2) * 2^j
    for j in range(9):
        assert np.allclose(rep.increments[j], np.sqrt(2.0) * 2.0**j, rtol=1e-12)
    assert set(rep.classification) == {"diverging"}


def test_cantor_quarter_sum_converging():
    mu = cantor_quarter_line(12)
    tree = build_mass_tree(mu, 12)
    rep = density_sum(tree, 12)
    assert set(rep.classification) == {"converging"}
    assert np.allclose(rep.octave_ratio, 0.5, atol=1e-12)
    # octave increments shrink geometrically by half every two levels
    assert np.allclose(rep.increments[12] / rep.increments[10], 0.5, atol=1e-12)


def test_four_corner_sum_diverging():
    mu = four_corner_cantor(6)
    tree = build_mass_tree(mu, 6)
    rep = density_sum(tree, 6)
    assert rep.s_values[0] == pytest.approx(10.0 * np.sqrt(2.0), rel=1e-12)
    assert set(rep.classification) == {"diverging"}


def test_sum_nondecreasing_in_depth():
    mu = random_measure(17, 40)
    tree = build_mass_tree(mu, 8)
    previous = None
    for depth in range(9):
        rep = density_sum(tree, depth)
        if previous is not None:
            assert np.all(rep.s_values >= previous - 1e-15)
        previous = rep.s_values


def test_shallow_depth_classification_inconclusive():
    mu = single_atom((0.1, 0.1), 1.0)
    tree = build_mass_tree(mu, 2)
    rep = density_sum(tree, 2)
    assert rep.classification[0] == "inconclusive"
    assert np.isnan(rep.sum_ratio[0])


def test_diagnostic_segment_flat_unit_density():
    mu = segment_measure((0.0, 0.0), (1.0, 0.0), 8)
    rep = jones_density_diagnostic(mu, 1, 2.0, 6)
    assert np.all(rep.jones <= 1e-10)
    # atom-centered balls overcount by one atom: ratios stay within
    # (2m+1)/2m of unit density at the finest computed octave
    assert np.all(rep.density_min >= 0.4)
    assert np.all(rep.density_max <= 1.125 + 1e-12)


def test_diagnostic_single_atom():
    mu = single_atom((0.2, 0.2), 1.0)
    rep = jones_density_diagnostic(mu, 1, 2.0, 10)
    assert rep.jones[0] <= 1e-12
    assert rep.density_max[0] == pytest.approx(2.0**10 / 2.0)


def test_diagnostic_p_range_gate():
    mu = single_atom((0.2, 0.2, 0.2, 0.2), 1.0)
    with pytest.raises(RangeError):
        jones_density_diagnostic(mu, 3, 7.0, 2)
    with pytest.raises(RangeError):
        jones_density_diagnostic(mu, 3, 6.0, 2)
    jones_density_diagnostic(mu, 3, 5.9, 2)  # admissible
