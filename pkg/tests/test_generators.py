"""Canonical test measures: exact constructions and masses."""

import numpy as np
import pytest

from rectiscope import DyadicCubeId, InputError, beta2_closed_form
from rectiscope.generators import (
    GeneratorSpec,
    cantor_quarter_line,
    circle_measure,
    four_corner_cantor,
    generate,
    polyline_measure,
    random_measure,
    segment_measure,
    single_atom,
    uniform_square,
)


def test_segment_level_one_atoms():
    mu = segment_measure((0.0, 0.0), (1.0, 0.0), 1)
    assert np.allclose(mu.positions, [[0.25, 0.0], [0.75, 0.0]])
    assert np.allclose(mu.weights, [0.5, 0.5])


def test_cantor_level_one_atoms():
    mu = cantor_quarter_line(1)
    assert np.allclose(mu.positions, [[0.125, 0.0], [0.875, 0.0]])
    assert np.allclose(mu.weights, [0.5, 0.5])


def test_four_corner_level_one_atoms():
    mu = four_corner_cantor(1)
    want = {(0.125, 0.125), (0.875, 0.125), (0.125, 0.875), (0.875, 0.875)}
    got = {tuple(p) for p in mu.positions}
    assert got == want
    assert np.allclose(mu.weights, 0.25)


def test_masses_match_constructions():
    assert segment_measure((0, 0), (0, 2), 6).total_mass == pytest.approx(2.0, abs=1e-12)
    tri = polyline_measure([(0, 0), (1, 0), (1, 1)], 7)
    assert tri.total_mass == pytest.approx(2.0, abs=1e-12)
    assert cantor_quarter_line(8).total_mass == pytest.approx(1.0, abs=1e-12)
    assert four_corner_cantor(5).total_mass == pytest.approx(1.0, abs=1e-12)
    assert uniform_square(5).total_mass == pytest.approx(1.0, abs=1e-12)
    circ = circle_measure((0.5, 0.5), 0.25, 8)
    assert circ.total_mass == pytest.approx(2 * np.pi * 0.25, abs=1e-12)


def test_cantor_atoms_on_axis_beta_zero():
    mu = cantor_quarter_line(7)
    assert np.all(mu.positions[:, 1] == 0.0)
    res = beta2_closed_form(mu, DyadicCubeId(0, (0, 0)), 1)
    assert res.value <= 1e-12


def test_polyline_midpoints_on_curve():
    mu = polyline_measure([(0, 0), (1, 0), (1, 1)], 5)
    # arclength 2 split into 32 pieces; atoms lie on one of the two segments
    on_first = mu.positions[:, 1] == 0.0
    on_second = mu.positions[:, 0] == 1.0
    assert np.all(on_first | on_second)
    assert np.allclose(mu.weights, 2.0 / 32.0)


def test_generate_dispatch_and_determinism():
    spec = GeneratorSpec(kind="four-corner-cantor", level=3)
    a, b = generate(spec), generate(spec)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.weights, b.weights)
    atom = generate(GeneratorSpec(kind="atom", position=(0.3, 0.4), weight=2.0))
    assert atom.natoms == 1 and atom.total_mass == 2.0
    r1 = generate(GeneratorSpec(kind="random", natoms=10, seed=5))
    r2 = random_measure(5, 10)
    assert np.array_equal(r1.positions, r2.positions)


def test_single_atom_helper():
    mu = single_atom((0.1, 0.2, 0.3), 4.0)
    assert mu.dim == 3 and mu.total_mass == 4.0


def test_invalid_specs_rejected():
    with pytest.raises(InputError):
        GeneratorSpec(kind="nope")
    with pytest.raises(InputError):
        GeneratorSpec(kind="segment", level=-1)
    with pytest.raises(InputError):
        generate(GeneratorSpec(kind="polyline"))  # vertices missing
    with pytest.raises(InputError):
        segment_measure((0, 0), (0, 0), 2)
    with pytest.raises(InputError):
        circle_measure((0, 0), -1.0, 2)
    with pytest.raises(InputError):
        random_measure(0, 0)
