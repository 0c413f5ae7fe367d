"""Compiled kernels and the pure-numpy fallback must agree."""

import numpy as np
import pytest

from rectiscope import _backend
from rectiscope import _kernels_py

compiled = pytest.importorskip(
    "rectiscope._kernels", reason="compiled kernel extension not built"
)


def _random_segments(seed, natoms, n):
    rng = np.random.default_rng(seed)
    pos = rng.standard_normal((natoms, n))
    w = rng.random(natoms) + 0.1
    if natoms < 3:
        starts = np.array([0], dtype=np.int64)
    else:
        ncuts = rng.integers(1, natoms // 3 + 1)
        starts = np.unique(
            np.concatenate([[0], rng.integers(1, natoms, size=ncuts)])
        ).astype(np.int64)
    return pos, w, starts


@pytest.mark.parametrize("seed,natoms,n", [(0, 50, 2), (1, 200, 3), (2, 7, 5), (3, 1, 2)])
def test_segment_moments_parity(seed, natoms, n):
    pos, w, starts = _random_segments(seed, natoms, n)
    m1, f1, s1 = compiled.segment_moments(pos, w, starts)
    m2, f2, s2 = _kernels_py.segment_moments(pos, w, starts)
    assert np.allclose(m1, m2, rtol=1e-12, atol=0)
    assert np.allclose(f1, f2, rtol=1e-12, atol=1e-14)
    assert np.allclose(s1, s2, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("p", [1.0, 2.0, 1.5, 3.0])
def test_line_grid_parity(p):
    rng = np.random.default_rng(42)
    pos = rng.random((30, 2))
    w = rng.random(30) + 0.5
    thetas = np.linspace(0.0, np.pi, 37, endpoint=False)
    offsets = np.linspace(-1.0, 1.0, 23)
    a = compiled.line_grid_objective(pos, w, np.cos(thetas), np.sin(thetas), offsets, p)
    b = _kernels_py.line_grid_objective(pos, w, np.cos(thetas), np.sin(thetas), offsets, p)
    assert a.shape == b.shape == (37, 23)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_empty_inputs():
    pos = np.empty((0, 2))
    w = np.empty((0,))
    starts = np.empty((0,), dtype=np.int64)
    for mod in (compiled, _kernels_py):
        mass, first, second = mod.segment_moments(pos, w, starts)
        assert mass.shape == (0,) and first.shape == (0, 2) and second.shape == (0, 2, 2)
        out = mod.line_grid_objective(
            pos, w, np.array([1.0]), np.array([0.0]), np.array([0.0]), 2.0
        )
        assert out.shape == (1, 1) and out[0, 0] == 0.0


def test_backend_selection_reports_name():
    assert _backend.BACKEND in ("compiled", "pure")
    # the active backend module exposes the same callables either way
    assert callable(_backend.segment_moments)
    assert callable(_backend.line_grid_objective)


def test_forced_pure_backend(monkeypatch):
    import subprocess
    import sys

    code = (
        "import rectiscope; import rectiscope._backend as b; "
        "print(b.BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "RECTISCOPE_BACKEND": "pure"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "pure"
