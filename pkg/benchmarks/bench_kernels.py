#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Two workloads mirror the package's hot loops:
  moments   per-cube weighted moment accumulation across a deep mass tree
            (what every bulk beta sweep does)
  linegrid  dense (angle x offset) objective scans (what the grid oracle
            and the iterative p-fits lean on)

Run:  python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from rectiscope import _kernels_py
from rectiscope.generators import four_corner_cantor, random_measure
from rectiscope.measure import build_mass_tree

try:
    from rectiscope import _kernels as compiled
except ImportError:
    compiled = None


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_moments(quick: bool):
    level = 7 if quick else 8
    mu = four_corner_cantor(level)
    tree = build_mass_tree(mu, 2 * level)
    jobs = []
    for j in range(2 * level + 1):
        lv = tree.level(j)
        pos = np.ascontiguousarray(mu.positions[lv.order])
        w = np.ascontiguousarray(mu.weights[lv.order])
        jobs.append((pos, w, lv.start))

    def run(mod):
        for pos, w, starts in jobs:
            mod.segment_moments(pos, w, starts)

    ncubes = sum(tree.level(j).ncubes for j in range(2 * level + 1))
    return f"moments ({mu.natoms} atoms, {ncubes} cubes)", run


def bench_linegrid(quick: bool, p: float):
    mu = random_measure(0, 100 if quick else 200, 2)
    thetas = np.linspace(0.0, np.pi, 512, endpoint=False)
    offsets = np.linspace(-1.5, 1.5, 256)
    cos_t, sin_t = np.cos(thetas), np.sin(thetas)
    pos = np.ascontiguousarray(mu.positions)
    w = np.ascontiguousarray(mu.weights)

    def run(mod):
        mod.line_grid_objective(pos, w, cos_t, sin_t, offsets, p)

    # fractional p pays scalar libm pow per cell in C; numpy's vectorized
    # power can win there, which is exactly what this table should show
    return f"linegrid p={p} ({mu.natoms} atoms, 512x256)", run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()
    repeats = 3

    factories = [
        bench_moments,
        lambda q: bench_linegrid(q, 2.0),
        lambda q: bench_linegrid(q, 1.5),
    ]
    print(f"{'workload':44s} {'pure':>10s} {'compiled':>10s} {'speedup':>8s}")
    for factory in factories:
        name, run = factory(args.quick)
        t_pure = _time(lambda: run(_kernels_py), repeats)
        if compiled is None:
            print(f"{name:44s} {t_pure * 1e3:9.1f}ms {'n/a':>10s} {'n/a':>8s}")
            continue
        t_comp = _time(lambda: run(compiled), repeats)
        print(
            f"{name:44s} {t_pure * 1e3:9.1f}ms {t_comp * 1e3:9.1f}ms "
            f"{t_pure / t_comp:7.1f}x"
        )
    if compiled is None:
        print("compiled extension not built; showing fallback timings only")


if __name__ == "__main__":
    main()
