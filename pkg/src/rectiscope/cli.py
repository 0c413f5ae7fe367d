"""Command-line front door.

Subcommands: generate, beta, jones, density, ssum, partition, curve,
diagnose.  JSON is the canonical report format; CSV is a flat projection;
SVG renders planar curves.  Repeated runs over identical inputs produce
byte-identical report files.

Exit codes: 0 success, 2 usage error, 3 invalid input data or parameters,
4 violated internal certificate (an implementation bug, never a data
problem).  Failures emit a machine-readable JSON error record on stderr.
RECTISCOPE_LOG sets the log level (DEBUG/INFO/WARNING/...).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._util import ordered_map
from .beta import (
    beta_p_general,
    cube_betas,
    dyadic_beta_sum,
    jones_function,
    liminf_beta_diagnostic,
    triple_cube_betas,
)
from .density import density_estimate, density_sum, jones_density_diagnostic
from .errors import InputError, InvariantViolation, RectiscopeError
from .generators import KINDS, GeneratorSpec, generate
from .io import (
    curve_svg,
    load_measure,
    measure_to_csv,
    measure_to_json,
    write_csv,
    write_json,
)
from .measure import DyadicCubeId, build_mass_tree, restrict_to_region
from .rectify import (
    PartitionConfig,
    classify_cubes,
    extract_rectifiable_family,
    level_set_A,
    partition_properties_check,
)

log = logging.getLogger("rectiscope.cli")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_INVARIANT = 4


def _jsonsafe(value):
    """JSON has no NaN/Inf; report them as null."""
    if value is None:
        return None
    v = float(value)
    return v if math.isfinite(v) else None


def _parse_ints(text: str):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise InputError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_floats(text: str):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise InputError(f"expected comma-separated reals, got {text!r}") from exc


def _load_input(args):
    mu = load_measure(args.input)
    if getattr(args, "n", None) and mu.dim != args.n:
        raise InputError(f"input has dimension {mu.dim}, --n says {args.n}")
    return mu


def _pick_q0(tree, args) -> DyadicCubeId:
    if args.q0 is not None:
        return DyadicCubeId(0, _parse_ints(args.q0))
    lv = tree.level(0)
    if lv.ncubes == 0:
        raise InputError("empty measure: no level-0 cube to use as root")
    best = int(np.argmax(lv.mass))
    q0 = DyadicCubeId(0, tuple(int(v) for v in lv.keys[best]))
    log.info("no --q0 given; using heaviest level-0 cube %s", q0.label())
    return q0


def _out_path(args, default_suffix: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(f"rectiscope-{args.command}{default_suffix}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    spec = GeneratorSpec(
        kind=args.kind,
        level=args.level,
        position=_parse_floats(args.position),
        weight=args.weight,
        start=_parse_floats(args.start),
        end=_parse_floats(args.end),
        vertices=tuple(_parse_floats(v) for v in args.vertex) if args.vertex else None,
        center=_parse_floats(args.center),
        radius=args.radius,
        natoms=args.atoms,
        dim=args.n or 2,
        seed=args.seed,
    )
    mu = generate(spec)
    out = _out_path(args, ".csv" if args.format != "json" else ".json")
    if args.format == "json":
        measure_to_json(mu, out)
    else:
        measure_to_csv(mu, out)
    print(f"wrote {mu.natoms} atoms (mass {mu.total_mass!r}) to {out}")
    return EXIT_OK


def cmd_beta(args) -> int:
    mu = _load_input(args)
    tree = build_mass_tree(mu, args.depth)
    triple = args.region == "triple"
    rows = []
    for level in range(args.depth + 1):
        lv = tree.level(level)
        if lv.ncubes == 0:
            continue
        if args.p == 2.0:
            if triple:
                betas, masses = triple_cube_betas(tree, level, args.m)
            else:
                betas, masses = cube_betas(tree, level, args.m), lv.mass
            converged = [True] * lv.ncubes
        else:
            cubes = [
                DyadicCubeId(level, tuple(int(v) for v in row)) for row in lv.keys
            ]
            regions = [q.triple() if triple else q for q in cubes]

            def one(region):
                sub = restrict_to_region(mu, region)
                return beta_p_general(sub, region, args.m, args.p, tol=args.tol_fit)

            results = ordered_map(one, regions, jobs=args.jobs)
            betas = [r.value for r in results]
            converged = [r.converged for r in results]
            masses = [restrict_to_region(mu, r).total_mass for r in regions]
        for i, row in enumerate(lv.keys):
            q = DyadicCubeId(level, tuple(int(v) for v in row))
            region = q.triple() if triple else q
            rows.append(
                {
                    "region": region.label(),
                    "level": level,
                    "mass": float(masses[i]),
                    "beta": float(betas[i]),
                    "normalization": "standard",
                    "converged": bool(converged[i]),
                }
            )
    out = _out_path(args, f".{args.format}")
    if args.format == "csv":
        write_csv(out, ["region", "level", "mass", "beta", "normalization", "converged"], rows)
    else:
        write_json(out, {"m": args.m, "p": args.p, "depth": args.depth, "rows": rows})
    print(f"wrote {len(rows)} beta rows to {out}")
    return EXIT_OK


def cmd_jones(args) -> int:
    mu = _load_input(args)
    if args.x is None:
        raise InputError("jones requires --x (the evaluation point)")
    x = _parse_floats(args.x)
    if len(x) != mu.dim:
        raise InputError(f"--x has dimension {len(x)}, input has {mu.dim}")
    est = jones_function(mu, x, args.m, args.p, args.depth)
    octaves = [
        {
            "k": k,
            "radius": 2.0 ** (-k),
            "mass": _jsonsafe(est.octave_masses[k]),
            "beta": _jsonsafe(est.octave_betas[k]),
        }
        for k in range(args.depth + 1)
    ]
    obj = {
        "x": list(x),
        "m": args.m,
        "p": args.p,
        "depth": args.depth,
        "octaves": octaves,
        "value": _jsonsafe(est.value),
    }
    out = _out_path(args, f".{args.format}")
    if args.format == "csv":
        write_csv(out, ["k", "radius", "mass", "beta"], octaves)
    else:
        write_json(out, obj)
    print(f"J_p estimate {est.value!r} written to {out}")
    return EXIT_OK


def cmd_density(args) -> int:
    mu = _load_input(args)
    rows = []
    for i in range(mu.natoms):
        est = density_estimate(mu, mu.positions[i], args.m, args.depth)
        for k, ratio in enumerate(est.ratios):
            rows.append(
                {"atom": i, "k": k, "radius": 2.0 ** (-k), "ratio": _jsonsafe(ratio)}
            )
    out = _out_path(args, f".{args.format}")
    if args.format == "csv":
        write_csv(out, ["atom", "k", "radius", "ratio"], rows)
    else:
        write_json(out, {"m": args.m, "depth": args.depth, "rows": rows})
    print(f"wrote {len(rows)} density rows to {out}")
    return EXIT_OK


def cmd_ssum(args) -> int:
    mu = _load_input(args)
    tree = build_mass_tree(mu, args.depth)
    report = density_sum(tree, args.depth)
    classification = report.classification
    orat, srat = report.octave_ratio, report.sum_ratio
    rows = [
        {
            "atom": i,
            "s": float(report.s_values[i]),
            "last_increment": float(report.last_increment[i]),
            "octave_ratio": _jsonsafe(orat[i]),
            "sum_ratio": _jsonsafe(srat[i]),
            "classification": classification[i],
        }
        for i in range(report.natoms)
    ]
    out = _out_path(args, f".{args.format}")
    if args.format == "csv":
        write_csv(
            out,
            ["atom", "s", "last_increment", "octave_ratio", "sum_ratio", "classification"],
            rows,
        )
    else:
        write_json(out, {"depth": args.depth, "rows": rows})
    print(f"wrote {len(rows)} density-sum rows to {out}")
    return EXIT_OK


def _partition_for(args, tree, eps: float):
    q0 = _pick_q0(tree, args)
    if args.N is None:
        raise InputError("this command requires --N (the density-sum bound)")
    ssum = density_sum(tree, args.depth)
    aset = level_set_A(ssum, tree, q0, args.N)
    cfg = PartitionConfig(q0, args.N, eps, args.depth)
    part = classify_cubes(tree, aset, cfg)
    props = partition_properties_check(part, tol=args.tol_report)
    return part, props


def _single_eps(args) -> float:
    if not args.eps:
        raise InputError("this command requires --eps")
    if len(args.eps) != 1:
        raise InputError("this command accepts exactly one --eps")
    return args.eps[0]


def cmd_partition(args) -> int:
    mu = _load_input(args)
    tree = build_mass_tree(mu, args.depth)
    part, props = _partition_for(args, tree, _single_eps(args))
    rows = list(part.rows())
    obj = {
        "config": {
            "q0": part.config.q0.label(),
            "N": part.config.s_bound,
            "eps": part.config.eps,
            "depth": part.config.depth,
            "eta": part.eta,
        },
        "A_mass": part.a_mass,
        "B_mass": part.b_mass,
        "good_diam_sum": part.good_diam_sum,
        "properties": props.as_dict(),
        "cubes": rows,
    }
    out = _out_path(args, f".{args.format}")
    if args.format == "csv":
        write_csv(out, ["id", "level", "label", "mass", "massA"], rows)
    else:
        write_json(out, obj)
    print(
        f"partitioned {len(rows)} cubes (A mass {part.a_mass!r}, B mass {part.b_mass!r}) to {out}"
    )
    return EXIT_OK


def _curve_entry_obj(entry):
    return {
        "eps": entry.eps,
        "certificate": entry.certificate.as_dict(),
        "tree": {
            "vertices": [[float(v) for v in row] for row in entry.curve_tree.vertices],
            "edges": [[int(a), int(b)] for a, b in entry.curve_tree.edges],
            "length": entry.curve_tree.total_length,
        },
        "polyline": {
            "vertices": [[float(v) for v in row] for row in entry.polyline.vertices],
            "length": entry.polyline.length,
        },
        "coverage": entry.coverage.as_dict(),
        "B_mass": entry.partition.b_mass,
        "properties": entry.properties.as_dict(),
    }


def cmd_curve(args) -> int:
    mu = _load_input(args)
    tree = build_mass_tree(mu, args.depth)
    q0 = _pick_q0(tree, args)
    if args.N is None:
        raise InputError("curve requires --N (the density-sum bound)")
    if not args.eps:
        raise InputError("curve requires at least one --eps")
    result = extract_rectifiable_family(
        tree, q0, args.N, args.eps, args.depth, jobs=args.jobs, tol=args.tol_report
    )
    obj = {
        "q0": q0.label(),
        "N": result.s_bound,
        "depth": result.depth,
        "eta": result.eta,
        "A_mass": result.a_mass,
        "uncovered_mass": result.uncovered_mass,
        "uncovered_bound": result.uncovered_bound,
        "passed": result.passed,
        "curves": [_curve_entry_obj(e) for e in result.entries],
    }
    if args.format == "svg":
        if mu.dim != 2:
            raise InputError("SVG rendering is available for n=2 only")
        out = _out_path(args, ".svg")
        poly = result.entries[-1].polyline.vertices
        out.write_text(curve_svg(mu.positions, poly))
    elif args.format == "csv":
        raise InputError("curve output supports json or svg")
    else:
        out = _out_path(args, ".json")
        write_json(out, obj)
    print(
        f"extracted {len(result.entries)} curve(s); uncovered mass "
        f"{result.uncovered_mass!r} <= bound {result.uncovered_bound!r}; wrote {out}"
    )
    return EXIT_OK


def cmd_diagnose(args) -> int:
    mu = _load_input(args)
    if args.mode == "cubes":
        tree = build_mass_tree(mu, args.depth)
        bsum = dyadic_beta_sum(tree, args.depth, args.m)
        liminf = liminf_beta_diagnostic(tree, args.depth, args.m)
        rows = [
            {
                "atom": i,
                "beta_sq_sum": _jsonsafe(bsum.per_atom_sum[i]),
                "min_triple_beta": _jsonsafe(liminf.min_beta[i]),
            }
            for i in range(mu.natoms)
        ]
        fields = ["atom", "beta_sq_sum", "min_triple_beta"]
        header = {"mode": "cubes", "m": args.m, "depth": args.depth, "rows": rows}
    else:
        report = jones_density_diagnostic(mu, args.m, args.p, args.depth)
        rows = [
            {
                "atom": i,
                "jones": _jsonsafe(report.jones[i]),
                "density_min": _jsonsafe(report.density_min[i]),
                "density_max": _jsonsafe(report.density_max[i]),
            }
            for i in range(mu.natoms)
        ]
        fields = ["atom", "jones", "density_min", "density_max"]
        header = {
            "mode": "density",
            "m": args.m,
            "p": args.p,
            "depth": args.depth,
            "rows": rows,
        }
    out = _out_path(args, f".{args.format}")
    if args.format == "csv":
        write_csv(out, fields, rows)
    else:
        write_json(out, header)
    print(f"wrote {len(rows)} diagnostic rows to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub, *, input_required=True):
    sub.add_argument("--input", required=input_required, help="point cloud (.csv or .json)")
    sub.add_argument("--n", type=int, default=None, help="ambient dimension check")
    sub.add_argument("--m", type=int, default=1, help="plane dimension (default 1)")
    sub.add_argument("--p", type=float, default=2.0, help="exponent p >= 1 (default 2)")
    sub.add_argument("--depth", type=int, default=8, help="dyadic depth K (default 8)")
    sub.add_argument("--q0", default=None, help="level-0 root cube coords, e.g. 0,0")
    sub.add_argument("--N", type=float, default=None, help="density-sum bound")
    sub.add_argument(
        "--eps", type=float, action="append", default=None, help="eps (repeatable, decreasing)"
    )
    sub.add_argument("--out", default=None, help="output path")
    sub.add_argument(
        "--format", choices=["json", "csv", "svg"], default="json", help="output format"
    )
    sub.add_argument("--jobs", type=int, default=1, help="worker threads (ordered merge)")
    sub.add_argument(
        "--tol-fit", dest="tol_fit", type=float, default=1e-9,
        help="relative tolerance of the iterative p-fit (default 1e-9)",
    )
    sub.add_argument(
        "--tol-report", dest="tol_report", type=float, default=1e-12,
        help="floating-point slack for certified comparisons (default 1e-12)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rectiscope",
        description="Multiscale rectifiability analysis of weighted point clouds.",
    )
    parser.add_argument("--version", action="version", version=f"rectiscope {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("generate", help="write a canonical test measure")
    gen.add_argument("--kind", required=True, choices=KINDS)
    gen.add_argument("--level", type=int, default=4, help="construction depth")
    gen.add_argument("--position", default="0.1,0.1", help="atom position")
    gen.add_argument("--weight", type=float, default=1.0, help="atom weight")
    gen.add_argument("--start", default="0,0", help="segment start")
    gen.add_argument("--end", default="1,0", help="segment end")
    gen.add_argument(
        "--vertex", action="append", default=None, help="polyline vertex (repeatable)"
    )
    gen.add_argument("--center", default="0.5,0.5", help="circle center")
    gen.add_argument("--radius", type=float, default=0.25, help="circle radius")
    gen.add_argument("--atoms", type=int, default=32, help="random atom count")
    gen.add_argument("--seed", type=int, default=0, help="random seed")
    gen.add_argument("--n", type=int, default=None, help="random cloud dimension")
    gen.add_argument("--out", default=None)
    gen.add_argument("--format", choices=["csv", "json"], default="csv")
    gen.set_defaults(func=cmd_generate)

    for name, fn, helptext in [
        ("beta", cmd_beta, "per-cube beta numbers"),
        ("jones", cmd_jones, "truncated Jones function at a point"),
        ("density", cmd_density, "per-atom density ratios"),
        ("ssum", cmd_ssum, "per-atom truncated density sums"),
        ("partition", cmd_partition, "good/bad cube partition"),
        ("curve", cmd_curve, "extract rectifiable curve approximants"),
        ("diagnose", cmd_diagnose, "joint flatness/density diagnostics"),
    ]:
        sub = subs.add_parser(name, help=helptext)
        _add_common(sub)
        if name == "beta":
            sub.add_argument(
                "--region", choices=["cube", "triple"], default="cube",
                help="plain cubes or concentric triples",
            )
        if name == "jones":
            sub.add_argument("--x", default=None, help="evaluation point, e.g. 0.5,0.5")
        if name == "diagnose":
            sub.add_argument(
                "--mode", choices=["density", "cubes"], default="density",
                help="ball-based J+density or cube-chain beta diagnostics",
            )
        sub.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("RECTISCOPE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        _emit_error(exc)
        return EXIT_INVARIANT
    except RectiscopeError as exc:
        _emit_error(exc)
        return EXIT_INPUT
    except OSError as exc:
        _emit_error(InputError(str(exc)))
        return EXIT_INPUT


def _emit_error(exc: RectiscopeError) -> None:
    record = {"error": type(exc).__name__, "kind": exc.kind, "message": str(exc)}
    json.dump(record, sys.stderr, sort_keys=True)
    sys.stderr.write("\n")


if __name__ == "__main__":
    sys.exit(main())
