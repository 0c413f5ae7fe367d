"""Point-cloud ingestion and deterministic report emission.

Point clouds travel as CSV with a required header x1..xn,w or as JSON
{"n": n, "atoms": [{"x": [...], "w": w}, ...]}.  Ingestion rejects NaN/Inf
coordinates and nonpositive weights.

Reports are machine-first: JSON is canonical (sorted keys, fixed indent),
CSV is a flat projection, SVG renders atoms plus an extracted curve for
n = 2.  Identical inputs produce byte-identical files: no timestamps, fixed
orders, and floats serialized with repr (shortest round-trip).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError
from .measure import DiscreteMeasure


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

def measure_to_csv(mu: DiscreteMeasure, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(mu.dim)] + ["w"])
        for i in range(mu.natoms):
            writer.writerow([repr(float(v)) for v in mu.positions[i]] + [repr(float(mu.weights[i]))])


def measure_from_csv(path) -> DiscreteMeasure:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file (header x1..xn,w required)")
        header = [h.strip() for h in header]
        if len(header) < 2 or header[-1] != "w":
            raise InputError(f"{path}: header must be x1..xn,w, got {header}")
        n = len(header) - 1
        expected = [f"x{i + 1}" for i in range(n)]
        if header[:-1] != expected:
            raise InputError(f"{path}: coordinate columns must be {expected}, got {header[:-1]}")
        positions, weights = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n + 1:
                raise InputError(f"{path}:{lineno}: expected {n + 1} fields, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            positions.append(values[:-1])
            weights.append(values[-1])
    if not positions:
        return DiscreteMeasure(np.empty((0, n)), np.empty((0,)))
    try:
        return DiscreteMeasure(positions, weights)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def measure_to_json_obj(mu: DiscreteMeasure) -> dict:
    return {
        "n": mu.dim,
        "atoms": [
            {"x": [float(v) for v in mu.positions[i]], "w": float(mu.weights[i])}
            for i in range(mu.natoms)
        ],
    }


def measure_from_json_obj(obj: Mapping) -> DiscreteMeasure:
    try:
        n = int(obj["n"])
        atoms = obj["atoms"]
        positions = [[float(v) for v in atom["x"]] for atom in atoms]
        weights = [float(atom["w"]) for atom in atoms]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed measure JSON: {exc}") from exc
    if any(len(p) != n for p in positions):
        raise InputError("measure JSON: atom dimension disagrees with n")
    if not positions:
        return DiscreteMeasure(np.empty((0, n)), np.empty((0,)))
    return DiscreteMeasure(positions, weights)


def measure_to_json(mu: DiscreteMeasure, path) -> None:
    write_json(path, measure_to_json_obj(mu))


def measure_from_json(path) -> DiscreteMeasure:
    with Path(path).open() as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from exc
    return measure_from_json_obj(obj)


def load_measure(path) -> DiscreteMeasure:
    """Dispatch on extension: .csv or .json."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return measure_from_csv(path)
    if path.suffix.lower() == ".json":
        return measure_from_json(path)
    raise InputError(f"{path}: unsupported input format (use .csv or .json)")


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def write_json(path, obj) -> None:
    with Path(path).open("w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_csv(path, fieldnames: Sequence[str], rows: Iterable[Mapping]) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in fieldnames})


def _cell(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def _fmt(v: float) -> str:
    return format(float(v), ".8g")


def curve_svg(
    atoms: np.ndarray,
    polyline: np.ndarray,
    width: int = 640,
) -> str:
    """Minimal SVG of a planar point cloud plus an extracted curve."""
    pts = [p for p in (atoms, polyline) if p is not None and len(p)]
    if not pts:
        lo = np.zeros(2)
        hi = np.ones(2)
    else:
        allpts = np.vstack(pts)
        lo = allpts.min(axis=0)
        hi = allpts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.05 * float(span.max())
    lo = lo - pad
    hi = hi + pad
    span = hi - lo
    height = int(round(width * span[1] / span[0]))
    scale = width / span[0]

    def sx(v):
        return _fmt((v - lo[0]) * scale)

    def sy(v):
        # flip y so larger coordinates render upward
        return _fmt((hi[1] - v) * scale)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if polyline is not None and len(polyline) > 1:
        coords = " ".join(f"{sx(p[0])},{sy(p[1])}" for p in polyline)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="#1965b0" stroke-width="1.2"/>'
        )
    if atoms is not None:
        r = _fmt(max(1.5, 0.004 * width))
        for p in atoms:
            parts.append(
                f'<circle cx="{sx(p[0])}" cy="{sy(p[1])}" r="{r}" fill="#dc050c" fill-opacity="0.8"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
