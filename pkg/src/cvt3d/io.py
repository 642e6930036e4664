"""JSON and CSV emission; floats keep 17 significant digits."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .geom import ConvexPolytope, diameter, face_count
from .voronoi import Domain, GeneratorSet, Tessellation, build_tessellation, nearest_neighbor_stats


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else format(x, ".17g")
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_json(path, obj) -> Path:
    path = Path(path)
    # json writes floats with the shortest repr that round-trips
    path.write_text(json.dumps(_plain(obj), indent=1, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def polytope_json(p: ConvexPolytope) -> dict:
    return p.to_json()


def tessellation_json(t: Tessellation) -> dict:
    return {
        "domain": t.domain.value,
        "n": t.n,
        "generators": t.generators.points,
        "cells": [c.to_json() for c in t.cells],
        "energy": t.energy,
    }


def load_tessellation(path, workers=None) -> Tessellation:
    """Rebuild a tessellation from a dump or a generators file.

    Only the generators and the domain are read; cells are recomputed.
    """
    data = read_json(path)
    if isinstance(data, list):
        data = {"generators": data}
    if "generators" not in data:
        raise ValueError(f"{path}: no 'generators' field")
    domain = Domain(data.get("domain", "cube"))
    return build_tessellation(GeneratorSet(np.asarray(data["generators"], dtype=float)), domain, workers)


def generators_json(gens: GeneratorSet, domain: Domain) -> dict:
    return {"domain": Domain(domain).value, "n": gens.n, "generators": gens.points}


def cell_summary_rows(t: Tessellation):
    sigma = nearest_neighbor_stats(t.generators, t.domain).sigma if t.n >= 2 else [math.nan] * t.n
    for k, (c, m) in enumerate(zip(t.cells, t.cell_moments)):
        yield (k, m.volume, diameter(c), face_count(c), m.second_moment, sigma[k])


CELL_SUMMARY_HEADER = ("index", "volume", "diameter", "faces", "second_moment", "sigma")
