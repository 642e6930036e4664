"""Minimal second moment of a convex polytope with a given volume and face budget.

G(a, m) is the smallest second moment about the centroid over convex
polytopes of volume ``a`` with at most ``m`` faces.  Since the ratio
J = I / |V|^{5/3} is scale free, G(a, m) = a^{5/3} min J and the search runs
at unit scale.  Faces are half-spaces {n . x <= h}; each normal is stored as
two spherical angles.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels as _k
from .geom import (DEDUP_TOL, PLANE_TOL, ConvexPolytope, HalfSpace, face_areas, face_groups,
                   from_halfspaces, moments)
from .voronoi import default_workers


class InfeasibleStartError(RuntimeError):
    pass


def angles_to_normals(theta, phi) -> np.ndarray:
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def normals_to_angles(normals) -> tuple:
    n = np.asarray(normals, dtype=float)
    n = n / np.linalg.norm(n, axis=1, keepdims=True)
    return np.arccos(np.clip(n[:, 2], -1.0, 1.0)), np.arctan2(n[:, 1], n[:, 0])


@dataclass(frozen=True)
class FaceParam:
    """Flat parameter vector [theta_1..m, phi_1..m, h_1..m]."""
    m: int

    def split(self, x: np.ndarray):
        m = self.m
        return angles_to_normals(x[:m], x[m:2 * m]), x[2 * m:]

    def pack(self, normals, offsets) -> np.ndarray:
        th, ph = normals_to_angles(normals)
        return np.concatenate([th, ph, np.asarray(offsets, dtype=float)])


def _bound(offsets: np.ndarray) -> float:
    return 20.0 * float(np.max(np.abs(offsets))) + 1.0


def shape_objective(normals, offsets) -> float:
    """I / |V|^{5/3} of the intersection; inf when empty or unbounded."""
    normals = np.ascontiguousarray(normals, dtype=float)
    offsets = np.ascontiguousarray(offsets, dtype=float)
    return float(_k.shape_moment(normals, offsets, _bound(offsets), PLANE_TOL, DEDUP_TOL))


def polytope_of(normals, offsets) -> ConvexPolytope:
    hs = [HalfSpace.through(n, h) for n, h in zip(normals, offsets)]
    return from_halfspaces(hs, bound=_bound(np.asarray(offsets)))


# pattern search

@dataclass
class SearchResult:
    x: np.ndarray
    value: float
    evals: int
    trace: list = field(default_factory=list)


def pattern_search(f: Callable, x0, step: float = 0.1, min_step: float = 1e-8,
                   max_evals: int = 20_000, shrink: float = 0.5) -> SearchResult:
    """Hooke-Jeeves search: coordinate probes plus pattern moves.

    Only strict improvements are accepted, so the trace is strictly
    decreasing.  Stops once the step drops below ``min_step`` or the
    evaluation budget runs out.
    """
    x = np.array(x0, dtype=float)
    fx = f(x)
    evals = 1
    if not math.isfinite(fx):
        raise InfeasibleStartError("starting point is infeasible")
    trace = [fx]

    def explore(base, fbase):
        nonlocal evals
        y = base.copy()
        fy = fbase
        for i in range(len(y)):
            for s in (step, -step):
                if evals >= max_evals:
                    return y, fy
                old = y[i]
                y[i] = old + s
                ft = f(y)
                evals += 1
                if ft < fy:
                    fy = ft
                    break
                y[i] = old
        return y, fy

    while step >= min_step and evals < max_evals:
        y, fy = explore(x, fx)
        if fy < fx:
            # keep moving along the successful direction while it pays
            while True:
                prev = x
                x, fx = y, fy
                trace.append(fx)
                if evals >= max_evals:
                    break
                jump = x + (x - prev)
                fj = f(jump)
                evals += 1
                z, fz = explore(jump, fj)
                if not fz < fx:
                    break
                y, fy = z, fz
        else:
            step *= shrink
    return SearchResult(x, fx, evals, trace)


# starting shapes

def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def seed_normals(m: int) -> list:
    """Face normals of the classic solids with at most ``m`` faces."""
    out = [_unit([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])]
    if m >= 6:
        out.append(np.vstack([np.eye(3), -np.eye(3)]))
    diag = _unit(list(itertools.product((-1.0, 1.0), repeat=3)))
    if m >= 8:
        out.append(diag)
    if m >= 12:
        rd = [v for v in itertools.product((-1.0, 0.0, 1.0), repeat=3) if sorted(map(abs, v)) == [0, 1, 1]]
        out.append(_unit(rd))
    if m >= 14:
        out.append(np.vstack([np.eye(3), -np.eye(3), diag]))
    return out


def pad_faces(normals, offsets, m: int, rng: np.random.Generator):
    """Add redundant half-spaces far outside the solid until there are ``m``."""
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    extra = m - len(normals)
    if extra <= 0:
        return normals, offsets
    far = 2.0 * float(np.max(np.abs(offsets))) + 1.0
    return (np.vstack([normals, _unit(rng.normal(size=(extra, 3)))]),
            np.concatenate([offsets, np.full(extra, far)]))


def _seed_offsets(normals) -> np.ndarray:
    # same support for every face, unit volume up to scale
    return np.full(len(normals), 0.5)


def random_start(m: int, rng: np.random.Generator, tries: int = 100):
    for _ in range(tries):
        normals = _unit(rng.normal(size=(m, 3)))
        offsets = 0.5 + 0.5 * rng.random(m)
        offsets = np.maximum(offsets, 0.05)
        if math.isfinite(shape_objective(normals, offsets)):
            return normals, offsets
    raise InfeasibleStartError(f"no bounded random start with {m} faces after {tries} tries")


@dataclass
class GMinResult:
    value: float
    polytope: ConvexPolytope
    restarts_used: int
    best_restart_trace: list
    effective_faces: int
    restart_values: list


def _finish(a: float, normals, offsets) -> ConvexPolytope:
    p = polytope_of(normals, offsets)
    m = moments(p)
    p = p.translated(-m.centroid)
    return p.scaled((a / m.volume) ** (1.0 / 3.0))


def effective_faces(p: ConvexPolytope, volume: float) -> int:
    """Faces of positive area, merging coplanar pieces."""
    areas = face_areas(p)
    tol = 1e-8 * volume ** (2.0 / 3.0)
    return sum(1 for g in face_groups(p) if areas[g].sum() >= tol)


def _search_from(normals, offsets, m, budget):
    param = FaceParam(m)

    def f(x):
        n, h = param.split(x)
        return shape_objective(n, h)

    return param, pattern_search(f, param.pack(normals, offsets), max_evals=budget)


def minimize_G(a: float, m: int, restarts: int = 16, eval_budget: int = 20_000, seed: int = 0,
               warm_start: Optional[tuple] = None, workers: Optional[int] = None) -> GMinResult:
    """Approximate G(a, m) by pattern search from seeded and random starts.

    The classic solids that fit in ``m`` faces are always tried; ``restarts``
    random starts come on top.  ``warm_start`` = (normals, offsets) adds one
    more start.
    """
    if not a > 0:
        raise ValueError("volume must be positive")
    if not 4 <= m <= 60:
        raise ValueError("face budget m must be in [4, 60]")
    if restarts < 0 or eval_budget < 1:
        raise ValueError("restarts must be >= 0 and eval_budget >= 1")
    rng = np.random.default_rng(seed)
    starts = []
    if warm_start is not None:
        starts.append(pad_faces(*warm_start, m, rng))
    for nrm in seed_normals(m):
        starts.append(pad_faces(nrm, _seed_offsets(nrm), m, rng))
    for _ in range(restarts):
        starts.append(random_start(m, rng))

    workers = default_workers() if workers is None else max(1, int(workers))
    run = lambda s: _search_from(s[0], s[1], m, eval_budget)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, starts))
    else:
        results = [run(s) for s in starts]
    values = [res.value for _, res in results]
    # lowest value wins, ties go to the earlier start
    param, res = results[int(np.argmin(values))]
    n, h = param.split(res.x)
    p = _finish(a, n, h)
    value = a ** (5.0 / 3.0) * res.value
    return GMinResult(value, p, len(starts), res.trace, effective_faces(p, a), values)


@dataclass(frozen=True)
class ProbeRow:
    m: int
    value: float
    d1: Optional[float]
    d2: Optional[float]
    sigma: float
    label: str


def convexity_probe(a: float = 1.0, mmin: int = 4, mmax: int = 20, restarts: int = 16,
                    eval_budget: int = 20_000, seed: int = 0, workers: Optional[int] = None) -> list:
    """G(a, m) for m in [mmin, mmax] with first and second differences.

    Each m is warm started from the best (m-1)-face solid plus one redundant
    face, and pattern search only accepts improvements, so the values
    cannot increase beyond round-off.  ``sigma`` is the spread of the
    restart values near the best one; second differences within 2 sigma of
    zero are labelled inconclusive.
    """
    if not 4 <= mmin < mmax <= 60:
        raise ValueError("need 4 <= mmin < mmax <= 60")
    vals, sigmas = [], []
    warm = None
    for m in range(mmin, mmax + 1):
        r = minimize_G(a, m, restarts, eval_budget, seed + m, warm, workers)
        v = r.value
        vals.append(v)
        rv = a ** (5.0 / 3.0) * np.array([x for x in r.restart_values if math.isfinite(x)])
        # spread of the restarts that reached the best basin
        near = rv[rv <= v * (1 + 1e-3)]
        sigmas.append(float(np.std(near)) if len(near) > 1 else 0.0)
        warm = _halfspace_data(r.polytope)
    rows = []
    for i, m in enumerate(range(mmin, mmax + 1)):
        d1 = vals[i] - vals[i - 1] if i >= 1 else None
        d2 = vals[i] - 2 * vals[i - 1] + vals[i - 2] if i >= 2 else None
        sig = max(sigmas[max(0, i - 2):i + 1])
        if d2 is None:
            label = "n/a"
        elif abs(d2) <= 2 * sig:
            label = "inconclusive"
        else:
            label = "convex" if d2 > 0 else "concave"
        rows.append(ProbeRow(m, vals[i], d1, d2, sig, label))
    return rows


def _halfspace_data(p: ConvexPolytope):
    hs = p.halfspaces()
    # merge coplanar pieces so the warm start keeps its face count
    uniq = []
    for h in hs:
        if not any(np.linalg.norm(h.normal - u.normal) < 1e-7 and abs(h.offset - u.offset) < 1e-7 for u in uniq):
            uniq.append(h)
    return np.array([h.normal for h in uniq]), np.array([h.offset for h in uniq])
