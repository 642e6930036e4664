"""Voronoi tessellations of the unit cube and the unit flat torus."""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels as _k
from .geom import DEDUP_TOL, PLANE_TOL, ConvexPolytope, Moments, box, moments

# torus candidates farther than this need explicit periodic images
_MIN_IMAGE_LIMIT = 0.5
_SQRT3 = math.sqrt(3.0)


class Domain(str, enum.Enum):
    CUBE = "cube"
    TORUS = "torus"


class DuplicateGeneratorError(ValueError):
    pass


class SecurityRadiusError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    points: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float).reshape(-1, 3))
        if len(pts) < 1:
            raise ValueError("generator set must be nonempty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("generator coordinates must be finite")
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise ValueError("generator coordinates must lie in [0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    def __len__(self) -> int:
        return len(self.points)


def wrap(points) -> np.ndarray:
    """Map coordinates into [0, 1) (torus representatives)."""
    p = np.mod(np.asarray(points, dtype=float), 1.0)
    p[p >= 1.0] = 0.0
    return p


def min_image(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    return d - np.round(d)


def check_distinct(gens: GeneratorSet, domain: Domain, tol: float = 1e-12) -> None:
    if gens.n < 2:
        return
    if domain == Domain.TORUS:
        tree = cKDTree(wrap(gens.points), boxsize=1.0)
    else:
        tree = cKDTree(gens.points)
    d, _ = tree.query(tree.data, k=2)
    bad = np.flatnonzero(d[:, 1] <= tol)
    if bad.size:
        raise DuplicateGeneratorError(f"generators {bad.tolist()} coincide within {tol}")


@dataclass(frozen=True, eq=False)
class Tessellation:
    generators: GeneratorSet
    domain: Domain
    cells: tuple
    neighbor_ids: tuple
    cell_moments: tuple
    energy: float

    @property
    def n(self) -> int:
        return self.generators.n

    @property
    def volumes(self) -> np.ndarray:
        return np.array([m.volume for m in self.cell_moments])

    @property
    def centroids(self) -> np.ndarray:
        return np.array([m.centroid for m in self.cell_moments]).reshape(-1, 3)

    @property
    def second_moments(self) -> np.ndarray:
        return np.array([m.second_moment for m in self.cell_moments])


class _Candidates:
    """Generator images near a query point, sorted by distance."""

    def __init__(self, points: np.ndarray, domain: Domain):
        self.domain = domain
        self.points = points
        if domain == Domain.TORUS:
            self.tree = cKDTree(points, boxsize=1.0)
            self._images = None
        else:
            self.tree = cKDTree(points)

    def _image_tree(self):
        # images shifted by up to two periods cover any radius below sqrt(3)
        if self._images is None:
            r = np.arange(-2, 3, dtype=float)
            shifts = np.array(np.meshgrid(r, r, r, indexing="ij")).reshape(3, -1).T
            allpos = (self.points[None, :, :] + shifts[:, None, :]).reshape(-1, 3)
            allidx = np.tile(np.arange(len(self.points)), len(shifts))
            self._images = (cKDTree(allpos), allpos, allidx)
        return self._images

    def around(self, k: int, radius: float):
        y = self.points[k]
        if self.domain == Domain.CUBE:
            idx = np.asarray(self.tree.query_ball_point(y, radius), dtype=np.int64)
            idx = idx[idx != k]
            pos = self.points[idx]
        elif radius < _MIN_IMAGE_LIMIT:
            idx = np.asarray(self.tree.query_ball_point(y, radius), dtype=np.int64)
            idx = idx[idx != k]
            pos = y + min_image(self.points[idx] - y)
        else:
            tree, allpos, allidx = self._image_tree()
            hits = np.asarray(tree.query_ball_point(y, radius), dtype=np.int64)
            rel = allpos[hits] - y
            hits = hits[np.einsum("ij,ij->i", rel, rel) > 0.0]
            idx = allidx[hits]
            pos = allpos[hits]
        rel = pos - y
        dist = np.sqrt(np.einsum("ij,ij->i", rel, rel))
        order = np.lexsort((idx, dist))
        return np.ascontiguousarray(pos[order]), idx[order], dist[order]


def _initial_cell(y: np.ndarray, k: int, domain: Domain) -> ConvexPolytope:
    if domain == Domain.CUBE:
        return box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    # the cell of y among its own periodic images is the unit box around y
    return box(y - 0.5, y + 0.5, tags=(k,) * 6)


def voronoi_cell(k: int, finder: _Candidates, n: int) -> ConvexPolytope:
    y = finder.points[k]
    cell = _initial_cell(y, k, finder.domain)
    verts, fidx, fptr, ftag = cell.vertices, cell.face_index, cell.face_offsets, cell.face_tags
    # every pair of points of the cube, and every torus cell, fits within this
    cap = _SQRT3 * (1.0 + 1e-12)
    radius = min(cap, 2.5 * n ** (-1.0 / 3.0))
    while True:
        pos, idx, dist = finder.around(k, radius)
        # planes applied on a previous pass leave the cell unchanged
        verts, fidx, fptr, ftag, _, r = _k.voronoi_clip(
            verts, fidx, fptr, ftag, y, pos, idx, dist, PLANE_TOL, DEDUP_TOL)
        if len(fptr) <= 1:
            raise SecurityRadiusError(f"cell {k} vanished during construction")
        if 2.0 * r <= radius:
            break
        if radius >= cap:
            if finder.domain == Domain.CUBE:
                break
            raise SecurityRadiusError(f"cell {k} unresolved at radius {radius}")
        radius = min(cap, 2.0 * radius)
    return ConvexPolytope(verts, fidx, fptr, ftag, k)


def default_workers() -> int:
    env = os.environ.get("CVT3D_THREADS")
    return max(1, int(env)) if env else 1


def build_tessellation(gens: GeneratorSet, domain: Domain | str = Domain.CUBE,
                       workers: Optional[int] = None) -> Tessellation:
    """Voronoi cells of every generator, their moments and the total energy.

    Torus cells are returned unwrapped around their generator and may stick
    out of the unit cube.
    """
    domain = Domain(domain)
    check_distinct(gens, domain)
    pts = wrap(gens.points) if domain == Domain.TORUS else np.asarray(gens.points)
    pts = np.ascontiguousarray(pts)
    finder = _Candidates(pts, domain)
    n = gens.n
    workers = default_workers() if workers is None else max(1, int(workers))

    def one(k):
        cell = voronoi_cell(k, finder, n)
        m = moments(cell, pts[k])
        return cell, m

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(one, range(n)))
    else:
        results = [one(k) for k in range(n)]
    cells = tuple(r[0] for r in results)
    cell_moments = tuple(r[1] for r in results)
    neighbors = tuple(_neighbors(c, k, domain) for k, c in enumerate(cells))
    energy = math.fsum(m.second_moment for m in cell_moments)
    return Tessellation(GeneratorSet(pts), domain, cells, neighbors, cell_moments, energy)


def _neighbors(cell: ConvexPolytope, k: int, domain: Domain) -> tuple:
    tags = set(cell.face_tags.tolist())
    return tuple(sorted(t for t in tags if t >= 0 and (t != k or domain == Domain.TORUS)))


def energy(t: Tessellation) -> float:
    """Quantization energy: the second moments of all cells about their generators."""
    return math.fsum(m.second_moment for m in t.cell_moments)


def cell_moments(t: Tessellation, k: int) -> Moments:
    return moments(t.cells[k], t.generators.points[k])


@dataclass(frozen=True)
class NearestNeighborStats:
    sigma: np.ndarray
    min: float
    max: float


def nearest_neighbor_stats(gens: GeneratorSet, domain: Domain | str = Domain.CUBE) -> NearestNeighborStats:
    domain = Domain(domain)
    if gens.n < 2:
        raise ValueError("nearest-neighbor distances need at least two generators")
    if domain == Domain.TORUS:
        tree = cKDTree(wrap(gens.points), boxsize=1.0)
    else:
        tree = cKDTree(gens.points)
    d, _ = tree.query(tree.data, k=2)
    sigma = d[:, 1].copy()
    return NearestNeighborStats(sigma, float(sigma.min()), float(sigma.max()))


def locate(t: Tessellation, x) -> int:
    """Index of the generator closest to ``x`` (torus: periodic distance)."""
    x = np.asarray(x, dtype=float)
    rel = t.generators.points - x
    if t.domain == Domain.TORUS:
        rel = min_image(rel)
    return int(np.argmin(np.einsum("ij,ij->i", rel, rel)))


def with_points(points: Sequence, domain: Domain | str = Domain.CUBE) -> Tessellation:
    return build_tessellation(GeneratorSet(np.asarray(points, dtype=float)), domain)
