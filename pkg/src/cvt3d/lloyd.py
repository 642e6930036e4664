"""Lloyd iteration and the single-generator insertion/removal energy moves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .geom import ConvexPolytope, HalfSpace, bounding_radius, clip, moments
from .voronoi import (Domain, GeneratorSet, Tessellation, build_tessellation, min_image,
                      voronoi_cell, _Candidates, wrap)


@dataclass(frozen=True)
class OptimizeConfig:
    max_iters: int = 10_000
    move_tol: float = 1e-10
    energy_tol: float = 1e-13
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.move_tol <= 0 or self.energy_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class OptimizeResult:
    generators: GeneratorSet
    energies: list
    max_moves: list
    converged: bool
    iterations: int
    tessellation: Optional[Tessellation] = field(default=None, repr=False)
    stop_reason: str = ""
    centroid_offset: float = math.nan


def _displacement(old: np.ndarray, new: np.ndarray, domain: Domain) -> np.ndarray:
    d = new - old
    if domain == Domain.TORUS:
        d = min_image(d)
    return np.sqrt(np.einsum("ij,ij->i", d, d))


def _centroids(t: Tessellation) -> np.ndarray:
    c = t.centroids
    if t.domain == Domain.TORUS:
        return wrap(c)
    # centroids of cells inside the cube stay inside; clamp round-off
    return np.clip(c, 0.0, 1.0)


def lloyd_step(gens: GeneratorSet, domain: Domain | str = Domain.CUBE,
               workers: Optional[int] = None) -> GeneratorSet:
    """Move every generator to the centroid of its current cell."""
    t = build_tessellation(gens, domain, workers)
    return GeneratorSet(_centroids(t))


def optimize(gens: GeneratorSet, domain: Domain | str = Domain.CUBE,
             cfg: OptimizeConfig = OptimizeConfig(), workers: Optional[int] = None) -> OptimizeResult:
    """Lloyd iteration until the largest move drops below move_tol, the
    relative energy decrease drops below energy_tol, or max_iters.

    ``converged`` means every final generator is within move_tol of the
    centroid of its final cell, whichever rule stopped the loop.
    """
    domain = Domain(domain)
    t = build_tessellation(gens, domain, workers)
    energies = [t.energy]
    moves = []
    reason = "max_iters"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        new_pts = _centroids(t)
        move = float(_displacement(t.generators.points, new_pts, domain).max())
        moves.append(move)
        if move < cfg.move_tol:
            # already centroidal, keep the current tessellation
            energies.append(t.energy)
            reason = "move"
            break
        t = build_tessellation(GeneratorSet(new_pts), domain, workers)
        energies.append(t.energy)
        if (energies[-2] - energies[-1]) / energies[-2] < cfg.energy_tol:
            reason = "energy"
            break
    offset = float(_displacement(t.generators.points, _centroids(t), domain).max())
    return OptimizeResult(t.generators, energies, moves, offset < cfg.move_tol, it, t, reason, offset)


def random_generators(n: int, seed: int = 0, region=None) -> GeneratorSet:
    """``n`` uniform points in the unit cube, or in ``region`` = (lo, hi)."""
    rng = np.random.default_rng(seed)
    lo, hi = (0.0, 1.0) if region is None else region
    return GeneratorSet(lo + (np.asarray(hi) - np.asarray(lo)) * rng.random((n, 3)))


# insertion / removal moves

@dataclass(frozen=True)
class InsertionGain:
    best_point: np.ndarray
    gain: float
    radius_candidate: np.ndarray
    radius_candidate_gain: float
    face_candidate: np.ndarray
    face_candidate_gain: float
    evaluated: int


class InteriorPointError(ValueError):
    pass


def split_gain(cell: ConvexPolytope, y, y_new) -> float:
    """Energy drop int_V |x-y|^2 - d^2(x, {y, y_new}) dx from adding ``y_new``.

    Only the part of the cell closer to ``y_new`` changes; the drop is the
    second moment of that part about ``y`` minus the one about ``y_new``.
    """
    y = np.asarray(y, dtype=float)
    y_new = np.asarray(y_new, dtype=float)
    if np.array_equal(y, y_new):
        return 0.0
    part = clip(cell, HalfSpace.bisector(y_new, y))
    if part.is_empty:
        return 0.0
    return moments(part, y).second_moment - moments(part, y_new).second_moment


def _require_interior(cell: ConvexPolytope, y: np.ndarray) -> None:
    size = float(np.linalg.norm(cell.vertices.max(axis=0) - cell.vertices.min(axis=0)))
    for h in cell.halfspaces():
        if h.normal @ y >= h.offset - 1e-12 * size:
            raise InteriorPointError("point is on or outside the cell boundary")


def proof_candidates(cell: ConvexPolytope, y) -> tuple:
    """The two constructive insertion points used in the energy-drop argument.

    Returns the point 2r/5 from ``y`` toward the farthest vertex, and the list
    of the six face centers y +- (t/2) e_k of the cube of side t with
    t^3 = 2|V|/5.
    """
    y = np.asarray(y, dtype=float)
    rel = cell.vertices - y
    far = int(np.argmax(np.einsum("ij,ij->i", rel, rel)))
    r = float(np.linalg.norm(rel[far]))
    toward = y + 0.4 * rel[far]
    t = (0.4 * moments(cell, y).volume) ** (1.0 / 3.0)
    faces = [y + s * 0.5 * t * e for e in np.eye(3) for s in (1.0, -1.0)]
    return toward, faces, r


def insertion_gain(cell: ConvexPolytope, y, budget: int = 256, seed: int = 0) -> InsertionGain:
    """Best energy drop found by adding one point to ``cell`` next to ``y``.

    Candidates are a scrambled Halton sequence over the bounding box kept
    inside the cell, plus the two constructive candidates.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    y = np.asarray(y, dtype=float)
    _require_interior(cell, y)
    toward, faces, _ = proof_candidates(cell, y)
    g_toward = split_gain(cell, y, toward)
    face_gains = [split_gain(cell, y, f) for f in faces]
    i_face = int(np.argmax(face_gains))
    best_point, best = toward, g_toward
    if face_gains[i_face] > best:
        best_point, best = faces[i_face], face_gains[i_face]

    lo = cell.vertices.min(axis=0)
    hi = cell.vertices.max(axis=0)
    halfspaces = cell.halfspaces()
    normals = np.array([h.normal for h in halfspaces])
    offsets = np.array([h.offset for h in halfspaces])
    sampler = qmc.Halton(d=3, scramble=True, seed=seed)
    evaluated = 0
    drawn = 0
    while evaluated < budget and drawn < 64 * budget:
        batch = lo + (hi - lo) * sampler.random(max(16, budget))
        drawn += len(batch)
        inside = np.all(batch @ normals.T <= offsets, axis=1)
        for p in batch[inside]:
            g = split_gain(cell, y, p)
            evaluated += 1
            if g > best:
                best_point, best = p, g
            if evaluated >= budget:
                break
    return InsertionGain(np.asarray(best_point), float(best), toward, float(g_toward),
                         faces[i_face], float(face_gains[i_face]), evaluated + 7)


def removal_cost(t: Tessellation, index: int) -> float:
    """Exact energy increase from deleting generator ``index``.

    Only the neighbors of the removed cell are rebuilt.
    """
    n = t.n
    if not 0 <= index < n:
        raise IndexError(f"generator index {index} out of range for n={n}")
    if n < 2:
        raise ValueError("cannot remove the only generator")
    pts = t.generators.points
    keep = np.delete(np.arange(n), index)
    reduced = np.ascontiguousarray(pts[keep])
    finder = _Candidates(reduced, t.domain)
    affected = [j for j in t.neighbor_ids[index] if j != index]
    before = [t.cell_moments[index].second_moment] + [t.cell_moments[j].second_moment for j in affected]
    after = []
    for j in affected:
        jj = j if j < index else j - 1
        cell = voronoi_cell(jj, finder, n - 1)
        after.append(moments(cell, reduced[jj]).second_moment)
    return math.fsum(after) - math.fsum(before)
