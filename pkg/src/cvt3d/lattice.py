"""Cubic lattices (SC, BCC, FCC) on the unit torus and their reference cells."""
from __future__ import annotations

import enum
import itertools

import numpy as np

from .geom import ConvexPolytope, HalfSpace, box, clip_many, moments
from .voronoi import Domain, GeneratorSet, Tessellation, build_tessellation


class LatticeKind(str, enum.Enum):
    SC = "sc"
    BCC = "bcc"
    FCC = "fcc"


_BASIS = {
    LatticeKind.SC: np.zeros((1, 3)),
    LatticeKind.BCC: np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]]),
    LatticeKind.FCC: np.array([[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]]),
}
# keeps every generator off the torus seams
_SHIFT = {LatticeKind.SC: 0.5, LatticeKind.BCC: 0.25, LatticeKind.FCC: 0.25}


def points_per_cell(kind) -> int:
    return len(_BASIS[LatticeKind(kind)])


def generate(kind, k: int) -> GeneratorSet:
    """Conventional cubic cells of side 1/k tiling the unit torus."""
    kind = LatticeKind(kind)
    if k < 1:
        raise ValueError("replication factor must be at least 1")
    cells = np.array(list(itertools.product(range(k), repeat=3)), dtype=float)
    pts = (cells[:, None, :] + _BASIS[kind][None, :, :] + _SHIFT[kind]).reshape(-1, 3) / k
    return GeneratorSet(pts)


def tessellate(kind, k: int, workers=None) -> Tessellation:
    return build_tessellation(generate(kind, k), Domain.TORUS, workers)


def energy_density(kind, k: int, workers=None) -> float:
    """n^{2/3} E for the lattice with k^3 conventional cells."""
    t = tessellate(kind, k, workers)
    return t.n ** (2.0 / 3.0) * t.energy


def reference_cell(kind, volume: float = 1.0) -> ConvexPolytope:
    """Voronoi cell of the origin, centered at the origin, rescaled to ``volume``.

    SC gives a cube, BCC a truncated octahedron and FCC a rhombic dodecahedron.
    """
    kind = LatticeKind(kind)
    if kind == LatticeKind.SC:
        cell = box(-0.5, 0.5)
    elif kind == LatticeKind.BCC:
        diag = [np.array(s, dtype=float) for s in itertools.product((-1.0, 1.0), repeat=3)]
        cell = clip_many(box(-0.5, 0.5), [HalfSpace.through(d, 0.75) for d in diag])
    else:
        nbrs = [np.array(v, dtype=float) for v in itertools.product((-0.5, 0.0, 0.5), repeat=3)
                if sorted(map(abs, v)) == [0.0, 0.5, 0.5]]
        cell = clip_many(box(-1.0, 1.0), [HalfSpace.bisector(np.zeros(3), v) for v in nbrs])
    v = moments(cell, np.zeros(3)).volume
    return cell.scaled((volume / v) ** (1.0 / 3.0))


def normalized_moment(cell: ConvexPolytope) -> float:
    """Second moment about the centroid divided by volume^{5/3}."""
    m = moments(cell)
    return m.second_moment / m.volume ** (5.0 / 3.0)
