"""Convex polytope kernel: half-space clipping and exact moment integration.

A polytope is a vertex array plus a list of face loops, each loop ordered
counterclockwise when seen from outside.  Every face optionally carries an
integer tag recording which plane produced it (Voronoi construction uses it
to recover neighbor lists).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels as _k

PLANE_TOL = 1e-12  # relative to the polytope size
DEDUP_TOL = 1e-13  # absolute
NORMAL_MERGE_TOL = 1e-7


class DegeneratePolytopeError(ValueError):
    """Raised when a polytope violates its structural invariants."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class HalfSpace:
    """The closed half-space {x : normal . x <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3)
        if not np.all(np.isfinite(n)) or not math.isfinite(self.offset):
            raise ValueError("half-space must be finite")
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError("half-space normal must have unit length")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def through(cls, normal, offset) -> "HalfSpace":
        """Normalize an arbitrary (nonzero) normal and rescale the offset with it."""
        n = np.asarray(normal, dtype=float)
        length = float(np.linalg.norm(n))
        if length == 0.0:
            raise ValueError("zero normal")
        return cls(n / length, float(offset) / length)

    @classmethod
    def bisector(cls, y, z) -> "HalfSpace":
        """Points at least as close to ``y`` as to ``z``."""
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        d = z - y
        length = float(np.linalg.norm(d))
        if length == 0.0:
            raise ValueError("bisector of coincident points")
        n = d / length
        return cls(n, float(n @ (0.5 * (y + z))))

    def flipped(self) -> "HalfSpace":
        return HalfSpace(-self.normal, -self.offset)


@dataclass(frozen=True, eq=False)
class ConvexPolytope:
    """Bounded convex cell stored as flat face loops.

    ``face_index[face_offsets[i]:face_offsets[i+1]]`` is the vertex loop of
    face ``i``; ``face_tags[i]`` labels the plane that produced it.
    """

    vertices: np.ndarray
    face_index: np.ndarray
    face_offsets: np.ndarray
    face_tags: np.ndarray
    generator_tag: Optional[int] = None

    @classmethod
    def from_faces(cls, vertices, faces, tags=None, generator_tag=None) -> "ConvexPolytope":
        faces = [list(f) for f in faces]
        idx = np.array([i for f in faces for i in f], dtype=np.int64)
        ptr = np.zeros(len(faces) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(f) for f in faces])
        tags = np.full(len(faces), -1, dtype=np.int64) if tags is None else np.asarray(tags, dtype=np.int64)
        if len(tags) != len(faces):
            raise DegeneratePolytopeError("tag count", "one tag per face required")
        verts = np.ascontiguousarray(np.asarray(vertices, dtype=float).reshape(-1, 3))
        if idx.size and (idx.min() < 0 or idx.max() >= len(verts)):
            raise DegeneratePolytopeError("face index out of range")
        return cls(verts, idx, ptr, tags, generator_tag)

    @classmethod
    def empty(cls) -> "ConvexPolytope":
        return cls(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), np.zeros(1, dtype=np.int64),
                   np.zeros(0, dtype=np.int64))

    @property
    def n_faces(self) -> int:
        return len(self.face_offsets) - 1

    @property
    def is_empty(self) -> bool:
        return self.n_faces == 0

    @property
    def faces(self) -> tuple:
        idx = self.face_index.tolist()
        ptr = self.face_offsets.tolist()
        return tuple(tuple(idx[ptr[i]:ptr[i + 1]]) for i in range(len(ptr) - 1))

    @property
    def tags(self) -> tuple:
        return tuple(self.face_tags.tolist())

    def _replace_vertices(self, verts) -> "ConvexPolytope":
        return ConvexPolytope(np.ascontiguousarray(verts), self.face_index, self.face_offsets,
                              self.face_tags, self.generator_tag)

    def translated(self, t) -> "ConvexPolytope":
        return self._replace_vertices(self.vertices + np.asarray(t, dtype=float))

    def scaled(self, c: float, about=None) -> "ConvexPolytope":
        if c <= 0:
            raise ValueError("scale factor must be positive")
        o = np.zeros(3) if about is None else np.asarray(about, dtype=float)
        return self._replace_vertices(o + c * (self.vertices - o))

    def with_tag(self, generator_tag) -> "ConvexPolytope":
        return ConvexPolytope(self.vertices, self.face_index, self.face_offsets,
                              self.face_tags, generator_tag)

    def halfspaces(self) -> list:
        """Supporting half-spaces of the faces (Newell normals)."""
        out = []
        for f in self.faces:
            pts = self.vertices[list(f)]
            n = _newell(pts)
            out.append(HalfSpace.through(n, n @ pts.mean(axis=0)))
        return out

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return all(h.normal @ x <= h.offset + tol for h in self.halfspaces())

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist(), "faces": [list(f) for f in self.faces]}

    @classmethod
    def from_json(cls, data: dict) -> "ConvexPolytope":
        return cls.from_faces(data["vertices"], data["faces"])


@dataclass(frozen=True)
class Moments:
    volume: float
    centroid: np.ndarray
    second_moment: float
    empty: bool = False


def box(lo, hi, tags: Sequence[int] = (-1, -2, -3, -4, -5, -6)) -> ConvexPolytope:
    """Axis-aligned box.  Tags are ordered (-x, +x, -y, +y, -z, +z)."""
    lo = np.asarray(lo, dtype=float) * np.ones(3)
    hi = np.asarray(hi, dtype=float) * np.ones(3)
    if np.any(hi <= lo):
        raise DegeneratePolytopeError("empty box", f"lo={lo}, hi={hi}")
    # vertex i has bit 0 -> x, bit 1 -> y, bit 2 -> z
    verts = np.array([[hi[0] if i & 1 else lo[0],
                       hi[1] if i & 2 else lo[1],
                       hi[2] if i & 4 else lo[2]] for i in range(8)])
    faces = (
        (0, 4, 6, 2),  # x = lo
        (1, 3, 7, 5),  # x = hi
        (0, 1, 5, 4),  # y = lo
        (2, 6, 7, 3),  # y = hi
        (0, 2, 3, 1),  # z = lo
        (4, 5, 7, 6),  # z = hi
    )
    return ConvexPolytope.from_faces(verts, faces, tags)


def unit_cube() -> ConvexPolytope:
    return box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))


def _newell(pts: np.ndarray) -> np.ndarray:
    nxt = np.roll(pts, -1, axis=0)
    return np.array([
        np.sum((pts[:, 1] - nxt[:, 1]) * (pts[:, 2] + nxt[:, 2])),
        np.sum((pts[:, 2] - nxt[:, 2]) * (pts[:, 0] + nxt[:, 0])),
        np.sum((pts[:, 0] - nxt[:, 0]) * (pts[:, 1] + nxt[:, 1])),
    ])


def _size(p: ConvexPolytope) -> float:
    ext = p.vertices.max(axis=0) - p.vertices.min(axis=0)
    return float(np.sqrt(ext @ ext))


def _require_usable(p: ConvexPolytope) -> None:
    if p.n_faces < 4 or len(p.vertices) < 4:
        raise DegeneratePolytopeError("too few elements",
                                      f"{len(p.vertices)} vertices, {p.n_faces} faces")
    if np.any(np.diff(p.face_offsets) < 3):
        raise DegeneratePolytopeError("face with fewer than 3 vertices")


def clip(p: ConvexPolytope, h: HalfSpace, tag: int = -1) -> ConvexPolytope:
    """Intersect ``p`` with the half-space ``h``.

    Vertices within the plane tolerance count as inside.  The new face, if
    any, is tagged with ``tag``.  An empty result is returned as
    ``ConvexPolytope.empty()``.
    """
    if p.is_empty:
        return p
    _require_usable(p)
    v, idx, ptr, tags, status = _k.clip(p.vertices, p.face_index, p.face_offsets, p.face_tags,
                                        h.normal, h.offset, tag, PLANE_TOL, DEDUP_TOL)
    if status == _k.UNCHANGED:
        return p
    if status == _k.EMPTY:
        return ConvexPolytope.empty()
    return ConvexPolytope(v, idx, ptr, tags, p.generator_tag)


def clip_many(p: ConvexPolytope, halfspaces, tags=None) -> ConvexPolytope:
    tags = tags if tags is not None else [-1] * len(halfspaces)
    for h, t in zip(halfspaces, tags):
        p = clip(p, h, t)
        if p.is_empty:
            break
    return p


def moments(p: ConvexPolytope, query=None) -> Moments:
    """Volume, centroid and second moment about ``query`` (default: centroid).

    The cell is cut into tetrahedra joining the vertex mean to a fan
    triangulation of each face; each tetrahedron contributes
    vol/20 * (sum |v_i - q|^2 + |sum (v_i - q)|^2).
    """
    if p.is_empty:
        q = np.zeros(3) if query is None else np.asarray(query, dtype=float)
        return Moments(0.0, q.copy(), 0.0, empty=True)
    if query is None:
        vol, c, _ = _k.moments(p.vertices, p.face_index, p.face_offsets, p.vertices.mean(axis=0))
        # second pass about the exact centroid avoids parallel-axis cancellation
        vol, _, m2 = _k.moments(p.vertices, p.face_index, p.face_offsets, c)
        return Moments(vol, c, m2)
    q = np.asarray(query, dtype=float).reshape(3)
    vol, c, m2 = _k.moments(p.vertices, p.face_index, p.face_offsets, q)
    return Moments(vol, c, m2)


def volume(p: ConvexPolytope) -> float:
    return 0.0 if p.is_empty else moments(p, p.vertices[0]).volume


def diameter(p: ConvexPolytope) -> float:
    if p.is_empty or len(p.vertices) < 2:
        raise DegeneratePolytopeError("diameter of empty or single-vertex polytope")
    v = p.vertices
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))


def bounding_radius(p: ConvexPolytope, query) -> float:
    """Largest distance from ``query`` to a point of ``p`` (attained at a vertex)."""
    if p.is_empty or len(p.vertices) < 2:
        raise DegeneratePolytopeError("bounding radius of empty or single-vertex polytope")
    return math.sqrt(_k.max_dist2(p.vertices, np.asarray(query, dtype=float)))


def face_normals(p: ConvexPolytope) -> np.ndarray:
    out = np.empty((p.n_faces, 3))
    for i, f in enumerate(p.faces):
        n = _newell(p.vertices[list(f)])
        out[i] = n / np.linalg.norm(n)
    return out


def face_areas(p: ConvexPolytope) -> np.ndarray:
    return np.array([0.5 * np.linalg.norm(_newell(p.vertices[list(f)])) for f in p.faces])


def face_groups(p: ConvexPolytope) -> list:
    """Merge edge-adjacent faces whose normals agree; returns lists of face indices."""
    normals = face_normals(p)
    parent = list(range(p.n_faces))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    edge_owner = {}
    for fi, f in enumerate(p.faces):
        for k in range(len(f)):
            a, b = f[k], f[(k + 1) % len(f)]
            key = (a, b) if a < b else (b, a)
            other = edge_owner.get(key)
            if other is None:
                edge_owner[key] = fi
            elif np.linalg.norm(normals[fi] - normals[other]) <= NORMAL_MERGE_TOL:
                ra, rb = find(fi), find(other)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups = {}
    for i in range(p.n_faces):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups)]


def face_count(p: ConvexPolytope) -> int:
    if p.is_empty:
        raise DegeneratePolytopeError("face count of empty polytope")
    return len(face_groups(p))


def validate(p: ConvexPolytope) -> None:
    """Check planarity, convexity, Euler characteristic and positive volume."""
    _require_usable(p)
    verts = p.vertices
    eps = PLANE_TOL * _size(p)
    for f, h in zip(p.faces, p.halfspaces()):
        dev = np.abs(verts[list(f)] @ h.normal - h.offset)
        if dev.max() > eps:
            raise DegeneratePolytopeError("non-planar face", f"deviation {dev.max():.3e}")
        if np.max(verts @ h.normal - h.offset) > eps:
            raise DegeneratePolytopeError("not convex", f"face {f}")
    edges = set()
    for f in p.faces:
        for k in range(len(f)):
            a, b = f[k], f[(k + 1) % len(f)]
            edges.add((a, b) if a < b else (b, a))
    euler = len(verts) - len(edges) + p.n_faces
    if euler != 2:
        raise DegeneratePolytopeError("Euler characteristic", f"V-E+F = {euler}")
    if moments(p).volume <= 0:
        raise DegeneratePolytopeError("non-positive volume")


BOUND_TAG = -100


def from_halfspaces(halfspaces, tags=None, bound: float = 1e3) -> ConvexPolytope:
    """Intersection of half-spaces, starting from the box [-bound, bound]^3.

    Faces of the starting box carry tags <= ``BOUND_TAG``; if any survive
    (see ``touches_bound``) the true intersection is unbounded or larger
    than the box.
    """
    start = box((-bound,) * 3, (bound,) * 3, tags=tuple(BOUND_TAG - i for i in range(6)))
    return clip_many(start, halfspaces, tags)


def touches_bound(p: ConvexPolytope) -> bool:
    return bool(np.any(p.face_tags <= BOUND_TAG))


def convex_hull(points) -> ConvexPolytope:
    """Convex hull of a point cloud with outward-oriented triangular faces."""
    from scipy.spatial import ConvexHull

    pts = np.asarray(points, dtype=float)
    hull = ConvexHull(pts)
    used = np.unique(hull.simplices)
    remap = {int(old): i for i, old in enumerate(used)}
    inner = pts[used].mean(axis=0)
    faces = []
    for tri in hull.simplices:
        a, b, c = (pts[i] for i in tri)
        f = [remap[int(i)] for i in tri]
        if np.cross(b - a, c - a) @ (a - inner) < 0:
            f = f[::-1]
        faces.append(f)
    return ConvexPolytope.from_faces(pts[used], faces)


def random_polytope(rng: np.random.Generator, n_planes: int = 8) -> tuple:
    """Unit cube cut by random planes, with a random interior point.

    Each plane passes at a random depth through the cube and keeps the
    center side, so the result is never empty.  Returns (polytope, point).
    """
    p = unit_cube()
    center = np.full(3, 0.5)
    for _ in range(n_planes):
        nrm = rng.normal(size=3)
        nrm /= np.linalg.norm(nrm)
        h = float(nrm @ center) + rng.uniform(0.05, 0.5)
        p = clip(p, HalfSpace(nrm, h))
    # random convex combination of vertices lies strictly inside
    w = rng.dirichlet(np.ones(len(p.vertices)))
    return p, w @ p.vertices
