import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvt3d.geom import (ConvexPolytope, DegeneratePolytopeError, HalfSpace, bounding_radius, box, clip,
                        clip_many, convex_hull, diameter, face_count, from_halfspaces, moments,
                        random_polytope, touches_bound, unit_cube, validate, volume)
from cvt3d.lattice import reference_cell

from oracles import mc_second_moment

unit_vec = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1)
seeds = st.integers(0, 2**32 - 1)


# examples

def test_clip_half_cube():
    p = clip(unit_cube(), HalfSpace((1, 0, 0), 0.5))
    assert volume(p) == pytest.approx(0.5, abs=1e-14)
    assert np.allclose(p.vertices.max(0), [0.5, 1, 1])


def test_clip_far_plane_keeps_cube():
    p = clip(unit_cube(), HalfSpace((1, 0, 0), 2.0))
    assert volume(p) == pytest.approx(1.0, abs=1e-14)
    assert face_count(p) == 6


def test_clip_outside_is_empty():
    assert clip(unit_cube(), HalfSpace((1, 0, 0), -1.0)).is_empty


def test_unit_cube_moments():
    m = moments(unit_cube(), (0.5, 0.5, 0.5))
    assert m.volume == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(m.centroid, 0.5, atol=1e-15)
    assert abs(m.second_moment - 0.25) <= 1e-12


def test_box_formula():
    a, b, c = 0.3, 1.7, 2.2
    m = moments(box((0, 0, 0), (a, b, c)))
    assert m.second_moment == pytest.approx(a * b * c * (a * a + b * b + c * c) / 12, rel=1e-12)


def test_tetrahedron_against_monte_carlo():
    rng = np.random.default_rng(3)
    pts = rng.random((4, 3))
    p = convex_hull(pts)
    q = rng.random(3)
    est, se = mc_second_moment(p, q, 10**6, rng)
    assert abs(moments(p, q).second_moment - est) <= 3 * se


def test_diameter_and_radius():
    assert diameter(unit_cube()) == pytest.approx(math.sqrt(3), abs=1e-15)
    assert bounding_radius(unit_cube(), (0.5, 0.5, 0.5)) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)


def test_degenerate_input_raises():
    single = ConvexPolytope(np.zeros((1, 3)), np.zeros(0, dtype=np.int64), np.zeros(1, dtype=np.int64),
                            np.zeros(0, dtype=np.int64))
    with pytest.raises(DegeneratePolytopeError):
        diameter(single)
    with pytest.raises(DegeneratePolytopeError):
        diameter(ConvexPolytope.empty())


def test_face_counts():
    assert face_count(unit_cube()) == 6
    corner = clip(unit_cube(), HalfSpace.through((1, 1, 1), 2.7))
    assert face_count(corner) == 7
    assert face_count(reference_cell("bcc")) == 14
    assert face_count(reference_cell("fcc")) == 12


def test_coplanar_pieces_merge():
    # the hull of a cube is triangulated, the faces still count as six
    h = convex_hull(unit_cube().vertices)
    assert h.n_faces == 12
    assert face_count(h) == 6


def test_json_round_trip():
    p, _ = random_polytope(np.random.default_rng(0))
    q = ConvexPolytope.from_json(p.to_json())
    assert np.array_equal(q.vertices, p.vertices)
    assert q.faces == p.faces


def test_unit_normal_required():
    with pytest.raises(ValueError):
        HalfSpace((1, 1, 0), 0.0)


def test_unbounded_intersection_is_flagged():
    hs = [HalfSpace.through(n, 1.0) for n in np.eye(3)]
    assert touches_bound(from_halfspaces(hs))
    hs += [HalfSpace.through(-n, 1.0) for n in np.eye(3)]
    assert not touches_bound(from_halfspaces(hs))


# properties

@given(seeds, unit_vec, st.floats(-0.4, 0.4))
def test_clip_additivity(seed, nrm, shift):
    p, y = random_polytope(np.random.default_rng(seed))
    h = HalfSpace.through(nrm, float(np.asarray(nrm) @ y) / np.linalg.norm(nrm) + shift)
    a, b = clip(p, h), clip(p, h.flipped())
    full = moments(p, y)
    parts = [moments(x, y) for x in (a, b) if not x.is_empty]
    assert abs(sum(m.volume for m in parts) - full.volume) <= 1e-12 * full.volume
    assert abs(sum(m.second_moment for m in parts) - full.second_moment) <= 1e-12 * full.second_moment


@given(seeds, st.tuples(*[st.floats(-5, 5)] * 3))
def test_translation_covariance(seed, t):
    p, y = random_polytope(np.random.default_rng(seed))
    a = moments(p, y).second_moment
    b = moments(p.translated(t), y + np.asarray(t)).second_moment
    assert b == pytest.approx(a, rel=1e-12)


@given(seeds, st.floats(0.01, 100))
def test_scaling_law(seed, c):
    p, y = random_polytope(np.random.default_rng(seed))
    m = moments(p, y)
    s = moments(p.scaled(c), c * y)
    assert s.second_moment == pytest.approx(c**5 * m.second_moment, rel=1e-12)
    assert s.volume == pytest.approx(c**3 * m.volume, rel=1e-12)


@given(seeds, st.tuples(*[st.floats(-2, 2)] * 3))
def test_parallel_axis(seed, q):
    p, _ = random_polytope(np.random.default_rng(seed))
    m = moments(p)
    mq = moments(p, q)
    d = np.asarray(q) - m.centroid
    assert mq.second_moment >= m.second_moment
    assert mq.second_moment == pytest.approx(m.second_moment + m.volume * d @ d, rel=1e-12)


@given(seeds, st.integers(1, 20))
def test_clipped_polytopes_are_valid(seed, planes):
    p, y = random_polytope(np.random.default_rng(seed), planes)
    validate(p)
    assert p.contains(y)


@given(seeds)
def test_hull_matches_clipped(seed):
    p, _ = random_polytope(np.random.default_rng(seed))
    h = convex_hull(p.vertices)
    assert moments(h).second_moment == pytest.approx(moments(p).second_moment, rel=1e-10)
    assert face_count(h) == face_count(p)
