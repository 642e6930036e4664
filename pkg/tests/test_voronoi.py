import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvt3d.geom import face_count, moments
from cvt3d.lattice import generate
from cvt3d.lloyd import random_generators
from cvt3d.voronoi import (Domain, DuplicateGeneratorError, GeneratorSet, build_tessellation, energy,
                           locate, min_image, nearest_neighbor_stats, with_points, wrap)

seeds = st.integers(0, 2**32 - 1)
domains = st.sampled_from([Domain.CUBE, Domain.TORUS])


def test_single_generator_is_the_cube():
    t = with_points([[0.5, 0.5, 0.5]])
    assert t.energy == pytest.approx(0.25, abs=1e-14)
    assert face_count(t.cells[0]) == 6


def test_symmetric_pair():
    t = with_points([[0.25, 0.5, 0.5], [0.75, 0.5, 0.5]])
    assert t.volumes == pytest.approx([0.5, 0.5], abs=1e-14)
    assert t.energy == pytest.approx(2 * 0.5 * (0.25 + 1 + 1) / 12, abs=1e-14)
    assert t.neighbor_ids == ((1,), (0,))


@pytest.mark.parametrize("k", [2, 3, 5])
def test_sc_torus_cells_are_cubes(k):
    t = build_tessellation(generate("sc", k), Domain.TORUS)
    assert t.energy == pytest.approx(0.25 * t.n ** (-2 / 3), rel=1e-12)
    assert all(face_count(c) == 6 for c in t.cells)


def test_energy_is_sum_of_cell_moments():
    t = build_tessellation(random_generators(40, 1), Domain.CUBE)
    assert energy(t) == t.energy
    assert t.energy == math.fsum(moments(c, y).second_moment for c, y in zip(t.cells, t.generators.points))


def test_nearest_neighbor_examples():
    s = nearest_neighbor_stats(GeneratorSet([[0.2, 0.5, 0.5], [0.7, 0.5, 0.5]]), Domain.CUBE)
    assert s.sigma == pytest.approx([0.5, 0.5])
    k = 3
    assert nearest_neighbor_stats(generate("sc", k), Domain.TORUS).sigma == pytest.approx(1 / k)
    assert nearest_neighbor_stats(generate("bcc", k), Domain.TORUS).sigma == pytest.approx(math.sqrt(3) / (2 * k))


def test_bcc_spacing_by_exhaustive_pairs():
    pts = generate("bcc", 3).points
    d = min_image(pts[:, None, :] - pts[None, :, :])
    dist = np.sqrt((d**2).sum(-1)) + np.eye(len(pts)) * 10
    assert dist.min(1) == pytest.approx(math.sqrt(3) / 6, abs=1e-14)


def test_rejects_duplicates_and_bad_input():
    with pytest.raises(DuplicateGeneratorError):
        with_points([[0.1, 0.1, 0.1], [0.1, 0.1, 0.1]])
    with pytest.raises(DuplicateGeneratorError):
        with_points([[0.0, 0.5, 0.5], [1.0, 0.5, 0.5]], Domain.TORUS)
    with pytest.raises(ValueError):
        GeneratorSet([[0.5, 0.5, 1.5]])
    with pytest.raises(ValueError):
        GeneratorSet(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        GeneratorSet([[np.nan, 0.5, 0.5]])


def test_thread_count_does_not_change_results():
    g = random_generators(200, 5)
    for dom in Domain:
        a = build_tessellation(g, dom, workers=1)
        b = build_tessellation(g, dom, workers=3)
        assert a.energy == b.energy
        assert all(np.array_equal(x.vertices, y.vertices) for x, y in zip(a.cells, b.cells))


@given(seeds, st.integers(1, 512), domains)
def test_partition_of_unity(seed, n, dom):
    t = build_tessellation(random_generators(n, seed), dom)
    assert abs(math.fsum(t.volumes) - 1.0) <= 1e-9


def _check_ownership(t, x):
    pts = t.generators.points
    d = x[:, None, :] - pts[None, :, :]
    if t.domain == Domain.TORUS:
        d = min_image(d)
    d2 = np.einsum("ijk,ijk->ij", d, d)
    order = np.argsort(d2, axis=1)
    owner = order[:, 0]
    srt = np.take_along_axis(d2, order, axis=1)
    tie = srt[:, 1] - srt[:, 0] <= 1e-12 if t.n > 1 else np.zeros(len(x), bool)
    for k in range(t.n):
        sel = (owner == k) & ~tie
        if not sel.any():
            continue
        # the torus cell is stored around its generator
        local = pts[k] + d[sel, k] if t.domain == Domain.TORUS else x[sel]
        hs = t.cells[k].halfspaces()
        nrm = np.array([h.normal for h in hs])
        off = np.array([h.offset for h in hs])
        assert np.all(local @ nrm.T <= off + 1e-9)


@given(seeds, st.integers(2, 60), domains)
def test_ownership(seed, n, dom):
    t = build_tessellation(random_generators(n, seed), dom)
    _check_ownership(t, np.random.default_rng(seed + 1).random((2000, 3)))


@pytest.mark.parametrize("dom", list(Domain))
def test_ownership_dense_sample(dom):
    t = build_tessellation(random_generators(50, 11), dom)
    x = np.random.default_rng(12).random((10**5, 3))
    for chunk in np.array_split(x, 10):
        _check_ownership(t, chunk)


@given(seeds, st.integers(2, 100), st.tuples(*[st.floats(0, 1)] * 3))
def test_torus_translation_invariance(seed, n, shift):
    g = random_generators(n, seed)
    a = build_tessellation(g, Domain.TORUS)
    b = build_tessellation(GeneratorSet(wrap(g.points + np.asarray(shift))), Domain.TORUS)
    assert b.energy == pytest.approx(a.energy, rel=1e-10)


@given(seeds, st.integers(2, 100), domains)
def test_neighbors_are_symmetric(seed, n, dom):
    t = build_tessellation(random_generators(n, seed), dom)
    for i, nb in enumerate(t.neighbor_ids):
        for j in nb:
            assert i in t.neighbor_ids[j]
