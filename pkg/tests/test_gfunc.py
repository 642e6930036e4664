import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvt3d.bounds import ball_lower_bound
from cvt3d.gfunc import (FaceParam, InfeasibleStartError, convexity_probe, effective_faces,
                         minimize_G, pad_faces, pattern_search, seed_normals, shape_objective)
from cvt3d.geom import moments, validate
from cvt3d.lattice import normalized_moment, reference_cell

from oracles import regular_tetra_value, tetra_oracle


def test_oracle_finds_regular_tetrahedron():
    assert tetra_oracle() == pytest.approx(regular_tetra_value(), rel=1e-7)


def test_m4_matches_oracle():
    r = minimize_G(1.0, 4, restarts=4, eval_budget=20_000)
    assert r.value == pytest.approx(tetra_oracle(), rel=1e-5)
    assert r.effective_faces == 4


def test_objective_of_known_solids():
    cube = seed_normals(6)[1]
    assert shape_objective(cube, np.full(6, 0.5)) == pytest.approx(0.25, rel=1e-14)
    to = seed_normals(14)[-1]
    offsets = np.r_[np.full(6, 0.5), np.full(8, 0.75 / math.sqrt(3))]
    assert shape_objective(to, offsets) == pytest.approx(normalized_moment(reference_cell("bcc")), rel=1e-12)


def test_objective_infeasible_and_unbounded():
    nrm = np.eye(3)
    assert shape_objective(nrm, np.ones(3)) == math.inf
    cube = seed_normals(6)[1]
    assert shape_objective(cube, np.array([0.5, 0.5, 0.5, -0.6, 0.5, 0.5])) == math.inf


def test_pattern_search_quadratic():
    f = lambda x: float(((x - np.array([0.3, -1.2, 2.0])) ** 2).sum())
    res = pattern_search(f, np.zeros(3), step=0.5, max_evals=100_000)
    assert np.allclose(res.x, [0.3, -1.2, 2.0], atol=1e-7)
    assert all(b < a for a, b in zip(res.trace, res.trace[1:]))


def test_pattern_search_rejects_infeasible_start():
    with pytest.raises(InfeasibleStartError):
        pattern_search(lambda x: math.inf, np.zeros(2))


def test_pattern_search_budget():
    calls = []

    def f(x):
        calls.append(1)
        return float(np.abs(x).sum())

    pattern_search(f, np.ones(5), max_evals=37)
    assert len(calls) <= 37


def test_input_validation():
    with pytest.raises(ValueError):
        minimize_G(0.0, 6)
    with pytest.raises(ValueError):
        minimize_G(1.0, 3)
    with pytest.raises(ValueError):
        minimize_G(1.0, 61)
    with pytest.raises(ValueError):
        convexity_probe(1.0, 6, 6)


def test_padding_is_redundant():
    cube = seed_normals(6)[1]
    n, h = pad_faces(cube, np.full(6, 0.5), 9, np.random.default_rng(0))
    assert len(n) == 9
    assert shape_objective(n, h) == pytest.approx(0.25, rel=1e-14)


@pytest.mark.parametrize("m", [6, 8, 14])
def test_result_invariants(m):
    a = 2.0
    r = minimize_G(a, m, restarts=2, eval_budget=4000, seed=1)
    validate(r.polytope)
    mo = moments(r.polytope)
    assert mo.volume == pytest.approx(a, abs=1e-9)
    assert r.value == pytest.approx(mo.second_moment, rel=1e-12)
    assert r.value >= ball_lower_bound(a)
    assert r.effective_faces <= m
    assert effective_faces(r.polytope, a) == r.effective_faces
    assert all(b < x for x, b in zip(r.best_restart_trace, r.best_restart_trace[1:]))


@pytest.mark.parametrize("m,known", [(6, 0.25), (8, None), (14, None)])
def test_restart_dominance(m, known):
    r = minimize_G(1.0, m, restarts=0, eval_budget=3000)
    solids = [shape_objective(*pad_faces(n, np.full(len(n), 0.5), m, np.random.default_rng(0)))
              for n in seed_normals(m)]
    assert r.value <= min(solids) + 1e-15
    if known is not None:
        assert r.value <= known + 1e-9
    if m == 14:
        assert r.value <= 0.2357


@given(st.sampled_from([0.5, 1.0, 8.0]), st.integers(4, 9))
def test_scaling_identity(a, m):
    one = minimize_G(1.0, m, restarts=1, eval_budget=1500, seed=3)
    other = minimize_G(a, m, restarts=1, eval_budget=1500, seed=3)
    assert other.value == pytest.approx(a ** (5 / 3) * one.value, rel=1e-9)


def test_probe_small():
    rows = convexity_probe(1.0, 4, 8, restarts=2, eval_budget=3000)
    vals = [r.value for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
    assert rows[0].d1 is None and rows[1].d2 is None
    for r in rows[2:]:
        assert r.label in ("convex", "concave", "inconclusive")
        assert r.d2 == pytest.approx(vals[r.m - 4] - 2 * vals[r.m - 5] + vals[r.m - 6], abs=1e-15)


def test_parallel_restarts_deterministic():
    a = minimize_G(1.0, 7, restarts=3, eval_budget=2000, seed=5, workers=1)
    b = minimize_G(1.0, 7, restarts=3, eval_budget=2000, seed=5, workers=3)
    assert a.value == b.value
    assert a.restart_values == b.restart_values


def test_face_param_round_trip():
    rng = np.random.default_rng(0)
    n = rng.normal(size=(5, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    p = FaceParam(5)
    n2, h2 = p.split(p.pack(n, np.arange(5.0)))
    assert np.allclose(n2, n, atol=1e-14) and np.array_equal(h2, np.arange(5.0))
