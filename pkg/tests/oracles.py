"""Independent reference computations shared by the test modules."""
import functools
import math

import numpy as np
from scipy.optimize import minimize


def tetra_objective(x):
    v = np.asarray(x).reshape(4, 3)
    vol = abs(np.linalg.det(v[1:] - v[0])) / 6
    if vol < 1e-12:
        return 1e6
    c = v.mean(0)
    # second moment of a tetrahedron about its centroid
    return vol / 20 * ((v - c) ** 2).sum() / vol ** (5 / 3)


@functools.lru_cache(maxsize=None)
def tetra_oracle(seed=0, starts=3):
    """Best I/|V|^{5/3} over tetrahedra, parameterized by their four vertices."""
    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(starts):
        x = rng.normal(size=12)
        for _ in range(4):
            # restarting Nelder-Mead rebuilds a collapsed simplex
            r = minimize(tetra_objective, x, method="Nelder-Mead",
                         options={"xatol": 1e-12, "fatol": 1e-15, "maxfev": 20_000})
            x = r.x
        best = min(best, r.fun)
    return best


def regular_tetra_value():
    vol = 1 / (6 * math.sqrt(2))  # unit edge
    return vol / 20 * 1.5 / vol ** (5 / 3)


def mc_second_moment(p, q, n, rng):
    """Rejection-sampled second moment of p about q with its standard error."""
    lo, hi = p.vertices.min(0), p.vertices.max(0)
    hs = p.halfspaces()
    normals = np.array([h.normal for h in hs])
    offsets = np.array([h.offset for h in hs])
    x = lo + (hi - lo) * rng.random((n, 3))
    f = np.where(np.all(x @ normals.T <= offsets, axis=1), np.einsum("ij,ij->i", x - q, x - q), 0.0)
    box_vol = float(np.prod(hi - lo))
    return box_vol * f.mean(), box_vol * f.std() / math.sqrt(n)
