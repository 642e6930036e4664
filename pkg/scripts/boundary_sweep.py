"""Energy of cells meeting the boundary of a subcube versus cells inside it, SC lattice in the cube.

    python scripts/boundary_sweep.py --kmin 4 --kmax 12 --omega 0.25,0.75 --out runs/boundary
"""
import argparse
from pathlib import Path

from cvt3d import io
from cvt3d.bounds import boundary_split, fit_slope, sc_cube_generators
from cvt3d.voronoi import build_tessellation


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kmin", type=int, default=4)
    ap.add_argument("--kmax", type=int, default=12)
    ap.add_argument("--omega", default="0.25,0.75")
    ap.add_argument("--out", default="runs/boundary")
    args = ap.parse_args()

    lo, hi = (float(v) for v in args.omega.split(","))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in range(args.kmin, args.kmax + 1):
        s = boundary_split(build_tessellation(sc_cube_generators(k)), (lo, hi))
        rows.append((k, k**3, s.e_boundary, s.e_interior, s.n_boundary, s.n_interior, s.n_outside))
        print(f"k={k:2d} n={k**3:5d}  E_b={s.e_boundary:.4e} ({s.n_boundary:4d})  "
              f"E_i={s.e_interior:.4e} ({s.n_interior:4d})")
    io.write_csv(out / "boundary.csv", ("k", "n", "e_boundary", "e_interior", "n_boundary", "n_interior",
                                        "n_outside"), rows)
    for name, col in (("boundary", 2), ("interior", 3)):
        pts = [(r[1], r[col]) for r in rows if r[col] > 0]
        if len(pts) >= 2:
            print(f"{name} slope {fit_slope(*zip(*pts)):.3f} over {len(pts)} points")


if __name__ == "__main__":
    main()
