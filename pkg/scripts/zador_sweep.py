"""Best Lloyd energy per n from random and BCC starts, against the ball and tau floors.

    python scripts/zador_sweep.py --n 16,54,128 --restarts 4 --iters 300 --out runs/zador
"""
import argparse
import time
from pathlib import Path

from cvt3d import io
from cvt3d.bounds import CONSTANTS, zador_sweep
from cvt3d.lloyd import OptimizeConfig
from cvt3d.voronoi import Domain


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", default="16,54,128")
    ap.add_argument("--domain", default="torus", choices=["cube", "torus"])
    ap.add_argument("--restarts", type=int, default=4)
    ap.add_argument("--iters", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/zador")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rows = zador_sweep([int(v) for v in args.n.split(",")], Domain(args.domain),
                       OptimizeConfig(max_iters=args.iters, seed=args.seed), args.restarts)
    io.write_csv(out / "zador.csv", ("n", "start", "best_energy", "density", "restarts", "floor_ok", "tau_ok"),
                 ((r.n, r.start, r.best_energy, r.density, r.restarts, r.floor_ok, r.tau_ok) for r in rows))
    print(f"ball floor {CONSTANTS.C_ball:.6f}  tau_lb {CONSTANTS.tau_lb:.6f}  bcc {CONSTANTS.bcc_density:.6f}")
    for r in rows:
        print(f"n={r.n:5d} {r.start:6s} n^(2/3)E={r.density:.6f}")
    print(f"{time.perf_counter() - t0:.1f}s -> {out}/zador.csv")


if __name__ == "__main__":
    main()
