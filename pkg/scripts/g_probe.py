"""Minimal second moment G(1, m) over m-face polytopes, with discrete differences.

    python scripts/g_probe.py --mmin 4 --mmax 20 --restarts 16 --out runs/gprobe
"""
import argparse
import time
from pathlib import Path

from cvt3d import io
from cvt3d.bounds import CONSTANTS
from cvt3d.gfunc import convexity_probe


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--mmin", type=int, default=4)
    ap.add_argument("--mmax", type=int, default=20)
    ap.add_argument("--restarts", type=int, default=16)
    ap.add_argument("--budget", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="runs/gprobe")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rows = convexity_probe(args.a, args.mmin, args.mmax, args.restarts, args.budget, args.seed, args.threads)
    io.write_csv(out / "gprobe.csv", ("m", "value", "d1", "d2", "sigma", "label"),
                 ((r.m, r.value, r.d1, r.d2, r.sigma, r.label) for r in rows))
    floor = CONSTANTS.C_ball * args.a ** (5 / 3)
    for r in rows:
        d2 = "" if r.d2 is None else f"{r.d2:+.2e}"
        print(f"m={r.m:2d}  G={r.value:.8f}  over ball {r.value / floor - 1:.4f}  d2={d2:>10s}  {r.label}")
    print(f"{time.perf_counter() - t0:.0f}s -> {out}/gprobe.csv")


if __name__ == "__main__":
    main()
