"""Command-line front end.

Every command writes its files under --out and nothing else.  Exit codes:
0 success, 2 bad flags or input, 1 failure during the computation.
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import bounds, gfunc, io, lattice, lloyd
from .geom import random_polytope
from .voronoi import Domain, GeneratorSet, build_tessellation

COMMANDS = ("constants", "lattice", "lloyd", "audit", "lemma-d", "lemma-below", "boundary",
            "zador", "gmin", "gprobe")


class UsageError(ValueError):
    pass


def _int_list(text: str) -> list:
    """'8,27,64' or '4:12' (inclusive range)."""
    try:
        if ":" in text:
            a, b = text.split(":")
            out = list(range(int(a), int(b) + 1))
        else:
            out = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected integers like '8,27' or '4:12', got {text!r}") from None
    if not out:
        raise UsageError(f"empty integer list {text!r}")
    return out


def _omega(text: str) -> tuple:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--omega expects 'x0,x1', got {text!r}") from None
    if not 0.0 <= lo < hi <= 1.0:
        raise UsageError("--omega needs 0 <= x0 < x1 <= 1")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cvt3d", description="3D centroidal Voronoi experiments")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--domain", choices=[d.value for d in Domain], default=None)
    ap.add_argument("--n", default=None, help="generator count; zador takes a list '8,27,64'")
    ap.add_argument("--k", default=None, help="lattice replication; boundary takes a range '4:12'")
    ap.add_argument("--kind", choices=[k.value for k in lattice.LatticeKind], default="bcc")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--iters", type=int, default=None)
    ap.add_argument("--restarts", type=int, default=None)
    ap.add_argument("--m", type=int, default=14)
    ap.add_argument("--mmin", type=int, default=4)
    ap.add_argument("--mmax", type=int, default=20)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--omega", default="0.25,0.75")
    ap.add_argument("--budget", type=int, default=None, help="evaluations per start (gmin, gprobe, lemma-d)")
    ap.add_argument("--input", default=None, help="tessellation or generators JSON")
    ap.add_argument("--dump", default=None, help="also write the tessellation JSON under --out")
    ap.add_argument("--out", default=".")
    ap.add_argument("--threads", type=int, default=None)
    return ap


def _threads(args) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        return args.threads
    env = os.environ.get("CVT3D_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"CVT3D_THREADS must be an integer, got {env!r}") from None
    return 1


def _need_int(value, name: str, lo: int = 1) -> int:
    if value is None:
        raise UsageError(f"--{name} is required")
    try:
        v = int(value)
    except ValueError:
        raise UsageError(f"--{name} must be an integer") from None
    if v < lo:
        raise UsageError(f"--{name} must be at least {lo}")
    return v


def _input_tess(args, workers):
    if args.input is None:
        raise UsageError("--input is required (tessellation or generators JSON)")
    if not Path(args.input).is_file():
        raise UsageError(f"no such file: {args.input}")
    try:
        return io.load_tessellation(args.input, workers)
    except (ValueError, KeyError) as e:
        raise UsageError(f"bad input {args.input}: {e}") from None


def _dump(args, out: Path, t) -> None:
    if args.dump:
        io.write_json(out / Path(args.dump).name, io.tessellation_json(t))


# commands

def cmd_constants(args, out, workers):
    io.write_json(out / "constants.json", bounds.CONSTANTS.report())


def cmd_lattice(args, out, workers):
    k = _need_int(args.k, "k")
    t = lattice.tessellate(args.kind, k, workers)
    io.write_json(out / "lattice.json", {
        "kind": args.kind, "k": k, "n": t.n, "energy": t.energy,
        "density": t.n ** (2.0 / 3.0) * t.energy,
    })
    io.write_csv(out / "cells.csv", io.CELL_SUMMARY_HEADER, io.cell_summary_rows(t))
    _dump(args, out, t)


def cmd_lloyd(args, out, workers):
    n = _need_int(args.n, "n")
    domain = Domain(args.domain or "cube")
    iters = args.iters if args.iters is not None else 10_000
    if iters < 1:
        raise UsageError("--iters must be at least 1")
    gens = lloyd.random_generators(n, args.seed)
    res = lloyd.optimize(gens, domain, lloyd.OptimizeConfig(max_iters=iters, seed=args.seed), workers)
    moves = [None] + res.max_moves
    io.write_csv(out / "trace.csv", ("iter", "energy", "max_move"),
                 ((i, e, m) for i, (e, m) in enumerate(zip(res.energies, moves))))
    io.write_json(out / "generators.json", io.generators_json(res.generators, domain))
    _dump(args, out, res.tessellation)


AUDIT_HEADER = ("index", "volume_n", "diam_n13", "diam_nm2_13", "faces", "sigma_n13", "ball_slack",
                "n23E", "diam_low_ok", "volume_low_ok", "diam_high_ok", "faces_ok")


def cmd_audit(args, out, workers):
    t = _input_tess(args, workers)
    rep = bounds.audit(t)
    n23 = t.n ** (2.0 / 3.0)
    rows = []
    for c, m in zip(rep.cells, t.cell_moments):
        # each cell's energy as if all n cells matched it
        rows.append((c.index, c.volume_n, c.diam_n13, c.diam_nm2_13, c.faces, c.sigma_n13, c.ball_slack,
                     n23 * t.n * m.second_moment, c.diam_low_ok, c.volume_low_ok, c.diam_high_ok, c.faces_ok))
    s = rep.summary()
    rows.append(("summary", None, None, None, rep.max_faces, rep.delone_min, rep.energy_floor_margin,
                 rep.density, rep.diam_low_ok, rep.volume_low_ok, rep.diam_high_ok, rep.faces_ok))
    io.write_csv(out / "audit.csv", AUDIT_HEADER, rows)
    io.write_json(out / "audit_summary.json", s)


def cmd_lemma_d(args, out, workers):
    budget = args.budget or 128
    rows = []
    if args.input:
        t = _input_tess(args, workers)
        items = [(k, c, t.generators.points[k]) for k, c in enumerate(t.cells)]
    else:
        n = _need_int(args.n or 100, "n")
        rng = np.random.default_rng(args.seed)
        items = [(k,) + random_polytope(rng) for k in range(n)]
    for k, cell, y in items:
        r = bounds.lemma_d_check(cell, y, budget, args.seed)
        rows.append((k, r.gain, r.bound_r, r.bound_vol, r.radius, r.volume, r.radius_candidate_gain,
                     r.face_candidate_gain, r.passed))
    io.write_csv(out / "lemma_d.csv", ("index", "gain", "bound_r", "bound_vol", "r", "volume",
                                       "radius_candidate_gain", "face_candidate_gain", "passed"), rows)
    if not all(r[-1] for r in rows):
        raise RuntimeError("insertion gain below the bound on some cell; see lemma_d.csv")


def cmd_lemma_below(args, out, workers):
    if args.input:
        t = _input_tess(args, workers)
    else:
        t = lattice.tessellate(args.kind, _need_int(args.k or 3, "k"), workers)
    rows = []
    for k in range(t.n):
        r = bounds.lemma_below_check(t, k)
        rows.append((k, r.sigma, r.r, r.bound_r, r.bound_vol, r.bound_r_quadratic, r.satisfied))
    io.write_csv(out / "lemma_below.csv", ("index", "sigma", "r", "bound_r", "bound_vol",
                                           "bound_r_quadratic", "satisfied"), rows)


def cmd_boundary(args, out, workers):
    ks = _int_list(args.k or "4:12")
    if min(ks) < 1:
        raise UsageError("--k values must be positive")
    omega = _omega(args.omega)
    rows = []
    for k in ks:
        t = build_tessellation(bounds.sc_cube_generators(k), Domain.CUBE, workers)
        s = bounds.boundary_split(t, omega)
        rows.append((k, t.n, s.e_boundary, s.e_interior, s.n_boundary, s.n_interior, s.n_outside))
    io.write_csv(out / "boundary.csv", ("k", "n", "e_boundary", "e_interior", "n_boundary",
                                        "n_interior", "n_outside"), rows)
    summary = {"omega": list(omega), "k": ks}
    for name, col in (("slope_boundary", 2), ("slope_interior", 3)):
        pts = [(r[1], r[col]) for r in rows if r[col] > 0]
        summary[name] = bounds.fit_slope(*zip(*pts)) if len(pts) >= 2 else None
    io.write_json(out / "boundary_slopes.json", summary)


def cmd_zador(args, out, workers):
    ns = _int_list(args.n or "8,27,64")
    if min(ns) < 2:
        raise UsageError("--n values must be at least 2")
    restarts = args.restarts if args.restarts is not None else 4
    if restarts < 1:
        raise UsageError("--restarts must be at least 1")
    cfg = lloyd.OptimizeConfig(max_iters=args.iters or 200, seed=args.seed)
    rows = bounds.zador_sweep(ns, Domain(args.domain or "torus"), cfg, restarts, workers)
    io.write_csv(out / "zador.csv", ("n", "start", "best_energy", "density", "restarts", "floor_ok", "tau_ok"),
                 ((r.n, r.start, r.best_energy, r.density, r.restarts, r.floor_ok, r.tau_ok) for r in rows))


def _g_args(args):
    restarts = args.restarts if args.restarts is not None else 16
    budget = args.budget or 20_000
    if restarts < 0 or budget < 1:
        raise UsageError("--restarts must be >= 0 and --budget >= 1")
    if not args.a > 0:
        raise UsageError("--a must be positive")
    return restarts, budget


def cmd_gmin(args, out, workers):
    restarts, budget = _g_args(args)
    if not 4 <= args.m <= 60:
        raise UsageError("--m must be in [4, 60]")
    r = gfunc.minimize_G(args.a, args.m, restarts, budget, args.seed, workers=workers)
    io.write_json(out / "gmin.json", {
        "a": args.a, "m": args.m, "value": r.value, "effective_faces": r.effective_faces,
        "restarts_used": r.restarts_used, "restart_values": [args.a ** (5 / 3) * v for v in r.restart_values],
        "ball_lower_bound": bounds.ball_lower_bound(args.a),
    })
    io.write_json(out / "gmin_polytope.json", r.polytope.to_json())
    io.write_csv(out / "gmin_trace.csv", ("step", "value"),
                 ((i, args.a ** (5 / 3) * v) for i, v in enumerate(r.best_restart_trace)))


def cmd_gprobe(args, out, workers):
    restarts, budget = _g_args(args)
    if not 4 <= args.mmin < args.mmax <= 60:
        raise UsageError("need 4 <= --mmin < --mmax <= 60")
    rows = gfunc.convexity_probe(args.a, args.mmin, args.mmax, restarts, budget, args.seed, workers)
    io.write_csv(out / "gprobe.csv", ("m", "value", "d1", "d2", "sigma", "label"),
                 ((r.m, r.value, r.d1, r.d2, r.sigma, r.label) for r in rows))


HANDLERS = {
    "constants": cmd_constants, "lattice": cmd_lattice, "lloyd": cmd_lloyd, "audit": cmd_audit,
    "lemma-d": cmd_lemma_d, "lemma-below": cmd_lemma_below, "boundary": cmd_boundary,
    "zador": cmd_zador, "gmin": cmd_gmin, "gprobe": cmd_gprobe,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on bad usage and 0 on --help
        return int(e.code or 0)
    try:
        workers = _threads(args)
        out = Path(args.out)
        if out.exists() and not out.is_dir():
            raise UsageError(f"--out {out} is not a directory")
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[args.command](args, out, workers)
    except UsageError as e:
        print(f"cvt3d: error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - any failure inside the computation
        print(f"cvt3d: {args.command} failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
