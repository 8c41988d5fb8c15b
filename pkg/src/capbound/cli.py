"""Command line entry point: ``capbound <command> [options]``.

Every command writes a ``capbound/1`` JSON document (to ``--out`` or stdout)
and exits with status 0 exactly when its checks pass.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .capacity import CompactSet, cap, cube_capacity, is_negligible
from .carving import joint_min, json_number
from .diameter import diameter, diameter_exterior
from .fibered import FiberedProblem, infimum_over_fibers, strip_operator
from .fieldio import write_raw
from .gauge import cube_data, effective_potential, optimize_gauge, sample_polynomial_gauges
from .grid import CubeWindow, Lattice
from .presets import build, catalog, parse_h
from .spectrum import bottom, counting, persson_limit


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--h", default=None, help="lattice spacing, e.g. 1/64 (preset default if omitted)")
    g.add_argument("--gamma", type=float, default=None, help="negligibility constant in (0, 1)")
    g.add_argument("--seed", type=int, default=0, help="seed for random gauges and start vectors")
    g.add_argument("--jobs", type=int, default=1, help="worker processes for preset-level parallelism")
    g.add_argument("--out", default=None, help="output path (JSON; CSV tables are written alongside)")
    g.add_argument("--config", default=None, help="JSON config document supplying option defaults")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="capbound", description="Capacity-based spectral bounds for magnetic "
                                 "Schrodinger operators on lattices.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("capacity", parents=[common], help="capacity of a model set in a cube")
    s.add_argument("--shape", choices=("disk", "cube", "point"), default="disk")
    s.add_argument("--dim", type=int, choices=(1, 2, 3), default=2)
    s.add_argument("--d", type=float, default=1.0, help="cube edge")
    s.add_argument("--radius", type=float, default=0.125)
    s.add_argument("--mask", default=None, help="CompactSet CSV (shape line, run-length line)")
    s.add_argument("--truncation", type=float, default=8.0)

    for name, helptext in (("gauge-opt", "optimise the gauge on one cube"),
                           ("carve", "joint carving and gauge search on one cube")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--preset", required=True, choices=catalog())
        s.add_argument("--center", default=None, help="cube centre x,y[,z] (default: lattice centre)")
        s.add_argument("--d", type=float, required=True, help="cube edge (multiple of h)")
        s.add_argument("--budget", type=int, default=2, help="number of polynomial gauges")
        s.add_argument("--rounds", type=int, default=2)

    s = sub.add_parser("diameter", parents=[common], help="capacitary interior diameter")
    s.add_argument("--preset", required=True, choices=catalog())
    s.add_argument("--d-grid", default="auto", help="'auto' or comma-separated edge lengths")
    s.add_argument("--exterior", type=float, default=None, help="remove the closed ball of this radius")

    s = sub.add_parser("spectrum", parents=[common], help="bottom of the spectrum by eigensolve")
    s.add_argument("--preset", required=True, choices=catalog())
    s.add_argument("--counting", type=float, default=None, help="also count eigenvalues below this value")
    s.add_argument("--persson", action="store_true", help="also compute the exterior sequence over the preset radii")
    s.add_argument("--eigvec-out", default=None, help="raw float64 dump of the eigenvector (real, imag)")

    s = sub.add_parser("fibered", parents=[common], help="fibre bottoms and their infimum")
    s.add_argument("--preset", default="shifted-oscillator", choices=catalog())
    s.add_argument("--mu-max", type=float, default=None)
    s.add_argument("--points", type=int, default=64)
    s.add_argument("--strip-period", type=float, default=None, help="also solve the periodic strip")

    s = sub.add_parser("verify", parents=[common], help="two-sided and essential-spectrum checks")
    s.add_argument("--presets", default="all", help="comma-separated preset names or 'all'")
    s.add_argument("--essential", action="store_true", help="also run the exterior/Persson checks")
    s.add_argument("--no-exterior", action="store_true", help="skip exterior diameters in the essential run")
    return ap


def _cube(preset, d, center):
    lat = preset.lattice
    if center is None:
        center = [0.5 * (lo + hi) for lo, hi in lat.extent()]
    else:
        center = _floats(center)
    return CubeWindow.centered(lat, center, d)


def _write(doc, out):
    text = harness.dumps(doc)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def cmd_capacity(args):
    h = parse_h(args.h) or args.d / 64
    n = args.dim
    lat = Lattice.box((-args.d / 2,) * n, (args.d / 2,) * n, h)
    cube = CubeWindow(lat, (0,) * n, lat.shape[0] - 1)
    if args.mask:
        F = CompactSet.from_csv(cube, Path(args.mask).read_text())
    else:
        X = cube.local_mesh()
        if args.shape == "disk":
            member = sum(x**2 for x in X) <= args.radius**2
        elif args.shape == "cube":
            member = np.all([np.abs(x) <= args.radius for x in X], axis=0)
        else:
            member = np.zeros(cube.shape, bool)
            member[(cube.m // 2,) * n] = True
        F = CompactSet(cube, member)
    c = cap(F, args.truncation)
    cq = cube_capacity(cube, args.truncation)
    res = {"cap": c, "cap_cube": cq, "ratio": c / cq, "nodes": F.count, "h": h, "d": cube.d}
    passed = True
    if args.gamma is not None:
        res["negligible"] = is_negligible(F, args.gamma, args.truncation)
    return res, passed


def cmd_gauge_opt(args):
    p = build(args.preset, args.h)
    cube = _cube(p, args.d, args.center)
    data = cube_data(cube, p.a, p.V, p.omega)
    F0 = ~data.inside
    g = optimize_gauge(data, F0)
    res = {"cube": cube.to_dict(), "optimized": g.to_dict(),
           "integral": json_number(effective_potential(g, data, F0).integral())}
    polys = []
    if args.budget > 0:
        for q in sample_polynomial_gauges(cube, args.budget, args.seed):
            polys.append({"gauge": q.to_dict(),
                          "integral": json_number(effective_potential(q, data, F0).integral())})
    res["polynomial"] = polys
    return res, True


def cmd_carve(args):
    p = build(args.preset, args.h)
    gamma = p.gamma if args.gamma is None else args.gamma
    cube = _cube(p, args.d, args.center)
    data = cube_data(cube, p.a, p.V, p.omega)
    r = joint_min(data, gamma, args.budget, args.rounds, args.seed)
    ok = (not r.feasible) or is_negligible(r.F, gamma)
    return r.to_dict(), ok


def cmd_diameter(args):
    p = build(args.preset, args.h)
    gamma = p.gamma if args.gamma is None else args.gamma
    grid = None if args.d_grid == "auto" else _floats(args.d_grid)
    kw = dict(d_grid=grid, gauge_budget=p.gauge_budget, rounds=p.rounds, seed=args.seed)
    if args.exterior is not None:
        r = diameter_exterior(args.exterior, p.omega, p.a, p.V, gamma, **kw)
    else:
        r = diameter(p.omega, p.a, p.V, gamma, **kw)
    if args.out:
        Path(args.out).with_suffix(".csv").write_text(
            _csv(r.table, ["d", "m", "threshold", "swept", "qualified", "best_integral"]))
    return r.to_dict(), True


def cmd_spectrum(args):
    p = build(args.preset, args.h)
    op = p.operator()
    r = bottom(op, seed=args.seed)
    res = {"preset": p.name, "lattice": p.lattice.to_dict(), **r.to_dict()}
    if args.counting is not None:
        res["counting"] = {"below": args.counting, "count": counting(args.counting, op, seed=args.seed)}
    ok = True
    if args.persson and p.radii:
        pl = persson_limit(p.persson_operator(), p.radii, seed=args.seed)
        res["persson"] = pl.to_dict()
        ok = pl.monotone
    if args.eigvec_out:
        write_raw(args.eigvec_out, [r.eigvec.real, r.eigvec.imag], p.lattice, "complex-scalar")
    return res, ok


def cmd_fibered(args):
    h = parse_h(args.h)
    p = build(args.preset, h)
    if p.fibered is None:
        raise SystemExit(f"preset {p.name} is not fibered")
    fp = p.fibered
    if args.mu_max is not None:
        fp = FiberedProblem(fp.lattice, fp.a_fiber, fp.V_fiber, np.linspace(-args.mu_max, args.mu_max, args.points))
    curve = infimum_over_fibers(fp)
    res = {"preset": p.name, **curve.to_dict()}
    if args.strip_period:
        res["strip_lambda"] = bottom(strip_operator(fp, args.strip_period), seed=args.seed).lam
    if args.out and args.out.endswith(".csv"):
        Path(args.out).write_text(curve.to_csv())
        Path(args.out).with_suffix(".json").write_text(harness.dumps(
            harness.document("fibered", vars(args), res, True)))
        return None, True
    return res, True


def cmd_verify(args):
    names = catalog() if args.presets == "all" else [s.strip() for s in args.presets.split(",") if s.strip()]
    two = harness.verify_two_sided(names, args.gamma, args.seed, args.jobs, args.h)
    res = {"two_sided": two.to_dict()}
    timing = {"two_sided": two.timing()}
    ok = two.passed
    if args.essential:
        ess = harness.verify_essential(names, args.gamma, args.seed, args.jobs, args.h,
                                       with_diameter=not args.no_exterior)
        res["essential"] = ess.to_dict()
        timing["essential"] = ess.timing()
        ok = ok and ess.passed
    if args.out:
        rows = [r.to_dict() for r in two.reports]
        Path(args.out).with_suffix(".csv").write_text(_csv(rows, ["preset", "lambda", "D", "ratio", "bracketed"]))
    return (res, timing), ok


COMMANDS = {
    "capacity": cmd_capacity,
    "gauge-opt": cmd_gauge_opt,
    "carve": cmd_carve,
    "diameter": cmd_diameter,
    "spectrum": cmd_spectrum,
    "fibered": cmd_fibered,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        if cfg.get("schema", harness.SCHEMA) != harness.SCHEMA:
            parser.error(f"config schema {cfg.get('schema')!r} is not {harness.SCHEMA}")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.get("options", {}).items()})
        args = parser.parse_args(argv)
    result, ok = COMMANDS[args.command](args)
    timing = None
    if isinstance(result, tuple):
        result, timing = result
    if result is not None:
        config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "config", "jobs")}
        _write(harness.document(args.command, config, result, ok, timing), args.out)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
