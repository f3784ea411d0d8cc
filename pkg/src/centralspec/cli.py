"""Command-line driver: ``centralspec <command> [options]``.

Every command writes plain CSV/JSON into ``--out``. Options can also be
given in a JSON file passed with ``--run-config`` (keys are option names
with dashes replaced by underscores); explicit flags win over the file.

Exit status: 0 success, 1 numerical failure, 2 usage error.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import _io
from .central import (
    CentralConfiguration,
    CertificationError,
    NonConvergenceError,
    body_multipliers,
    embed,
    gen_euler_collinear,
    gen_lagrange_equilateral,
    gen_symmetric_cloud,
    normalize_unit_lambda,
    solve_central,
)
from .momentmap import (
    complex_orbit_pushforward,
    convexity_audit,
    hull_estimate,
    inertia_operator,
    ks_uniform,
    pushforward_histogram,
    random_complex_structure,
    sample_spectra,
    standard_complex_structure,
    support_width,
    write_samples_csv,
)
from .motions import (
    KeplerOrbit,
    homographic_motion,
    homothetic_motion,
    newton_residual,
    rigid_motion,
)
from .nbody import PhaseState, SingularConfigurationError, conserved, integrate
from .numerics import RngStream
from .spherical import (
    SpectralParam,
    infinitesimal_iwasawa,
    limit_check,
    pushforward_vs_branching,
    write_limit_csv,
)


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _parse_x(spec):
    """``diag:a,b,...`` or a path to a matrix JSON (list of rows)."""
    if spec.startswith("diag:"):
        X = np.diag(_floats(spec[5:]))
    elif os.path.exists(spec):
        with open(spec) as fh:
            X = np.asarray(json.load(fh), dtype=float)
    else:
        raise UsageError(f"cannot parse --x {spec!r}; use diag:v1,v2,... or a JSON file")
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] % 2:
        raise UsageError("X must be a square matrix of even size")
    return X


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _rng(args):
    return RngStream(int(args.seed))


def cmd_central(args):
    if args.initial:
        with open(args.initial) as fh:
            d = json.load(fh)
        m = np.asarray(d["masses"], dtype=float)
        c = solve_central(np.asarray(d["positions"], dtype=float), m, threshold=args.threshold)
    elif args.preset in ("lagrange", "euler"):
        masses = _floats(args.masses) if args.masses else [1.0, 1.0, 1.0]
        if len(masses) != 3:
            raise UsageError(f"--preset {args.preset} needs three masses")
        if args.preset == "lagrange":
            c = gen_lagrange_equilateral(masses)
        else:
            c = gen_euler_collinear(masses, tuple(_ints(args.ordering)))
    elif args.preset:
        size = args.n if args.preset == "polygon" else args.dim
        c = gen_symmetric_cloud(args.preset, args.m, args.M, size=size, threshold=args.threshold)
    else:
        raise UsageError("give --preset or --initial")
    if args.normalize:
        c = normalize_unit_lambda(c)
    if args.lift:
        c = embed(c, args.lift)
    c.save(_out(args, "central.json"))
    lam_i = body_multipliers(c.positions, c.masses)
    lam_i = lam_i[~np.isnan(lam_i)]
    report = {
        "certified": c.certified(args.threshold),
        "threshold": args.threshold,
        "lambda": c.lam,
        "residual": c.residual,
        "relative_residual": c.relative_residual,
        "multiplier_spread": float(np.max(np.abs(lam_i - c.lam)) / c.lam) if len(lam_i) else 0.0,
    }
    _io.dump(report, _out(args, "certification.json"))
    print(f"lambda = {_io.fmt(c.lam)}  relative residual = {c.relative_residual:.3e}")
    if not report["certified"]:
        raise NumericalFailure("configuration not certified")


def _x_from_args(args):
    if args.x:
        return _parse_x(args.x)
    if args.central:
        c = normalize_unit_lambda(CentralConfiguration.load(args.central))
        if args.lift:
            c = embed(c, args.lift)
        if c.dim % 2:
            raise UsageError("configuration has odd dimension; pass --lift with an even dimension")
        return inertia_operator(c.positions, c.masses)
    raise UsageError("give --x or --central")


def cmd_spectra(args):
    X = _x_from_args(args)
    d = X.shape[0] // 2
    if args.hull and d > 4:
        raise UsageError(f"--hull supports d <= 4 (here d = {d}); use --support instead")
    rng = _rng(args)
    j = standard_complex_structure(d)
    S = sample_spectra(X, j, args.n, rng.substream(0), workers=args.threads)
    write_samples_csv(S, _out(args, "samples.csv"))
    do_hull = args.hull if args.hull is not None else d <= 4
    if do_hull:
        H = hull_estimate(S)
        _io.dump(H.to_dict(), _out(args, "hull.json"))
    if args.support or d > 4:
        dirs = list(np.eye(d)) + [np.ones(d) / math.sqrt(d)]
        widths = [{"direction": u, "min": lo, "max": hi}
                  for u in dirs for lo, hi in [support_width(S, u)]]
        _io.dump({"d": d, "n_samples": args.n, "widths": widths}, _out(args, "support.json"))
    if args.audit:
        rep = convexity_audit(X, args.audit, rng.substream(1), tol=args.tol, n_pilot=args.pilot)
        _io.dump(rep.to_dict(), _out(args, "audit.json"))
        print(f"audit: {'PASS' if rep.passed else 'FAIL'} max distance {rep.max_distance:.3e}")
        if not rep.passed:
            raise NumericalFailure("convexity audit failed")


def cmd_motion(args):
    if not args.config:
        raise UsageError("--config (central configuration JSON) is required")
    c = CentralConfiguration.load(args.config)
    if args.kind in ("rigid", "homographic") and c.dim % 2:
        raise UsageError(f"--kind {args.kind} needs an even-dimensional configuration "
                         f"(dim = {c.dim}); no compatible complex structure exists")
    if c.dim % 2 == 0:
        d = c.dim // 2
        if args.j == "standard":
            J = standard_complex_structure(d)
        else:
            J = random_complex_structure(_rng(args).generator(), d)
    try:
        if args.kind == "rigid":
            omega = args.omega if args.omega is not None else math.sqrt(c.lam)
            T = args.t if args.t is not None else 2 * math.pi / omega
            times = np.linspace(0.0, T, args.steps + 1)
            traj = rigid_motion(c, J, times, omega=omega)
        elif args.kind == "homographic":
            orbit = KeplerOrbit(args.a, args.e, c.lam)
            T = args.t if args.t is not None else orbit.period
            times = np.linspace(0.0, T, args.steps + 1)
            traj = homographic_motion(c, J, orbit, times)
        else:
            T = args.t if args.t is not None else 1.0
            times = np.linspace(0.0, T, args.steps + 1)
            traj = homothetic_motion(c, args.r0, args.v0, times)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    traj.write(_out(args, "trajectory.csv"), _out(args, "trajectory.json"))
    res = newton_residual(traj)
    report = {"kind": args.kind, "steps": args.steps, "t_final": float(traj.times[-1]),
              "newton_residual": res, "max_residual": args.max_residual,
              "passed": res <= args.max_residual, "truncated": traj.truncated}
    if args.crosscheck:
        s0 = PhaseState(traj.positions[0], traj.velocities[0])
        num = integrate(s0, c.masses, float(traj.times[-1]), tolerance=1e-12, times=traj.times)
        q0 = conserved(s0, c.masses)
        q1 = conserved(num.state(len(num) - 1), c.masses)
        report["integrator_max_deviation"] = float(np.max(np.abs(num.positions - traj.positions)))
        report["energy_drift"] = abs(q1.energy - q0.energy)
        report["angular_momentum_drift"] = float(np.max(np.abs(q1.angular_momentum - q0.angular_momentum)))
    _io.dump(report, _out(args, "residual.json"))
    print(f"newton residual = {res:.3e}")
    if not report["passed"]:
        raise NumericalFailure("Newton residual above threshold")


def cmd_pushforward(args):
    rng = _rng(args)
    if args.complex_orbit:
        a, b = _floats(args.complex_orbit)
        meas = complex_orbit_pushforward((a, b), args.n, bins=args.bins, rng=rng,
                                         workers=args.threads)
        ks = ks_uniform(meas.samples, b, a)
        report = {"mode": "complex-orbit", "spectrum": [a, b], "n_samples": args.n,
                  "ks_uniform": ks, "mean": float(np.mean(meas.samples)),
                  "passed": bool(ks <= 0.02)}
    elif args.branching:
        p, q = _ints(args.branching)
        report, meas = pushforward_vs_branching((p, q), args.level, args.n, rng=rng,
                                                workers=args.threads, bins=args.bins,
                                                return_measure=True)
        report["mode"] = "branching"
    elif args.real:
        if not args.x:
            raise UsageError("--real needs --x")
        X = _parse_x(args.x)
        j = standard_complex_structure(X.shape[0] // 2)
        meas = pushforward_histogram(X, j, args.n, bins=args.bins, rng=rng, workers=args.threads)
        report = {"mode": "real", "n_samples": args.n, "total_mass": meas.total,
                  "passed": abs(meas.total - 1.0) <= 1e-12}
    else:
        raise UsageError("give one of --complex-orbit, --branching, --real")
    meas.write_csv(_out(args, "histogram.csv"))
    _io.dump(report, _out(args, "report.json"))
    print(json.dumps({k: v for k, v in report.items() if k != "mode"}))
    if not report["passed"]:
        raise NumericalFailure("pushforward check failed")


def cmd_spherical(args):
    p = SpectralParam(args.lam)
    ns = _ints(args.n)
    rows = limit_check(p, args.x, ns, n_nodes=args.nodes)
    write_limit_csv(rows, _out(args, "limit.csv"))
    errs = [r.error for r in rows]
    monotone = all(b <= a + 1e-10 for a, b in zip(errs, errs[1:]))
    errs = [e if np.isfinite(e) else None for e in errs]
    X = np.array([[args.x, 0.0], [0.0, -args.x]])
    report = {"lambda": args.lam, "x": args.x, "errors": errs, "monotone": monotone,
              "stable": all(r.stable for r in rows),
              "iwasawa_derivative": infinitesimal_iwasawa(X)}
    _io.dump(report, _out(args, "report.json"))
    for r in rows:
        print(f"n={r.n:4d}  e_n={r.error:.3e}")
    if not report["stable"]:
        raise NumericalFailure("quadrature unstable for some n")


def build_parser():
    parser = argparse.ArgumentParser(prog="centralspec", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".")
    common.add_argument("--run-config", help="JSON file of option values")
    common.add_argument("--threads", type=int,
                        default=int(os.environ.get("CENTRALSPEC_THREADS", "1")))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("central", parents=[common], help="generate or solve a central configuration")
    p.add_argument("--preset", choices=["lagrange", "euler", "polygon", "cross_polytope",
                                        "hypercube", "icosahedron", "cuboctahedron"])
    p.add_argument("--initial", help="JSON with masses and positions for the solver")
    p.add_argument("--masses")
    p.add_argument("--ordering", default="0,1,2")
    p.add_argument("--n", type=int, help="polygon size")
    p.add_argument("--dim", type=int, help="dimension for cross_polytope / hypercube")
    p.add_argument("--m", type=float, default=1.0)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--normalize", action="store_true", help="rescale to lambda = 1")
    p.add_argument("--lift", type=int, help="embed into this dimension")
    p.add_argument("--threshold", type=float, default=1e-9)
    p.set_defaults(func=cmd_central)

    p = sub.add_parser("spectra", parents=[common], help="sample real spectra, hull, audit")
    p.add_argument("--x", help="diag:v1,v2,... or JSON matrix file")
    p.add_argument("--central", help="central configuration JSON")
    p.add_argument("--lift", type=int)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--hull", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--support", action="store_true")
    p.add_argument("--audit", type=int, default=0, help="number of midpoint tests")
    p.add_argument("--pilot", type=int, default=20000)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("motion", parents=[common], help="closed-form motions and Newton residual")
    p.add_argument("--kind", choices=["rigid", "homographic", "homothetic"], required=True)
    p.add_argument("--config", help="central configuration JSON")
    p.add_argument("--omega", type=float)
    p.add_argument("--t", type=float, help="final time (default: one period)")
    p.add_argument("--steps", type=int, default=2048)
    p.add_argument("--e", type=float, default=0.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--j", choices=["random", "standard"], default="random")
    p.add_argument("--max-residual", type=float, default=1e-7)
    p.add_argument("--crosscheck", action="store_true", help="also integrate numerically")
    p.set_defaults(func=cmd_motion)

    p = sub.add_parser("pushforward", parents=[common], help="pushforward measures")
    p.add_argument("--complex-orbit")
    p.add_argument("--branching")
    p.add_argument("--level", type=int, default=200)
    p.add_argument("--real", action="store_true")
    p.add_argument("--x")
    p.add_argument("--n", type=int, default=100000)
    p.add_argument("--bins", type=int)
    p.set_defaults(func=cmd_pushforward)

    p = sub.add_parser("spherical", parents=[common], help="spherical-function limit table")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--n", default="2,4,8,16,32,64")
    p.add_argument("--nodes", type=int, default=64)
    p.set_defaults(func=cmd_spherical)
    return parser, sub


def _load_run_config(parser, sub, argv):
    # pre-parse just enough to find the command and the config file
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--run-config")
    known, _ = pre.parse_known_args(argv)
    if not known.run_config or known.command not in sub.choices:
        return
    try:
        with open(known.run_config) as fh:
            conf = json.load(fh)
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read run config: {exc}")
    if not isinstance(conf, dict):
        parser.error("run config must be a JSON object")
    conf = {k.lstrip("-").replace("-", "_"): v for k, v in conf.items()}
    if "lambda" in conf:
        conf["lam"] = conf.pop("lambda")
    sp = sub.choices[known.command]
    actions = {a.dest: a for a in sp._actions}
    unknown = set(conf) - set(actions) - {"help"}
    if unknown:
        parser.error(f"unknown keys in run config: {sorted(unknown)}")
    for k in conf:
        actions[k].required = False
    sp.set_defaults(**conf)


def main(argv=None):
    parser, sub = build_parser()
    argv = sys.argv[1:] if argv is None else [str(a) for a in argv]
    _load_run_config(parser, sub, argv)
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (NumericalFailure, CertificationError, NonConvergenceError,
            SingularConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
