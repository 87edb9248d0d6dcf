"""Command line interface.

Subcommands: approximate, verify, net, measure, sweep, santalo,
standardize, plot.  Bodies are JSON BodySpec documents (a file path or an
inline JSON string).  Set POLYFINE_LOG=debug|info|warning for logging and
POLYFINE_BACKEND=numba|numpy to pick the kernel backend.

Exit codes: 0 success, 2 certification miss, 4 invalid configuration,
3 any other stage failure.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import capmeasure, cover, net as netmod, pipeline, position, smooth
from .bodies import InvalidBodyError, make_body, sphere_points
from .plot2d import plot2d


def _setup_logging():
    level = os.environ.get("POLYFINE_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_spec(arg):
    if arg.strip().startswith("{"):
        return json.loads(arg)
    with open(arg) as f:
        return json.load(f)


def _emit(obj, out_path=None):
    text = pipeline.dumps_canonical(obj)
    if out_path:
        with open(out_path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _config_from_args(args):
    return pipeline.PipelineConfig(
        body=_load_spec(args.body),
        eps=args.eps,
        seed=args.seed,
        delta_override=args.delta,
        n_dirs_verify=args.dirs,
        theta_mode="adaptive" if args.adaptive else (
            "fixed" if args.theta is not None else "estimated"),
        theta_value=args.theta,
        rho_mode=args.rho_mode,
        workers=args.workers,
        out_dir=args.out,
    )


def cmd_approximate(args):
    cfg = _config_from_args(args)
    cfg.validate()
    res = pipeline.approximate(cfg)
    payload = res.to_json_dict(include_timings=False)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _emit(payload, os.path.join(args.out, "result.json"))
        _emit({"timings": res.timings}, os.path.join(args.out, "timings.json"))
    else:
        _emit(payload)
    print(f"n_vertices={res.n_vertices} eps_achieved={res.eps_achieved:.6g} "
          f"target={res.eps_target} net={res.net_size} "
          f"success={res.success}", file=sys.stderr)
    return 0 if res.success else pipeline.EXIT_CERT_MISS


def cmd_verify(args):
    body = make_body(_load_spec(args.body))
    with open(args.vertices) as f:
        payload = json.load(f)
    Y = np.asarray(payload["vertices"] if isinstance(payload, dict) else payload,
                   dtype=float)
    rng = np.random.default_rng(args.seed)
    cert = cover.achieved_epsilon(body, Y, args.dirs, rng, eps_target=args.eps)
    _emit({"eps_target": cert.eps_target, "eps_achieved": cert.eps_achieved,
           "n_directions": cert.n_directions,
           "worst_direction": cert.worst_direction.tolist(),
           "max_gauge_violation": cert.max_gauge_violation,
           "ok": cert.ok}, args.out)
    return 0 if cert.ok else pipeline.EXIT_CERT_MISS


def cmd_net(args):
    body = make_body(_load_spec(args.body))
    rng = np.random.default_rng(args.seed)
    std = position.standardize(body, rng)
    body_s = smooth.smooth_body(std.body, smooth.SmoothParams(body.dim, args.delta))
    stop = (0, args.stop_streak) if args.stop_streak else None
    built = netmod.build_net(body_s, args.rho, rng, stop_streak=stop)
    cov = netmod.coverage_radius_check(built, body_s,
                                       min(100 * built.size, 1_000_000), rng)
    bound = netmod.net_cardinality_bound(body.dim, args.rho)
    _emit({"rho": args.rho, "size": built.size, "cardinality_bound": bound,
           "within_bound": built.size <= bound, "coverage_radius": cov,
           "min_separation": built.min_separation(),
           "rejection_streak": built.rejection_streak,
           "points": built.x.tolist(), "normals": built.nu.tolist()}, args.out)
    return 0


def cmd_measure(args):
    body = make_body(_load_spec(args.body))
    rng = np.random.default_rng(args.seed)
    if args.smooth:
        std = position.standardize(body, rng)
        body = smooth.smooth_body(std.body, smooth.SmoothParams(body.dim))
    sampler = capmeasure.CapSampler(body)
    AX, ANU = body.boundary_pairs_mixed(sphere_points(rng, args.apexes, body.dim))
    eps_list = [float(e) for e in args.eps.split(",")]
    est, se = capmeasure.cap_mass_table(sampler, (AX, ANU), eps_list,
                                        args.samples, rng)
    lines = ["eps,apex_id,estimate,std_error"]
    for k, eps in enumerate(eps_list):
        for a in range(len(AX)):
            lines.append(f"{eps},{a},{est[k, a]:.6g},{se[k, a]:.6g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    scale = [float(np.min(est[k] / np.sqrt(e))) for k, e in enumerate(eps_list)]
    print("min mu/sqrt(eps) per eps: " +
          ", ".join(f"{e}:{s:.4g}" for e, s in zip(eps_list, scale)),
          file=sys.stderr)
    return 0


def cmd_sweep(args):
    bodies = []
    for spec_arg in args.body:
        spec = _load_spec(spec_arg)
        bodies.append((spec.get("name") or spec["kind"], spec))
    eps_list = [float(e) for e in args.eps.split(",")]
    cfg = pipeline.PipelineConfig(body=bodies[0][1], eps=eps_list[0],
                                  seed=args.seed, rho_mode=args.rho_mode,
                                  workers=args.workers)
    res = pipeline.sweep(cfg, eps_list, bodies, args.trials)
    csv_text = res.to_csv()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "sweep.csv"), "w") as f:
            f.write(csv_text)
        _emit({"slopes": res.slopes, "failures": res.failures},
              os.path.join(args.out, "slopes.json"))
    else:
        sys.stdout.write(csv_text)
    print(f"slopes: {res.slopes}", file=sys.stderr)
    return 0 if not res.failures else pipeline.EXIT_STAGE_FAILURE


def cmd_santalo(args):
    rng = np.random.default_rng(args.seed)
    out = {}
    for spec_arg in args.body:
        spec = _load_spec(spec_arg)
        name = spec.get("name") or spec["kind"]
        out[name] = pipeline.santalo_product(spec, args.samples, rng)
    _emit(out, args.out)
    return 0


def cmd_standardize(args):
    body = make_body(_load_spec(args.body))
    rng = np.random.default_rng(args.seed)
    std = position.standardize(body, rng)
    _emit({"matrix": std.matrix.tolist(),
           "translation": std.translation.tolist(),
           "inner_radius_check": std.inner_radius_check,
           "outer_radius_check": std.outer_radius_check,
           "center_se": std.center_se.tolist()}, args.out)
    return 0


def cmd_plot(args):
    body = make_body(_load_spec(args.body))
    with open(args.result) as f:
        payload = json.load(f)
    Y = np.asarray(payload["vertices"], dtype=float)
    eps = float(payload.get("eps_target", args.eps or 0.1))
    plot2d(body, Y, eps, args.out)
    return 0


def _add_body_arg(p, multiple=False):
    if multiple:
        p.add_argument("--body", action="append", required=True,
                       help="BodySpec JSON file or inline JSON (repeatable)")
    else:
        p.add_argument("--body", required=True,
                       help="BodySpec JSON file or inline JSON")


def build_parser():
    ap = argparse.ArgumentParser(prog="polyfine", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approximate", help="run the full construction")
    _add_body_arg(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dirs", type=int, default=10000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--adaptive", action="store_true",
                   help="doubling cover instead of the estimated-theta one")
    p.add_argument("--theta", type=float, default=None, help="fixed theta")
    p.add_argument("--rho-mode", choices=("auto", "formula", "adaptive"),
                   default="auto", dest="rho_mode")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--rolling-radius", type=float, default=None,
                   dest="rolling_radius",
                   help="alternative to --delta: sets delta = 1/R")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("verify", help="certify a vertex file against a body")
    _add_body_arg(p)
    p.add_argument("--vertices", required=True, help="JSON with a vertices array")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--dirs", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("net", help="build a separated net on the smoothed body")
    _add_body_arg(p)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--stop-streak", type=int, default=None, dest="stop_streak")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_net)

    p = sub.add_parser("measure", help="cap-mass estimates and scaling table")
    _add_body_arg(p)
    p.add_argument("--eps", default="0.2,0.1,0.05,0.025")
    p.add_argument("--apexes", type=int, default=50)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("sweep", help="vertex-count scaling sweep")
    _add_body_arg(p, multiple=True)
    p.add_argument("--eps", required=True, help="comma separated values")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--rho-mode", choices=("auto", "formula", "adaptive"),
                   default="auto", dest="rho_mode")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("santalo", help="Monte Carlo vol(K) vol(K*) products")
    _add_body_arg(p, multiple=True)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_santalo)

    p = sub.add_parser("standardize", help="standard-position map and checks")
    _add_body_arg(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_standardize)

    p = sub.add_parser("plot", help="SVG of a d=2 result")
    _add_body_arg(p)
    p.add_argument("--result", required=True, help="result.json from approximate")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None):
    _setup_logging()
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "rolling_radius", None):
        if args.delta is None:
            args.delta = 1.0 / args.rolling_radius
    try:
        return args.func(args)
    except (pipeline.ConfigError, InvalidBodyError, json.JSONDecodeError,
            ValueError) as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return pipeline.EXIT_INVALID_CONFIG
    except FileNotFoundError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return pipeline.EXIT_INVALID_CONFIG
    except pipeline.StageError as e:
        print(f"stage failure: {e}", file=sys.stderr)
        return pipeline.EXIT_STAGE_FAILURE
    except (position.StandardizationError, capmeasure.SamplingError,
            cover.CertificateError, RuntimeError) as e:
        print(f"stage failure: {e}", file=sys.stderr)
        return pipeline.EXIT_STAGE_FAILURE


if __name__ == "__main__":
    sys.exit(main())
