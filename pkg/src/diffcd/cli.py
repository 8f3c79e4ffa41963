"""Command-line interface.

Commands: query (one proximity solve), grad (one derivative computation),
bench (quantile suite), time (timing suite), cloud (witness-cloud dump),
gen-mesh (rough-shape generator).  Exit codes: 0 success, 1 usage error,
2 numerical failure flags (partial outputs still written).
"""

import argparse
import sys

import numpy as np

from . import bench as bench_mod
from . import first as first_mod
from . import meshio, se3
from .errors import DiffcdError, ParseError
from .narrowphase import proximity
from .shapes import Box, Capsule, Ellipsoid, Sphere
from .zeroth import (
    SmoothingConfig,
    export_witness_cloud,
    finite_difference_jacobians,
    smoothed_witness_cloud,
    zeroth_order_jacobians,
)


def parse_shape_spec(text):
    """`sphere:R | ellipsoid:A,B,C | box:X,Y,Z | capsule:H,R | mesh:PATH`"""
    if ":" not in text:
        raise ParseError("shape spec %r lacks ':' (expected kind:params)" % text)
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "mesh":
        return meshio.load_obj(rest)
    try:
        vals = [float(v) for v in rest.split(",")]
    except ValueError:
        raise ParseError("bad number in shape spec %r" % text) from None
    if any(v <= 0 for v in vals):
        what = "radius" if kind == "sphere" else "shape parameters"
        raise ParseError("%s must be positive in %r" % (what, text))
    if kind == "sphere" and len(vals) == 1:
        return Sphere(vals[0])
    if kind == "ellipsoid" and len(vals) == 3:
        return Ellipsoid(np.array(vals))
    if kind == "box" and len(vals) == 3:
        return Box(np.array(vals))
    if kind == "capsule" and len(vals) == 2:
        return Capsule(vals[0], vals[1])
    raise ParseError("unknown shape kind or wrong arity in %r" % text)


def _mat_csv(name, M, out):
    for r in range(M.shape[0]):
        out.write(name + "," + str(r) + "," + ",".join("%.17g" % v for v in M[r]) + "\n")


def _add_pair_args(p):
    p.add_argument("--shape1", required=True)
    p.add_argument("--shape2", required=True)
    p.add_argument("--pose", required=True, help="7 scalars: tx ty tz qx qy qz qw")


def _build_parser():
    ap = argparse.ArgumentParser(prog="diffcd", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    q = sub.add_parser("query", help="one proximity solve")
    _add_pair_args(q)

    g = sub.add_parser("grad", help="one derivative computation")
    _add_pair_args(g)
    g.add_argument(
        "--estimator",
        default="analytic",
        choices=["fd", "zeroth", "analytic", "gaussian", "gumbel"],
    )
    g.add_argument("--samples", type=int, default=None, help="sample count M")
    g.add_argument("--eps", type=float, default=None, help="noise scale / temperature")
    g.add_argument("--nl", type=int, default=1, help="neighbor depth (gumbel)")
    g.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bench", help="quantile benchmark suite")
    b.add_argument("--config", required=True)

    t = sub.add_parser("time", help="derivative timing suite")
    t.add_argument("--config", required=True)

    c = sub.add_parser("cloud", help="dump the perturbed witness cloud as CSV")
    _add_pair_args(c)
    c.add_argument("--samples", type=int, default=25)
    c.add_argument("--eps", type=float, default=1e-2)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", required=True)

    m = sub.add_parser("gen-mesh", help="generate a rough polyhedral ellipsoid OBJ")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--vertices", type=int, default=12)
    m.add_argument("--out", required=True)
    return ap


def _cmd_query(args):
    s1 = parse_shape_spec(args.shape1)
    s2 = parse_shape_spec(args.shape2)
    q = se3.pose_from_text(args.pose)
    res = proximity(s1, s2, q)
    out = sys.stdout
    out.write("signed_distance,%.17g\n" % res.signed_distance)
    out.write("colliding,%d\n" % int(res.colliding))
    out.write("witness1," + ",".join("%.17g" % v for v in res.witness1) + "\n")
    out.write("witness2," + ",".join("%.17g" % v for v in res.witness2) + "\n")
    out.write("witness2_local," + ",".join("%.17g" % v for v in res.witness2_local) + "\n")
    out.write("iterations,%d\n" % res.iterations)
    return 2 if res.flags else 0


def _cmd_grad(args):
    s1 = parse_shape_spec(args.shape1)
    s2 = parse_shape_spec(args.shape2)
    q = se3.pose_from_text(args.pose)
    est = args.estimator
    if est == "fd":
        jac = finite_difference_jacobians(s1, s2, q, args.eps or 1e-6)
    elif est == "zeroth":
        cfg = SmoothingConfig(samples=args.samples or 50, noise=args.eps or 1e-2, seed=args.seed)
        jac = zeroth_order_jacobians(s1, s2, q, cfg)
    else:
        if est == "analytic":
            backend = first_mod.Analytic()
        elif est == "gaussian":
            backend = first_mod.GaussianMC(
                samples=args.samples or 20, noise=args.eps or 1e-3, seed=args.seed
            )
        else:
            backend = first_mod.Gumbel(temperature=args.eps or 1e-4, depth=args.nl)
        jac = first_mod.first_order_jacobians(s1, s2, q, backend)
    out = sys.stdout
    out.write("matrix,row,c0,c1,c2,c3,c4,c5\n")
    _mat_csv("d_w1_dq", jac.d_w1_dq, out)
    _mat_csv("d_w2_dq", jac.d_w2_dq, out)
    _mat_csv("d_sep_dq", jac.d_sep_dq, out)
    return 2 if jac.flags else 0


def _cmd_bench(args):
    bcfg, _ = bench_mod.load_config(args.config)
    table, reports = bench_mod.run_benchmark(bcfg)
    sys.stdout.write(bench_mod.format_quantile_table(table) + "\n")
    return 2 if any(r.flags for r in reports) else 0


def _cmd_time(args):
    _, tcfg = bench_mod.load_config(args.config)
    rows = bench_mod.run_timings(tcfg)
    for r in rows:
        sys.stdout.write(
            "%s colliding=%d median %.3g us (mean %.3g +/- %.3g)\n"
            % (r["estimator"], r["colliding"], r["median_us"], r["mean_us"], r["std_us"])
        )
    return 0


def _cmd_cloud(args):
    s1 = parse_shape_spec(args.shape1)
    s2 = parse_shape_spec(args.shape2)
    q = se3.pose_from_text(args.pose)
    cfg = SmoothingConfig(samples=args.samples, noise=args.eps, seed=args.seed)
    pairs = smoothed_witness_cloud(s1, s2, q, cfg)
    export_witness_cloud(pairs, args.out)
    sys.stdout.write("wrote %d witness pairs to %s\n" % (len(pairs), args.out))
    return 0


def _cmd_gen_mesh(args):
    mesh = bench_mod.generate_polyhedral_ellipsoid(args.seed, args.vertices)
    meshio.save_obj(args.out, mesh.vertices)
    sys.stdout.write("wrote %d vertices to %s\n" % (mesh.vertices.shape[0], args.out))
    return 0


_HANDLERS = {
    "query": _cmd_query,
    "grad": _cmd_grad,
    "bench": _cmd_bench,
    "time": _cmd_time,
    "cloud": _cmd_cloud,
    "gen-mesh": _cmd_gen_mesh,
}


def main(argv=None):
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        return _HANDLERS[args.command](args)
    except (DiffcdError, FileNotFoundError, ValueError) as e:
        sys.stderr.write("error: %s: %s\n" % (type(e).__name__, e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
