"""Command line front door: scene computation, grid sweeps, the
verification suite, and conformal covariance checks.

Exit codes: 0 success, 1 validation failure (bad arguments, bad scene,
failed covariance check), 2 solver or truncation failure. Errors go to
stderr as one line "error[CODE]: message". All numbers are printed with
15 significant digits and reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .boson import Scene, correlate
from .errors import (
    IsingBosonError,
    NotCircleMap,
    QuadratureNotConverged,
    SceneError,
    SolverNotConverged,
    StepUnderflow,
    TruncationExceeded,
    TruncationRadiusExceeded,
)
from .geometry import (
    WIRED,
    Circle,
    CircularDomain,
    HalfPlaneDomain,
    Insertion,
    validate,
)
from .ising import Mobius, as_mobius, conformal_transport, \
    ising_correlation_squared
from .scenes import SceneSpec, load_scene
from .verify import CHECKS, run_checks

_TRUNCATION_ERRORS = (
    SolverNotConverged,
    QuadratureNotConverged,
    TruncationExceeded,
    TruncationRadiusExceeded,
    StepUnderflow,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _g(x):
    x = float(x)
    if x == 0.0:  # canonical zero, never "-0"
        x = 0.0
    return "%.15g" % x


def _point(text):
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 're,im', got %r" % text)
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError("expected 're,im', got %r" % text)


def _tol_flags(sub):
    sub.add_argument("--tol-boundary", type=float, default=None,
                     help="harmonic solver tolerance override")
    sub.add_argument("--tol-lattice", type=float, default=None,
                     help="winding-sum tail mass override")
    sub.add_argument("--tol-theta", type=float, default=None,
                     help="theta series tolerance override")


def _tols(args):
    return {"boundary": args.tol_boundary, "lattice": args.tol_lattice,
            "theta": args.tol_theta}


def _evaluate(spec, insertions=None):
    ins = spec.insertions if insertions is None else insertions
    if spec.mode == "ising":
        return ising_correlation_squared(spec.scene, ins)
    return correlate(spec.scene, list(ins))


def _max_workers(n_points):
    n = min(8, os.cpu_count() or 1)
    cap = os.environ.get("ISING_BOSON_THREADS")
    if cap is not None:
        try:
            cap = int(cap)
        except ValueError:
            raise _UsageError("ISING_BOSON_THREADS must be an integer")
        if cap < 1:
            raise _UsageError("ISING_BOSON_THREADS must be >= 1")
        n = min(n, cap)
    return max(1, min(n, n_points))


def _cmd_compute(args):
    spec = load_scene(args.scene, _tols(args))
    res = _evaluate(spec)
    v = complex(res.value)
    err = res.provenance.get("err_est", 0.0)
    print("%s %s %s" % (_g(v.real), _g(v.imag), _g(err)))
    diag = res.provenance.get("diagnostic")
    if diag:
        print("diagnostic: %s" % diag)
    return 0


def _cmd_sweep(args):
    spec = load_scene(args.scene, _tols(args))
    index = args.index if args.index is not None else len(spec.insertions) - 1
    if not 0 <= index < len(spec.insertions):
        raise _UsageError("--index out of range (scene has %d insertions)"
                          % len(spec.insertions))
    if args.steps < 1:
        raise _UsageError("--steps must be >= 1")
    ts = [0.0] if args.steps == 1 else \
        [i / (args.steps - 1) for i in range(args.steps)]
    pts = [args.start + t * (args.stop - args.start) for t in ts]

    def one(z):
        ins = list(spec.insertions)
        ins[index] = Insertion(location=z, op=ins[index].op)
        res = _evaluate(spec, tuple(ins))
        v = complex(res.value)
        return z, v, res.provenance.get("err_est", 0.0)

    workers = _max_workers(len(pts) - 1)
    rows = [one(pts[0])]  # serial first point warms the solver caches
    if len(pts) > 1:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                rows.extend(ex.map(one, pts[1:]))
        else:
            rows.extend(one(z) for z in pts[1:])
    lines = ["re,im,value_re,value_im,err_est"]
    for z, v, err in rows:
        lines.append(",".join(
            (_g(z.real), _g(z.imag), _g(v.real), _g(v.imag), _g(err))))
    with open(args.output, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def _cmd_verify(args):
    if args.filter is not None:
        names = [n for n in CHECKS if args.filter in n]
        if not names:
            raise _UsageError("no checks match filter %r" % args.filter)
    else:
        names = None
    rows = run_checks(names, theta_tol=args.tol_theta)
    print("name,residual,tolerance,comparison,status")
    for name, resid, tol, op, ok in rows:
        print("%s,%s,%s,%s,%s"
              % (name, _g(resid), _g(tol), op, "pass" if ok else "fail"))
    return 0 if all(r[4] for r in rows) else 1


def _apply_map(spec, map_spec):
    """Image scene of a supported conformal map, plus the map itself."""
    dom = spec.scene.domain
    if map_spec == "cayley":
        unit_disk = (isinstance(dom, CircularDomain) and not dom.holes
                     and abs(dom.outer.center) < 1e-12
                     and abs(dom.outer.radius - 1.0) < 1e-12)
        if not unit_disk:
            raise NotCircleMap("cayley map needs the unit disk")
        if any(a.condition != WIRED for a in spec.scene.bc.arcs):
            raise NotCircleMap("cayley map is supported for all-wired "
                               "boundaries only")
        m = Mobius(1j, 1j, -1.0 + 0j, 1.0 + 0j)
        image_domain, image_bc = HalfPlaneDomain(), None
    elif map_spec.startswith("scale:"):
        try:
            r = float(map_spec.split(":", 1)[1])
        except ValueError:
            raise NotCircleMap("bad scale factor in %r" % map_spec)
        m = as_mobius(r)
        if isinstance(dom, HalfPlaneDomain):
            image_domain, image_bc = dom, None
        else:
            image_domain = CircularDomain(
                outer=Circle(dom.outer.center * r, dom.outer.radius * r),
                holes=tuple(Circle(h.center * r, h.radius * r)
                            for h in dom.holes))
            image_bc = spec.scene.bc  # angles are preserved by scaling
    else:
        raise NotCircleMap("unsupported map spec %r (use scale:R or cayley)"
                           % map_spec)
    ins = tuple(Insertion(location=m(complex(i.location)), op=i.op)
                for i in spec.insertions)
    image_scene = Scene(image_domain, bc=image_bc,
                        tol=spec.tolerances["boundary"],
                        tail_target=spec.tolerances["lattice"])
    diags = validate(image_scene.domain, image_scene.bc, ins)
    if diags:
        raise SceneError(diags)
    image = SceneSpec(scene=image_scene, insertions=ins, mode=spec.mode,
                      tolerances=spec.tolerances)
    return image, m


def _cmd_covariance(args):
    spec = load_scene(args.scene, _tols(args))
    image, m = _apply_map(spec, args.map_spec)
    src = complex(_evaluate(spec).value)
    direct = complex(_evaluate(image).value)
    moved = conformal_transport(src, m, spec.insertions,
                                squared=(spec.mode == "ising"))
    resid = abs(moved - direct) / max(abs(direct), 1e-300)
    print("source = %s %s" % (_g(src.real), _g(src.imag)))
    print("transported = %s %s" % (_g(moved.real), _g(moved.imag)))
    print("direct = %s %s" % (_g(direct.real), _g(direct.imag)))
    print("residual = %s" % _g(resid))
    if resid > args.tol:
        print("error[E_COVARIANCE]: residual %s exceeds tolerance %s"
              % (_g(resid), _g(args.tol)), file=sys.stderr)
        return 1
    return 0


def _build_parser():
    p = _Parser(prog="ising-boson",
                description="Scaling-limit correlations on circular domains")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True

    c = sub.add_parser("compute", help="evaluate one scene")
    c.add_argument("scene", help="scene file (TOML)")
    _tol_flags(c)
    c.set_defaults(fn=_cmd_compute)

    s = sub.add_parser("sweep",
                       help="move one insertion along a segment, write CSV")
    s.add_argument("scene", help="scene file (TOML)")
    s.add_argument("--from", dest="start", type=_point, required=True,
                   metavar="RE,IM", help="segment start")
    s.add_argument("--to", dest="stop", type=_point, required=True,
                   metavar="RE,IM", help="segment end")
    s.add_argument("--steps", type=int, default=21,
                   help="number of grid points (default 21)")
    s.add_argument("--index", type=int, default=None,
                   help="which insertion moves (default: the last)")
    s.add_argument("--output", required=True, help="CSV output path")
    _tol_flags(s)
    s.set_defaults(fn=_cmd_sweep)

    v = sub.add_parser("verify", help="run the self-verification suite")
    v.add_argument("filter", nargs="?", default=None,
                   help="substring filter on check names")
    v.add_argument("--tol-theta", type=float, default=None,
                   help="theta series tolerance override")
    v.set_defaults(fn=_cmd_verify)

    k = sub.add_parser("covariance-check",
                       help="two-route test of conformal covariance")
    k.add_argument("scene", help="scene file (TOML)")
    k.add_argument("--map", dest="map_spec", required=True,
                   help="map spec: scale:R or cayley")
    k.add_argument("--tol", type=float, default=1e-8,
                   help="residual threshold (default 1e-8)")
    _tol_flags(k)
    k.set_defaults(fn=_cmd_covariance)
    return p


def run(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        print("error[E_USAGE]: %s" % exc, file=sys.stderr)
        return 1
    except _TRUNCATION_ERRORS as exc:
        print("error[%s]: %s" % (exc.code, exc), file=sys.stderr)
        return 2
    except IsingBosonError as exc:
        print("error[%s]: %s" % (exc.code, exc), file=sys.stderr)
        return 1
    except (ValueError, TypeError) as exc:
        print("error[E_VALIDATION]: %s" % exc, file=sys.stderr)
        return 1


def main():
    return run()


if __name__ == "__main__":
    raise SystemExit(main())
