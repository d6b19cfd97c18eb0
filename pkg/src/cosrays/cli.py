"""Command-line entry point: ``cosrays <subcommand> [flags]``.

Results go to stdout as JSON (CSV for ``trace-ray``) or to ``--out``.
Every flag can also come from ``--config file.json``; explicit flags win.
Exit status: 0 success, 1 domain error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import classify as cl
from .cosine_map import (
    MapParams,
    NotPreperiodic,
    compute_postsingular,
    fixed_value_relation,
    sinh_family_params,
    solve_fixed_value_family,
)
from .dimension import escape_fraction, escaping_set_dimension, ray_family_dimension
from .partition import build_partition, itinerary_of_address, itinerary_of_point
from .rays import TraceConfig, landing_point, trace_ray
from .render import RenderJob, render_escape, write_ppm
from .symbolic import AddressSyntaxError, parse_address

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def _complex(text) -> complex:
    if isinstance(text, (list, tuple)):
        return complex(*text)
    try:
        re_, im = str(text).split(",")
        return complex(float(re_), float(im))
    except ValueError:
        raise UsageError(f"expected 're,im', got {text!r}") from None


def _window(text) -> tuple[complex, complex]:
    if isinstance(text, (list, tuple)):
        vals = [float(x) for x in text]
    else:
        try:
            vals = [float(x) for x in str(text).split(",")]
        except ValueError:
            raise UsageError(f"bad window {text!r}") from None
    if len(vals) != 4:
        raise UsageError("window is 'xmin,xmax,ymin,ymax'")
    x0, x1, y0, y1 = vals
    return complex(x0, y0), complex(x1, y1)


def _t_range(text) -> tuple[float, float, int]:
    try:
        lo, hi, n = str(text).split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise UsageError(f"--t expects 'tmin:tmax:n', got {text!r}") from None


def _params(args) -> MapParams:
    if args.params:
        with open(args.params) as fh:
            return MapParams.from_json(json.load(fh))
    if args.a is not None or args.b is not None:
        if args.a is None or args.b is None:
            raise UsageError("--a and --b go together")
        return MapParams(_complex(args.a), _complex(args.b))
    if args.family == "sinh":
        return sinh_family_params(args.k)
    if args.family == "fixed-value":
        return solve_fixed_value_family(args.k)
    raise UsageError("choose --family, --a/--b, or --params")


def _address(text):
    if not text:
        raise UsageError("--address is required")
    try:
        return parse_address(text)
    except AddressSyntaxError as err:
        raise UsageError(str(err)) from None


def _emit(args, obj) -> None:
    obj = dict(obj, version=SCHEMA_VERSION)
    text = json.dumps(obj, indent=2)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cz(z: complex) -> list[float]:
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_find_params(args):
    if args.fixed_value_family:
        seed = _complex(args.seed) if args.seed else None
        p = solve_fixed_value_family(args.k, seed)
        residual = abs(fixed_value_relation(p.a, args.k))
        family = "fixed-value"
    else:
        p = sinh_family_params(args.k)
        residual = 0.0
        family = "sinh"
    out = {"family": family, "k": args.k, "params": p.to_json(), "residual": residual,
           "critical_values": [_cz(p.v), _cz(p.v_prime)]}
    try:
        post = compute_postsingular(p)
        out["postsingular"] = [_cz(z) for z in post.points]
        out["multipliers"] = [_cz(m) for m in post.multipliers]
    except NotPreperiodic as err:
        out["postsingular_error"] = str(err)
    _emit(args, out)


def cmd_trace_ray(args):
    p = _params(args)
    s = _address(args.address)
    t_min, t_max, n = _t_range(args.t)
    path = trace_ray(p, s, t_min, t_max, n, TraceConfig(T_cap=args.t_cap))
    text = path.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_land(args):
    p = _params(args)
    s = _address(args.address)
    res = landing_point(p, s, TraceConfig(T_cap=args.t_cap))
    _emit(args, {"address": args.address, "landing": _cz(res.z), "converged": res.converged,
                 "estimate_gap": res.estimate_gap, "depth": res.depth})


def cmd_itinerary(args):
    p = _params(args)
    part = build_partition(p, args.policy)
    if args.point is not None:
        it = itinerary_of_point(part, p, _complex(args.point), args.length)
        src = {"point": _cz(_complex(args.point))}
    else:
        it = itinerary_of_address(part, p, _address(args.address), args.length)
        src = {"address": args.address}
    _emit(args, dict(src, itinerary=str(it), twice=list(it.twice),
                     escaped_beyond_range=it.escaped_beyond_range))


def cmd_classify(args):
    p = _params(args)
    if args.point is None:
        raise UsageError("--point is required")
    part = build_partition(p, args.policy)
    c = cl.classify_point(p, part, _complex(args.point), cl.Budget(iter=args.budget))
    _emit(args, dict(c.to_json(), point=_cz(_complex(args.point))))


def cmd_boxdim(args):
    p = _params(args)
    if args.kind == "rays":
        win = _window(args.window or "-10,10,-10,10")
        rep = ray_family_dimension(p, args.M, args.tail_depth, args.t_floor, win)
        _emit(args, rep.to_json())
    else:
        win = _window(args.window or "-5,5,-5,5")
        rep, frac = escaping_set_dimension(p, win, args.resolution, args.budget)
        _emit(args, rep.to_json())


def cmd_escape_stats(args):
    p = _params(args)
    win = _window(args.window or "-10,10,-10,10")
    st = escape_fraction(p, win, args.samples, args.budget, args.seed)
    _emit(args, st.to_json())


def cmd_render(args):
    p = _params(args)
    if not args.out:
        raise UsageError("render needs --out file.ppm")
    try:
        w, h = (int(x) for x in str(args.size).lower().split("x"))
    except ValueError:
        raise UsageError(f"--size expects WxH, got {args.size!r}") from None
    overlays = tuple(args.overlay or ())
    job = RenderJob(p, _window(args.window or "-5,5,-5,5"), (w, h), args.budget, overlays)
    write_ppm(args.out, render_escape(job))
    print(json.dumps({"written": args.out, "width": w, "height": h, "version": SCHEMA_VERSION}))


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(sp):
    sp.add_argument("--config", help="JSON file with flag values and a 'version' field")
    sp.add_argument("--family", choices=["sinh", "fixed-value"], default="sinh")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--a", help="coefficient a as 're,im'")
    sp.add_argument("--b", help="coefficient b as 're,im'")
    sp.add_argument("--params", help='JSON file {"a": [re, im], "b": [re, im]}')
    sp.add_argument("--out")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    ap = argparse.ArgumentParser(prog="cosrays", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    subs = {}

    sp = sub.add_parser("find-params", help="solve for a postsingularly preperiodic map")
    _common(sp)
    sp.add_argument("--fixed-value-family", action="store_true")
    sp.add_argument("--seed", help="Newton seed 're,im'")
    sp.set_defaults(func=cmd_find_params)
    subs["find-params"] = sp

    sp = sub.add_parser("trace-ray", help="sample a dynamic ray to CSV")
    _common(sp)
    sp.add_argument("--address")
    sp.add_argument("--t", default="0.5:10:64", help="tmin:tmax:n")
    sp.add_argument("--t-cap", type=float, default=500.0)
    sp.set_defaults(func=cmd_trace_ray)
    subs["trace-ray"] = sp

    sp = sub.add_parser("land", help="landing point of a bounded address")
    _common(sp)
    sp.add_argument("--address")
    sp.add_argument("--t-cap", type=float, default=500.0)
    sp.set_defaults(func=cmd_land)
    subs["land"] = sp

    sp = sub.add_parser("itinerary", help="itinerary of a point or a ray")
    _common(sp)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--point")
    g.add_argument("--address")
    sp.add_argument("--length", type=int, default=10)
    sp.add_argument("--policy", choices=["right", "left"], default="right")
    sp.set_defaults(func=cmd_itinerary)
    subs["itinerary"] = sp

    sp = sub.add_parser("classify", help="ray point, landing point, or undecided")
    _common(sp)
    sp.add_argument("--point")
    sp.add_argument("--budget", type=int, default=60)
    sp.add_argument("--policy", choices=["right", "left"], default="right")
    sp.set_defaults(func=cmd_classify)
    subs["classify"] = sp

    sp = sub.add_parser("boxdim", help="box-counting dimension experiments")
    _common(sp)
    sp.add_argument("--kind", choices=["rays", "escaping"], default="rays")
    sp.add_argument("--M", type=int, default=1)
    sp.add_argument("--tail-depth", type=int, default=3)
    sp.add_argument("--t-floor", type=float, default=1.0)
    sp.add_argument("--window", help="xmin,xmax,ymin,ymax")
    sp.add_argument("--resolution", type=int, default=512)
    sp.add_argument("--budget", type=int, default=100)
    sp.set_defaults(func=cmd_boxdim)
    subs["boxdim"] = sp

    sp = sub.add_parser("escape-stats", help="Monte-Carlo escape fraction")
    _common(sp)
    sp.add_argument("--window", help="xmin,xmax,ymin,ymax")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--budget", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_escape_stats)
    subs["escape-stats"] = sp

    sp = sub.add_parser("render", help="escape-time PPM image")
    _common(sp)
    sp.add_argument("--window", help="xmin,xmax,ymin,ymax")
    sp.add_argument("--size", default="512x512")
    sp.add_argument("--budget", type=int, default=50)
    sp.add_argument("--overlay", action="append",
                    help="partition | postsingular | ray:<address>; repeatable")
    sp.set_defaults(func=cmd_render)
    subs["render"] = sp
    return ap, subs


def _load_config(argv: list[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    try:
        with open(known.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise UsageError(f"cannot read config: {err}") from None
    if cfg.get("version") != SCHEMA_VERSION:
        raise UsageError(f"config version must be {SCHEMA_VERSION}")
    return {k.replace("-", "_"): v for k, v in cfg.items() if k not in ("version", "command")}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap, subs = build_parser()
    try:
        config = _load_config(argv)
    except UsageError as err:
        ap.print_usage(sys.stderr)
        print(f"cosrays: error: {err}", file=sys.stderr)
        return 2
    if config:
        for sp in subs.values():
            known = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in config.items() if k in known})
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as err:
        subs[args.command].print_usage(sys.stderr)
        print(f"cosrays {args.command}: error: {err}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError) as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
