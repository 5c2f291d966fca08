"""``mu-kit`` command line interface.

Every invocation emits one JSON document (``inputs``, ``outputs``,
``tolerances``, ``pass``, ``elapsed_ms``) and exits 0 iff ``pass`` holds.
Floats are written with 17 significant digits so reports round-trip.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import certificates as cert
from . import cones, hull, quantum, scenarios, stability
from .measures import FiniteMeasure
from .spaces import SetDescriptor

DEFAULT_SEED = 0x5EED


# --- serialisation -------------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "to_json"):
        return _plain(obj.to_json())
    return obj


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    return s


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with every float printed to 17 significant digits."""
    obj = _plain(obj)

    def enc(o, level):
        pad = "" if indent is None else "\n" + " " * (indent * (level + 1))
        end = "" if indent is None else "\n" + " " * (indent * level)
        sep = ", " if indent is None else ","
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            return _fmt_float(o)
        if isinstance(o, (int, str)):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [pad + json.dumps(k) + ": " + enc(v, level + 1) for k, v in o.items()]
            return "{" + sep.join(items) + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[" + sep.join(pad + enc(v, level + 1) for v in o) + end + "]"
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(obj, 0)


def _json_arg(text):
    """Inline JSON, or ``@path`` to read it from a file."""
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return json.load(fh)
    return json.loads(text)


# --- subcommands ---------------------------------------------------------------


def _report(inputs, outputs, tolerances=None, passed=True, **extra):
    rep = dict(extra)
    rep.update(inputs=inputs, outputs=outputs, tolerances=tolerances or {}, **{"pass": passed})
    return rep


def cmd_hull(args):
    desc = SetDescriptor.from_json(_json_arg(args.set))
    x = np.asarray(_json_arg(args.point), dtype=float)
    if args.fn == "table":
        f = hull.simplex_table_function(desc, _json_arg(args.values), args.curvature)
    else:
        f = hull.builtin_function(args.fn, desc)
    cfg = hull.HullConfig(restarts=args.restarts, seed=args.seed)
    sol = hull.co_f_search(desc, f, x, cfg)
    return _report({"set": desc.to_json(), "fn": args.fn, "point": x, "restarts": args.restarts,
                    "seed": args.seed}, sol.to_json(), {"feas_tol": cfg.feas_tol, "tol": cfg.tol})


def cmd_lsc(args):
    N, p = args.N, args.p
    desc = SetDescriptor.lp_cone(p, N)
    f = hull.builtin_function("one_minus_norm", desc)
    seq = [np.concatenate([np.full(k, 1.0 / k), np.zeros(N - k)]) for k in range(1, N + 1)]
    rep = hull.lsc_probe(desc, f, seq, np.zeros(N),
                         hull.HullConfig(restarts=args.restarts, seed=args.seed))
    outputs = {"gap": rep.gap, "limit_value": rep.limit_value, "tail_values": rep.tail_values,
               "tail_start": rep.tail_start}
    passed = True
    tols = {}
    if args.expect_gap is not None:
        tols["gap"] = args.tol
        passed = abs(rep.gap - args.expect_gap) <= args.tol
    return _report({"p": p, "N": N, "restarts": args.restarts, "seed": args.seed}, outputs,
                   tols, passed)


def _cube_sequence(rule, dim):
    i = np.arange(1, dim + 1, dtype=float)
    return {"inv-sqrt": 1 / np.sqrt(i), "geometric": 2.0 ** -i, "ones": np.ones(dim),
            "inv": 1 / i}[rule]


def cmd_mucert(args):
    if args.action == "certify":
        x = np.asarray(_json_arg(args.x), dtype=float)
        mu = FiniteMeasure.from_json(_json_arg(args.mu))
        h = (cert.increasing_weights(x.size) if args.h == "increasing"
             else cert.AffineFunctional(np.asarray(_json_arg(args.h), dtype=float)))
        chk = cert.tail_certificate_check(h, x, mu, args.eps)
        out = {"verdict": "Pass" if chk.passed else "Fail", "outside_mass": chk.outside_mass,
               "threshold": chk.threshold,
               "witness": None if chk.witness is None else chk.witness.to_json()}
        return _report({"x": x, "mu": mu.to_json(), "h": args.h, "eps": args.eps}, out,
                       {"eps": args.eps}, chk.passed)
    if args.action == "refute-deltap":
        w = cert.delta_p_refute(args.p, r=args.r, eps=args.eps, prefix_N=args.prefix)
        ok = w.outside_mass == 1.0 and w.details["power_sum"] <= 1 / args.r + 1e-12
        return _report({"p": args.p, "r": args.r, "eps": args.eps, "prefix_N": args.prefix},
                       {"verdict": "Refuted", "witness": w.to_json()},
                       {"power_sum": 1e-12}, ok)
    if args.action == "refute-ap":
        w = cert.ap_refute(args.p, args.prefix, args.dim, args.c)
        ok = 1 / 3 < w.outside_mass < 2 / 3
        return _report({"p": args.p, "prefix_N": args.prefix, "dim": args.dim, "c": args.c},
                       {"verdict": "Refuted", "witness": w.to_json()}, {}, ok)
    if args.action == "cube":
        a = (np.asarray(_json_arg(args.a), dtype=float) if args.a
             else _cube_sequence(args.rule, args.dim))
        v = cert.hilbert_cube_classify(a, tol=args.cube_tol)
        return _report({"rule": args.rule, "dim": a.size, "tol": args.cube_tol}, v.to_json(),
                       {"tail": args.cube_tol}, v.verdict != "inconclusive")
    if args.action == "cone":
        return cmd_cone_classify(args)
    raise ValueError(args.action)


def cmd_cone_classify(args):
    G = np.asarray(_json_arg(args.generators), dtype=float)
    v = cones.pointed_cone_classify(G)
    return _report({"generators": G}, v.to_json(), {}, v.verdict != "inconclusive")


def cmd_cone(args):
    G = np.asarray(_json_arg(args.generators), dtype=float)
    off = None if args.offset is None else np.asarray(_json_arg(args.offset), dtype=float)
    rep = cones.polyhedral_equivalence_check(G, off, tol=args.cone_tol, strict=False)
    cls = cones.pointed_cone_classify(G)
    return _report({"generators": G, "offset": off},
                   {"classification": cls.to_json(), "equivalence": rep.to_json()},
                   {"tol": args.cone_tol}, rep.agree)


def cmd_split(args):
    a, b, z = (np.asarray(_json_arg(v), dtype=float) for v in (args.a, args.b, args.z))
    res = stability.delta_p_split(args.p, a, b, z, args.eps)
    ok = bool(np.array_equal(0.5 * (res.x + res.y), z)) and (res.achieved_eps < args.eps
                                                              or res.achieved_eps == 0.0)
    return _report({"p": args.p, "a": a, "b": b, "z": z, "eps": args.eps}, res.to_json(),
                   {"eps": args.eps}, ok)


def cmd_ballbound(args):
    if args.z is not None:
        z = np.asarray(_json_arg(args.z), dtype=float)
    else:
        z = np.zeros(args.dim)
        z[0] = args.norm
    r = stability.ball_bound(z, args.delta)
    out = {"r": r, "norm": float(np.linalg.norm(z))}
    passed = True
    tols = {}
    if args.trials:
        m = stability.ball_bound_adversary(z, args.delta, trials=args.trials, seed=args.seed)
        out["max_outside_mass"] = m
        tols["adversary"] = 1e-7
        passed = m <= 1 - r + 1e-7
    return _report({"z": z, "delta": args.delta, "trials": args.trials, "seed": args.seed},
                   out, tols, passed)


def cmd_probe(args):
    desc = SetDescriptor.from_json(_json_arg(args.set))
    a, b = (np.asarray(_json_arg(v), dtype=float) for v in (args.a, args.b))
    zs = [np.asarray(z, dtype=float) for z in _json_arg(args.z_seq)]
    sched = None if args.eps_schedule is None else _json_arg(args.eps_schedule)
    rep = stability.midpoint_openness_probe(desc, a, b, zs, sched)
    return _report({"set": desc.to_json(), "a": a, "b": b, "z_seq": zs, "eps_schedule": sched},
                   rep.to_json(), {}, all(e["success"] for e in rep.elements))


def cmd_roof(args):
    omega = quantum.DensityMatrix.from_json(_json_arg(args.state), tuple(args.dims))
    cfg = quantum.RoofConfig(m=args.m, restarts=args.restarts, seed=args.seed)
    res = quantum.roof_optimize(omega, args.f, cfg)
    return _report({"state": omega.to_json(), "dims": args.dims, "f": args.f, "m": args.m,
                    "restarts": args.restarts, "seed": args.seed},
                   dict(res.to_json(), reconstruction_error=res.reconstruction_error()),
                   {"reconstruction": 1e-8}, res.reconstruction_error() <= 1e-8)


def _parse_overrides(pairs):
    out = {}
    for item in pairs or []:
        key, _, val = item.partition("=")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def _run_one(job):
    name, overrides, seed, tol, timing = job
    t0 = time.perf_counter()
    rep = scenarios.run_scenario(name, overrides, seed, tol)
    if timing:
        rep["elapsed_ms"] = (time.perf_counter() - t0) * 1e3
    return rep


def cmd_scenario(args):
    if args.action == "list":
        rows = [s.to_json() for s in scenarios.list_scenarios(args.filter)]
        return {"scenarios": rows, "count": len(rows), "pass": True}, _list_table(rows)
    names = args.names or [s.name for s in scenarios.list_scenarios(args.filter)]
    unknown = [n for n in names if n not in scenarios.REGISTRY]
    if unknown:
        raise KeyError(f"unknown scenario(s): {', '.join(unknown)}")
    overrides = _parse_overrides(args.param)
    if overrides and len(names) != 1:
        raise ValueError("--param applies to a single scenario")
    jobs = [(n, overrides, args.seed, args.tol_override, not args.no_timing) for n in names]
    if args.parallel and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            reports = list(pool.map(_run_one, jobs))     # map keeps registry order
    else:
        reports = [_run_one(j) for j in jobs]
    passed = all(r["pass"] for r in reports)
    doc = reports[0] if len(reports) == 1 else {"reports": reports, "pass": passed}
    lines = []
    for r in reports:
        lines.append(f"{'PASS' if r['pass'] else 'FAIL'}  {r['scenario']}")
        for c in r["checks"]:
            if not c["pass"]:
                lines.append(f"      {c['quantity']}: got {c['value']!r}, "
                             f"expected {c['kind']} {c['expected']!r} (tol {c['tol']})")
    return doc, "\n".join(lines)


def _list_table(rows):
    w = max((len(r["name"]) for r in rows), default=4)
    lines = [f"{'name':<{w}}  {'module':<13} expected"]
    lines += [f"{r['name']:<{w}}  {r['module']:<13} {r['expected']}" for r in rows]
    return "\n".join(lines)


# --- parser --------------------------------------------------------------------


def _env_seed():
    val = os.environ.get("MUKIT_SEED")
    return int(val, 0) if val else DEFAULT_SEED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--seed", type=lambda s: int(s, 0), default=S,
                        help="root seed (default 0x5EED or $MUKIT_SEED)")
    common.add_argument("--tol", type=float, default=S, help="comparison tolerance")
    common.add_argument("--json", action="store_true", default=S,
                        help="machine-readable output only")
    common.add_argument("--parallel", action="store_true", default=S,
                        help="run independent scenarios concurrently")
    common.add_argument("--no-timing", action="store_true", default=S,
                        help="omit elapsed_ms so repeated runs are byte-identical")

    p = argparse.ArgumentParser(prog="mu-kit", parents=[common],
                                description="Convex hulls, barycentric decompositions and "
                                            "mu-compactness checks.")
    sub = p.add_subparsers(dest="command", required=True)

    h = sub.add_parser("hull", parents=[common], help="upper-bound co f at a point")
    h.add_argument("--set", required=True, help="SetDescriptor JSON")
    h.add_argument("--fn", required=True, help=f"one of {', '.join(hull.BUILTIN_FUNCTIONS)}, table")
    h.add_argument("--values", help="vertex values for --fn table")
    h.add_argument("--curvature", type=float, default=0.0)
    h.add_argument("--point", required=True)
    h.add_argument("--restarts", type=int, default=16)
    h.set_defaults(func=cmd_hull)

    l = sub.add_parser("lsc", parents=[common], help="lower-semicontinuity gap of 1 - |x|_p")
    l.add_argument("--p", type=float, default=2.0)
    l.add_argument("--N", type=int, default=16)
    l.add_argument("--restarts", type=int, default=4)
    l.add_argument("--expect-gap", type=float)
    l.set_defaults(func=cmd_lsc)

    m = sub.add_parser("mucert", parents=[common], help="certificates and refutations")
    m.add_argument("action", choices=["certify", "refute-deltap", "refute-ap", "cube", "cone"])
    m.add_argument("--x")
    m.add_argument("--mu")
    m.add_argument("--h", default="increasing", help="slope JSON or 'increasing' (h_i = i)")
    m.add_argument("--eps", type=float, default=0.5)
    m.add_argument("--p", type=float, default=2.0)
    m.add_argument("--r", type=int, default=1)
    m.add_argument("--prefix", type=int, default=0)
    m.add_argument("--dim", type=int, default=10_000)
    m.add_argument("--c", type=float)
    m.add_argument("--a", help="cube half-widths JSON")
    m.add_argument("--rule", default="inv-sqrt", choices=["inv-sqrt", "geometric", "ones", "inv"])
    m.add_argument("--cube-tol", type=float, default=1e-6)
    m.add_argument("--generators")
    m.set_defaults(func=cmd_mucert)

    s = sub.add_parser("split", parents=[common], help="split z into a segment of Delta_p")
    s.add_argument("--p", type=float, default=2.0)
    for name in ("a", "b", "z"):
        s.add_argument(f"--{name}", required=True)
    s.add_argument("--eps", type=float, required=True)
    s.set_defaults(func=cmd_split)

    b = sub.add_parser("ballbound", parents=[common], help="ball-measure bound and adversary")
    b.add_argument("--z")
    b.add_argument("--norm", type=float, default=0.9)
    b.add_argument("--dim", type=int, default=3)
    b.add_argument("--delta", type=float, default=0.5)
    b.add_argument("--trials", type=int, default=0)
    b.set_defaults(func=cmd_ballbound)

    o = sub.add_parser("probe-openness", parents=[common], help="midpoint openness probe")
    o.add_argument("--set", required=True)
    o.add_argument("--a", required=True)
    o.add_argument("--b", required=True)
    o.add_argument("--z-seq", required=True)
    o.add_argument("--eps-schedule")
    o.set_defaults(func=cmd_probe)

    c = sub.add_parser("cone", parents=[common], help="pointedness equivalences of offset + cone")
    c.add_argument("--generators", required=True)
    c.add_argument("--offset")
    c.add_argument("--cone-tol", type=float, default=1e-7)
    c.set_defaults(func=cmd_cone)

    r = sub.add_parser("roof", parents=[common], help="convex-roof upper bound")
    r.add_argument("--state", required=True, help="[[[re, im], ...], ...] or @file")
    r.add_argument("--dims", type=int, nargs=2, required=True)
    r.add_argument("--f", default="alpha:2")
    r.add_argument("--m", type=int)
    r.add_argument("--restarts", type=int, default=16)
    r.set_defaults(func=cmd_roof)

    sc = sub.add_parser("scenario", parents=[common], help="registered regression scenarios")
    sc.add_argument("action", choices=["run", "list"])
    sc.add_argument("names", nargs="*")
    sc.add_argument("--filter")
    sc.add_argument("--param", action="append", metavar="KEY=VALUE")
    sc.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.seed = getattr(args, "seed", _env_seed())
    args.tol_override = getattr(args, "tol", None)
    args.tol = 1e-9 if args.tol_override is None else args.tol_override
    for flag in ("json", "parallel", "no_timing"):
        setattr(args, flag, getattr(args, flag, False))
    t0 = time.perf_counter()
    try:
        result = args.func(args)
    except (ValueError, KeyError, RuntimeError) as exc:
        doc = {"error": type(exc).__name__, "message": str(exc), "pass": False}
        print(dumps(doc, None if args.json else 2))
        return 2
    text = None
    if isinstance(result, tuple):
        result, text = result
    if not args.no_timing and args.command != "scenario":
        result["elapsed_ms"] = (time.perf_counter() - t0) * 1e3
    if args.json or text is None:
        print(dumps(result, None if args.json else 2))
    else:
        print(text)
    return 0 if result.get("pass", True) else 1


if __name__ == "__main__":
    sys.exit(main())
