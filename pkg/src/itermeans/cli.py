"""Command-line driver.

Subcommands: ``check-mean`` (build a mean candidate and grid-check axioms),
``reproduce`` (canned scenarios with pinned tolerances), ``gauss`` (iterate
a mean-type mapping to its common limit), and ``residual-eq11`` (residual
scans of the composite functional equation, with parameter sweeps).

Exit codes: 0 all requested checks passed, 1 a mathematical check failed
(reports carry witnesses), 2 usage or parse errors. Reports contain no
timestamps, so identical invocations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import invariance as I
from . import means as M
from . import series as S
from .config import DEFAULT_CONFIG, GridSpec
from .errors import ItermeansError, SeriesError
from .expr import parse as parse_expr
from .expr import validate_bijection
from .maps import MonotoneMap
from .scenarios import SCENARIOS

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument plumbing
# --------------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                     help="bind a named parameter (repeatable)")
    sub.add_argument("--grid", default=None, metavar="LO:HI:N[:lin]",
                     help="working grid (log-spaced unless ':lin')")
    sub.add_argument("--tol-series", type=float, default=None)
    sub.add_argument("--tol-inverse", type=float, default=None)
    sub.add_argument("--tol-gauss", type=float, default=None)
    sub.add_argument("--max-terms", type=int, default=None)
    sub.add_argument("--format", choices=["json", "csv", "human"], default="json")
    sub.add_argument("--out", default=None, metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="itermeans",
        description="iterative means, invariance checks, and residual scans",
    )
    subs = p.add_subparsers(dest="command", required=True)

    cm = subs.add_parser("check-mean", help="build a mean candidate and check axioms")
    cm.add_argument("--mean", choices=["arithmetic"], default=None)
    cm.add_argument("--f", dest="f_expr", default=None, metavar="EXPR")
    cm.add_argument("--g", dest="g_expr", default=None, metavar="EXPR")
    cm.add_argument("--h", dest="h_expr", default=None, metavar="EXPR")
    cm.add_argument("--r", dest="r_expr", default=None, metavar="EXPR")
    cm.add_argument("--phi", dest="phi_expr", default=None, metavar="EXPR")
    cm.add_argument("--psi", dest="psi_expr", default=None, metavar="EXPR")
    cm.add_argument("--composite", action="store_true",
                    help="check the candidate built from (f o g, g o h)")
    cm.add_argument("--op", choices=["add", "mul"], default="add")
    cm.add_argument("--axes", default="reflexive,internal,strict",
                    help="comma list of axioms that must pass for exit 0")
    cm.add_argument("--at", default=None, metavar="X,Y",
                    help="also evaluate the candidate at a single point")
    _add_common(cm)

    rp = subs.add_parser("reproduce", help="run a canned scenario")
    rp.add_argument("scenario", choices=sorted(SCENARIOS))
    _add_common(rp)

    ga = subs.add_parser("gauss", help="iterate a mean-type mapping")
    ga.add_argument("--g1", default=None, metavar="EXPR",
                    help="above-identity generator of the first mean")
    ga.add_argument("--g2", default=None, metavar="EXPR")
    ga.add_argument("--r1", default=None, metavar="EXPR",
                    help="below-identity generator of the first mean")
    ga.add_argument("--r2", default=None, metavar="EXPR")
    ga.add_argument("--mean1", choices=["arithmetic"], default=None)
    ga.add_argument("--mean2", choices=["arithmetic"], default=None)
    ga.add_argument("--start", required=True, metavar="X,Y")
    _add_common(ga)

    eq = subs.add_parser("residual-eq11",
                         help="residual scan of the composite functional equation")
    eq.add_argument("--h", dest="h_expr", required=True, metavar="EXPR")
    eq.add_argument("--sweep", default=None, metavar="NAME=START:STOP:STEP")
    eq.add_argument("--x", type=float, default=None,
                    help="single evaluation point (default: the working grid)")
    _add_common(eq)
    return p


def _parse_params(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
        name, _, value = item.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise UsageError(f"--param {name}: {value!r} is not a number") from None
    return out


def _build_config(args):
    cfg = DEFAULT_CONFIG
    kw = {}
    if args.grid:
        try:
            kw["grid"] = GridSpec.parse(args.grid)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.tol_series is not None:
        kw["series_tol"] = args.tol_series
    if args.tol_inverse is not None:
        kw["inverse_tol"] = args.tol_inverse
    if args.tol_gauss is not None:
        kw["gauss_tol"] = args.tol_gauss
    if args.max_terms is not None:
        kw["max_terms"] = args.max_terms
    return cfg.with_(**kw) if kw else cfg


def _parse_pair(text, flag):
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"{flag} expects X,Y, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"{flag}: {text!r} is not a numeric pair") from None


def _validated_map(expr_text, params, cfg, role):
    """Parse, bind, validate monotonicity, and build the map."""
    try:
        fexpr = parse_expr(expr_text).bind(**params)
        report = validate_bijection(fexpr, cfg)
    except ItermeansError as exc:
        raise UsageError(f"--{role} {expr_text!r}: {exc}") from None
    if report.monotone != "yes":
        raise UsageError(
            f"--{role} {expr_text!r} is not strictly increasing on the "
            f"sampled grid (witness {report.failure_witness})"
        )
    return MonotoneMap.from_expr(fexpr, label=expr_text)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def _emit(report, args, human_lines=None):
    fmt = args.format
    if fmt == "json":
        text = json.dumps(report, indent=2) + "\n"
    elif fmt == "csv":
        table = report.get("table")
        if table is None:
            raise UsageError(f"command {report.get('command')} has no CSV table")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table["columns"])
        writer.writerows(table["rows"])
        text = buf.getvalue()
    else:
        text = "\n".join(human_lines or [json.dumps(report, indent=2)]) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _envelope(args, cfg, command, body):
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg.to_dict(),
    }
    report.update(body)
    return report


def _rerun_command(args, x, y):
    bits = ["itermeans", "check-mean"]
    for flag, val in (
        ("--mean", args.mean),
        ("--f", args.f_expr),
        ("--g", args.g_expr),
        ("--h", args.h_expr),
        ("--r", args.r_expr),
        ("--phi", args.phi_expr),
        ("--psi", args.psi_expr),
    ):
        if val:
            bits += [flag, f"'{val}'" if " " in str(val) else str(val)]
    if args.composite:
        bits.append("--composite")
    if args.op != "add":
        bits += ["--op", args.op]
    for item in args.param:
        bits += ["--param", item]
    bits += ["--at", f"{x},{y}"]
    return " ".join(bits)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_check_mean(args) -> int:
    cfg = _build_config(args)
    params = _parse_params(args.param)
    op = M.addition() if args.op == "add" else M.multiplication()

    if args.mean == "arithmetic":
        mean = M.arithmetic_mean()
    elif args.composite:
        if not (args.f_expr and args.g_expr and args.h_expr):
            raise UsageError("--composite needs --f, --g and --h")
        f = _validated_map(args.f_expr, params, cfg, "f")
        g = _validated_map(args.g_expr, params, cfg, "g")
        h = _validated_map(args.h_expr, params, cfg, "h")
        mean = M.make_composition_mean(f.compose(g), g.compose(h), op, cfg)
    elif args.phi_expr or args.psi_expr:
        if not (args.phi_expr and args.psi_expr):
            raise UsageError("--phi and --psi go together")
        phi = _validated_map(args.phi_expr, params, cfg, "phi")
        psi = _validated_map(args.psi_expr, params, cfg, "psi")
        mean = M.make_gwqam(phi, psi, cfg)
    elif args.f_expr and args.g_expr:
        f = _validated_map(args.f_expr, params, cfg, "f")
        g = _validated_map(args.g_expr, params, cfg, "g")
        mean = M.make_composition_mean(f, g, op, cfg)
    elif args.g_expr:
        g = _validated_map(args.g_expr, params, cfg, "g")
        try:
            mean = M.make_iterative_mean(g, cfg)
        except SeriesError as exc:
            raise UsageError(f"--g {args.g_expr!r}: {exc}") from None
    elif args.r_expr:
        r = _validated_map(args.r_expr, params, cfg, "r")
        try:
            mean = M.make_iterative_mean_from_r(r, cfg)
        except (SeriesError, ItermeansError) as exc:
            raise UsageError(f"--r {args.r_expr!r}: {exc}") from None
    else:
        raise UsageError(
            "nothing to check: give --mean, --g, --r, --f/--g, --phi/--psi, "
            "or --composite with --f/--g/--h"
        )

    axes = [a.strip() for a in args.axes.split(",") if a.strip()]
    valid_axes = {"reflexive", "internal", "strict", "symmetric"}
    unknown = set(axes) - valid_axes
    if unknown:
        raise UsageError(f"unknown axes {sorted(unknown)}; choose from {sorted(valid_axes)}")

    check = M.check_mean(mean, cfg)
    check_dict = check.to_dict()
    passed = all(check_dict[a]["pass"] for a in axes)

    body = {
        "provenance": mean.provenance,
        "requested_axes": axes,
        "pass": bool(passed),
        "check": check_dict,
    }
    rows = [[a, check_dict[a]["pass"]] for a in axes]
    body["table"] = {"columns": ["axis", "pass"], "rows": rows}
    if args.at:
        x, y = _parse_pair(args.at, "--at")
        body["at"] = {"x": x, "y": y, "value": mean.evaluate(x, y, cfg)}

    lines = [f"check-mean: {mean.provenance}"]
    for a in axes:
        outcome = check_dict[a]
        mark = "pass" if outcome["pass"] else "FAIL"
        lines.append(f"  {a:10s} {mark}")
        if not outcome["pass"] and outcome.get("witness"):
            wit = outcome["witness"]
            lines.append(f"    witness: {wit}")
            if "x" in wit and "y" in wit:
                lines.append(f"    re-run:  {_rerun_command(args, wit['x'], wit['y'])}")
    if "at" in body:
        lines.append(f"  value at ({body['at']['x']}, {body['at']['y']}): "
                     f"{body['at']['value']}")
    lines.append(f"  overall: {'pass' if passed else 'FAIL'}")

    _emit(_envelope(args, cfg, "check-mean", body), args, lines)
    return 0 if passed else 1


def cmd_reproduce(args) -> int:
    cfg = _build_config(args)
    ok, body = SCENARIOS[args.scenario](cfg)
    lines = [f"reproduce {args.scenario}: {'pass' if ok else 'FAIL'}"]
    for key, value in body.items():
        if key in ("table", "schema_version", "scenario"):
            continue
        lines.append(f"  {key}: {value}")
    _emit(_envelope(args, cfg, f"reproduce {args.scenario}", body), args, lines)
    return 0 if ok else 1


def _gauss_mean(args, which, params, cfg):
    g_expr = getattr(args, f"g{which}")
    r_expr = getattr(args, f"r{which}")
    named = getattr(args, f"mean{which}")
    if named == "arithmetic":
        return M.arithmetic_mean()
    if g_expr:
        g = _validated_map(g_expr, params, cfg, f"g{which}")
        return M.make_iterative_mean(g, cfg)
    if r_expr:
        r = _validated_map(r_expr, params, cfg, f"r{which}")
        return M.make_iterative_mean_from_r(r, cfg)
    raise UsageError(f"mean {which}: give --g{which}, --r{which} or --mean{which}")


def cmd_gauss(args) -> int:
    cfg = _build_config(args)
    params = _parse_params(args.param)
    x0, y0 = _parse_pair(args.start, "--start")
    try:
        m1 = _gauss_mean(args, 1, params, cfg)
        m2 = _gauss_mean(args, 2, params, cfg)
    except SeriesError as exc:
        raise UsageError(str(exc)) from None
    trace = I.gauss_iterate(m1, m2, x0, y0, cfg)
    body = {
        "mean1": m1.provenance,
        "mean2": m2.provenance,
        "start": [x0, y0],
        "converged": trace.converged,
        "limit": trace.limit,
        "iterations": trace.iterations,
        "table": {
            "columns": ["n", "x", "y"],
            "rows": [[n, x, y] for n, (x, y) in enumerate(trace.iterates)],
        },
    }
    lines = [
        f"gauss: start ({x0}, {y0})",
        f"  converged: {trace.converged} after {trace.iterations} iterations",
        f"  limit: {trace.limit}",
    ]
    _emit(_envelope(args, cfg, "gauss", body), args, lines)
    return 0 if trace.converged else 1


def _parse_sweep(text):
    if "=" not in text:
        raise UsageError(f"--sweep expects NAME=START:STOP:STEP, got {text!r}")
    name, _, rng = text.partition("=")
    parts = rng.split(":")
    if len(parts) != 3:
        raise UsageError(f"--sweep range must be START:STOP:STEP, got {rng!r}")
    try:
        start, stop, step = (float(v) for v in parts)
    except ValueError:
        raise UsageError(f"--sweep: {rng!r} is not numeric") from None
    if step <= 0:
        raise UsageError("--sweep step must be positive")
    values = []
    v = start
    while v <= stop + step * 1e-9:
        values.append(round(v, 12))
        v += step
    return name.strip(), values


def cmd_residual_eq11(args) -> int:
    cfg = _build_config(args)
    params = _parse_params(args.param)
    xs = [args.x] if args.x is not None else list(cfg.grid.points())

    sweep_name, sweep_values = (None, [None])
    if args.sweep:
        sweep_name, sweep_values = _parse_sweep(args.sweep)

    rows = []
    failures = []
    for value in sweep_values:
        bound = dict(params)
        if sweep_name is not None:
            bound[sweep_name] = value
        try:
            h = _validated_map(args.h_expr, bound, cfg, "h")
            report = I.composite_equation_residual(h, cfg, xs=xs)
        except (SeriesError, ItermeansError, UsageError) as exc:
            failures.append({"parameter": value, "error": str(exc)})
            continue
        for x, lhs, rhs, res in report.points:
            rows.append([value if value is not None else "", x, lhs, rhs, res])

    body = {
        "h": args.h_expr,
        "sweep": args.sweep,
        "n_points": len(rows),
        "failures": failures,
        "table": {
            "columns": ["parameter", "x", "lhs", "rhs", "residual"],
            "rows": rows,
        },
    }
    lines = [f"residual-eq11: h = {args.h_expr}"]
    for row in rows:
        lines.append(
            f"  param={row[0]!s:>6}  x={row[1]:g}  lhs={row[2]:.12g}  "
            f"rhs={row[3]:.12g}  residual={row[4]:.12g}"
        )
    for fail in failures:
        lines.append(f"  param={fail['parameter']}: {fail['error']}")
    _emit(_envelope(args, cfg, "residual-eq11", body), args, lines)
    return 0 if rows else 1


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

_HANDLERS = {
    "check-mean": cmd_check_mean,
    "reproduce": cmd_reproduce,
    "gauss": cmd_gauss,
    "residual-eq11": cmd_residual_eq11,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    try:
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ItermeansError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
