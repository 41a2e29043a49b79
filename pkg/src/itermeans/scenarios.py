"""Canned reproduction scenarios with pinned tolerances.

Each scenario compares the library's constructions against independently
derived closed forms or a brute-force oracle and returns (ok, report).
Tolerances here are fixed on purpose: the reproduce command is a stable
regression surface, not a playground for user overrides. Reports contain
no timestamps so identical runs serialize byte-identically.
"""

from __future__ import annotations

import math

import numpy as np

from . import invariance as I
from . import means as M
from . import series as S
from .config import DEFAULT_CONFIG, GridSpec, NumericsConfig
from .expr import parse, validate_bijection
from .maps import MonotoneMap

_WS = [round(0.1 * k, 1) for k in range(1, 10)]


def _grid_mesh(cfg):
    xs = cfg.grid.points()
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    return xs, X, Y


# --------------------------------------------------------------------------
# scenario: weighted arithmetic means recovered from linear generators
# --------------------------------------------------------------------------


def scenario_example1(cfg: NumericsConfig = DEFAULT_CONFIG):
    """For r(x) = w*x the iterative mean is the weighted arithmetic mean
    w*x + (1-w)*y; check that to 1e-9 across w and the working grid."""
    tol = 1e-9
    xs, X, Y = _grid_mesh(cfg)
    rows = []
    worst = 0.0
    for w in _WS:
        r = MonotoneMap.from_expr("w*x", {"w": w})
        mean = M.make_iterative_mean_from_r(r, cfg)
        got = mean.eval_grid(X, Y, cfg)
        want = w * X + (1.0 - w) * Y
        err = float(np.abs(got - want).max())
        rows.append([w, err])
        worst = max(worst, err)
    ok = worst <= tol
    report = {
        "schema_version": 1,
        "scenario": "example1",
        "description": "weighted arithmetic mean recovered from a linear "
        "below-identity generator",
        "tolerance": tol,
        "grid": cfg.grid.to_dict(),
        "max_error": worst,
        "pass": bool(ok),
        "table": {"columns": ["w", "max_error"], "rows": rows},
    }
    return ok, report


# --------------------------------------------------------------------------
# scenario: nonlinear below-identity generator (brute-force oracle)
# --------------------------------------------------------------------------


def _oracle_iterative_mean(p: float, x: float, y: float) -> float:
    """Independent evaluation of the iterative mean of r(t) = p*t^2/(t+1):
    plain 200-term forward sums, the quadratic-formula inverse, and
    bisection for the outer inversion. Shares no code with the kernels."""

    def r(t):
        return p * t * t / (t + 1.0)

    def r_inv(t):
        # p z^2 - t z - t = 0, positive root
        return (t + math.sqrt(t * t + 4.0 * p * t)) / (2.0 * p)

    def forward_sum(t, n=200):
        s = 0.0
        for _ in range(n):
            s += t
            t = r(t)
            if t < 1e-300:
                break
        return s

    def outer(t):  # sum starting one iterate earlier
        return r_inv(t) + forward_sum(t)

    target = forward_sum(x) + r_inv(y)
    lo, hi = min(x, y), max(x, y)
    while outer(lo) > target:
        lo *= 0.5
    while outer(hi) < target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if outer(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scenario_example2(cfg: NumericsConfig = DEFAULT_CONFIG):
    """r(x) = p*x^2/(x+1) with p = 1/2 sits below the identity, its forward
    sums converge, and the generated iterative mean is a strict mean that
    matches a brute-force oracle."""
    p = 0.5
    oracle_tol = 1e-8
    reflexivity_tol = 1e-7
    r = MonotoneMap.from_expr("p*x^2/(x+1)", {"p": p})

    validation = validate_bijection(parse("p*x^2/(x+1)").bind(p=p), cfg)
    displacement = r.classify_displacement(cfg)
    g = r.inverse()
    series_rep = S.series_report(g, cfg.grid.points(), cfg)
    mean = M.make_iterative_mean_from_r(r, cfg)
    axioms = M.check_mean(mean, cfg)
    f = S.series_map(g, cfg)
    refl = S.reflexivity_residual(f, g, cfg)

    sample_pairs = [(1.0, 4.0), (0.5, 2.0), (2.0, 9.0), (1.0, 2.0)]
    rows = []
    worst = 0.0
    for x, y in sample_pairs:
        got = mean.evaluate(x, y, cfg)
        want = _oracle_iterative_mean(p, x, y)
        err = abs(got - want)
        rows.append([x, y, got, want, err])
        worst = max(worst, err)

    ok = (
        validation.monotone == "yes"
        and displacement.below
        and series_rep.converged
        and axioms.is_mean
        and worst <= oracle_tol
        and refl <= reflexivity_tol
    )
    report = {
        "schema_version": 1,
        "scenario": "example2",
        "description": "iterative mean of a nonlinear below-identity "
        "generator, checked against a brute-force oracle",
        "p": p,
        "tolerances": {"oracle": oracle_tol, "reflexivity": reflexivity_tol},
        "validation_monotone": validation.monotone,
        "displacement": displacement.verdict,
        "series_converged": series_rep.converged,
        "series_terms": series_rep.terms_used,
        "mean_axioms_pass": bool(axioms.is_mean),
        "reflexivity_residual": refl,
        "max_oracle_error": worst,
        "pass": bool(ok),
        "table": {"columns": ["x", "y", "mean", "oracle", "error"], "rows": rows},
    }
    return ok, report


# --------------------------------------------------------------------------
# scenario: linear chain, invariance, and the non-mean invariant function
# --------------------------------------------------------------------------


def scenario_example3(cfg: NumericsConfig = DEFAULT_CONFIG):
    """For h(x) = x/w the whole chain is closed-form: g = x/(1-w),
    f = x/w, the two generated means are the complementary weighted
    arithmetic means, the composed candidate is w*(1-w)*(x+y) (invariant but
    not a mean), Gauss iteration reaches the arithmetic mean, and the
    quasiarithmetic invariant mean agrees with it."""
    tol_closed = 1e-9
    tol_invariance = 1e-10
    tol_gauss = 1e-10
    xs, X, Y = _grid_mesh(cfg)
    rows = []
    ok = True
    per_w = {}
    for w in _WS:
        h = MonotoneMap.from_expr("x/w", {"w": w})
        g, f = I.build_generator_chain(h, cfg)
        g_err = float(np.abs(g.eval_many(xs, cfg) - xs / (1.0 - w)).max())
        f_err = float(np.abs(f.eval_many(xs, cfg) - xs / w).max())

        d_h = M.make_iterative_mean(h, cfg)
        d_g = M.make_iterative_mean(g, cfg)
        dh_err = float(np.abs(d_h.eval_grid(X, Y, cfg) - (w * X + (1 - w) * Y)).max())
        dg_err = float(np.abs(d_g.eval_grid(X, Y, cfg) - ((1 - w) * X + w * Y)).max())

        triple = I.build_triple(f, g, h, None, cfg)
        comp_err = float(
            np.abs(triple.d_composed.eval_grid(X, Y, cfg) - w * (1 - w) * (X + Y)).max()
        )
        inv_res = I.invariance_residual(triple, cfg)
        axioms = M.check_mean(triple.d_composed, cfg)
        internal_fails = not axioms.internal.passed and axioms.internal.witness is not None

        w_ok = (
            g_err <= tol_closed
            and f_err <= tol_closed
            and dh_err <= tol_closed
            and dg_err <= tol_closed
            and comp_err <= tol_closed
            and inv_res <= tol_invariance
            and internal_fails
        )
        ok = ok and w_ok
        rows.append([w, g_err, f_err, dh_err, dg_err, comp_err, inv_res,
                     bool(internal_fails)])
        per_w[str(w)] = {
            "internal_witness": axioms.internal.witness,
        }

    # Gauss iteration and the quasiarithmetic cross-check at w = 0.3
    w = 0.3
    h = MonotoneMap.from_expr("x/w", {"w": w})
    g, f = I.build_generator_chain(h, cfg)
    d_g = M.make_iterative_mean(g, cfg)
    d_h = M.make_iterative_mean(h, cfg)
    trace = I.gauss_iterate(d_g, d_h, 1.0, 9.0, cfg)
    gauss_ok = (
        trace.converged
        and trace.iterations <= 100
        and abs(trace.limit - 5.0) <= tol_gauss
    )
    invariant_mean = M.make_gwqam(f + g, g + h, cfg)
    A = M.arithmetic_mean()
    gw_err = float(
        np.abs(invariant_mean.eval_grid(X, Y, cfg) - A.eval_grid(X, Y, cfg)).max()
    )
    ok = ok and gauss_ok and gw_err <= tol_closed

    report = {
        "schema_version": 1,
        "scenario": "example3",
        "description": "linear chain: closed forms, invariance of the "
        "composed candidate, its internality failure, Gauss limit, and the "
        "quasiarithmetic invariant mean",
        "tolerances": {
            "closed_forms": tol_closed,
            "invariance": tol_invariance,
            "gauss": tol_gauss,
        },
        "grid": cfg.grid.to_dict(),
        "gauss": {
            "start": [1.0, 9.0],
            "w": w,
            "limit": trace.limit,
            "iterations": trace.iterations,
            "converged": trace.converged,
        },
        "gwqam_vs_limit_error": gw_err,
        "per_w_internal_witness": per_w,
        "pass": bool(ok),
        "table": {
            "columns": [
                "w", "g_error", "f_error", "mean_h_error", "mean_g_error",
                "composed_error", "invariance_residual", "internality_fails",
            ],
            "rows": rows,
        },
    }
    return ok, report


# --------------------------------------------------------------------------
# scenario: derivative system obstruction
# --------------------------------------------------------------------------


def scenario_remark7(cfg: NumericsConfig = DEFAULT_CONFIG):
    """The derivative system that a fully mean-valued triple would force at
    the origin has no solution with all derivatives >= 1; confirmed by
    elimination and a grid scan with strictly positive minimum violation."""
    rep = I.derivative_obstruction(cfg, lo=1.0, hi=10.0, step=0.05)
    ok = (not rep.feasible) and rep.grid_min_violation > 0.1
    detail = rep.to_dict()
    report = {
        "schema_version": 1,
        "scenario": "remark7",
        "description": "infeasibility of the boundary derivative system",
        "pass": bool(ok),
        "feasible": detail["feasible"],
        "roles": detail["roles"],
        "grid_min_violation": detail["grid_min_violation"],
        "grid": detail["grid"],
        "elimination_trace": detail["elimination_trace"],
    }
    return ok, report


SCENARIOS = {
    "example1": scenario_example1,
    "example2": scenario_example2,
    "example3": scenario_example3,
    "remark7": scenario_remark7,
}
