"""The invariance identity for mean-type mappings and what follows from it.

Given three increasing bijections f, g, h and a bisymmetric operation, when
the two pointwise hypotheses f(x) (+) g(x) = (f o g)(x) and
g(x) (+) h(x) = (g o h)(x) hold, the candidate built from the composed
pair is invariant under the mapping whose coordinates are the two inner
candidates. This module builds such triples, measures the invariance
residual (refusing to report one when the hypotheses fail), runs Gauss
iteration of mean pairs to their common limit, constructs the generator
chain g = sum of inverse iterates of h and f = sum of inverse iterates of
g, scans the residual of the composite functional equation those sums
satisfy only in degenerate cases, and checks the derivative system that
rules out a fully mean-valued triple near zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from . import series as S
from .config import DEFAULT_CONFIG, NumericsConfig
from .errors import HypothesesUnmetError, ItermeansError
from .maps import MonotoneMap
from .means import (
    GroupoidOp,
    MeanObject,
    check_mean,
    make_composition_mean,
)

# --------------------------------------------------------------------------
# bisymmetry certification
# --------------------------------------------------------------------------


def check_bisymmetry(
    op: GroupoidOp, cfg: NumericsConfig = DEFAULT_CONFIG
) -> GroupoidOp:
    """Certify or refute (u+v)+(w+z) = (u+w)+(v+z) on sampled quadruples.

    Addition and multiplication certify directly (commutativity and
    associativity close the identity); custom operations are sampled on a
    coarse log grid and any violation is returned as a witness quadruple.
    """
    if op.builtin:
        op.bisymmetry = "certified"
        return op
    pts = np.geomspace(cfg.grid.lo, cfg.grid.hi, 6)
    tol = 1e-9
    for u in pts:
        for v in pts:
            for w in pts:
                for z in pts:
                    lhs = op.apply(op.apply(u, v), op.apply(w, z))
                    rhs = op.apply(op.apply(u, w), op.apply(v, z))
                    if abs(lhs - rhs) > tol * (1.0 + abs(lhs) + abs(rhs)):
                        op.bisymmetry = "refuted"
                        op.witness = (float(u), float(v), float(w), float(z))
                        return op
    op.bisymmetry = "certified"
    return op


# --------------------------------------------------------------------------
# composite triples and the invariance residual
# --------------------------------------------------------------------------


@dataclass
class CompositeTriple:
    """The three candidates built from f, g, h over one operation, plus the
    grid residuals of the two pointwise hypotheses that the invariance
    identity needs."""

    d_fg: MeanObject
    d_gh: MeanObject
    d_composed: MeanObject  # built from (f o g, g o h)
    f: MonotoneMap
    g: MonotoneMap
    h: MonotoneMap
    op: GroupoidOp
    hypothesis_residuals: Tuple[float, float]  # relative, (f,g) then (g,h)

    @property
    def hypotheses_met(self) -> bool:
        return max(self.hypothesis_residuals) <= DEFAULT_CONFIG.hypothesis_tol


def _hypothesis_residual(
    a: MonotoneMap, b: MonotoneMap, op: GroupoidOp, cfg: NumericsConfig
) -> float:
    """max over the grid of |a(x) (+) b(x) - (a o b)(x)| / (1 + |(a o b)(x)|)."""
    xs = cfg.grid.points()
    ax = a.eval_many(xs, cfg)
    bx = b.eval_many(xs, cfg)
    abx = a.eval_many(bx, cfg)
    combined = np.array([op.apply(u, v) for u, v in zip(ax, bx)])
    return float((np.abs(combined - abx) / (1.0 + np.abs(abx))).max())


def build_triple(
    f: MonotoneMap,
    g: MonotoneMap,
    h: MonotoneMap,
    op: Optional[GroupoidOp] = None,
    cfg: NumericsConfig = DEFAULT_CONFIG,
) -> CompositeTriple:
    """Construct the candidates from (f,g), (g,h), and (f o g, g o h), using
    one shared certified operation, and record the hypothesis residuals."""
    if op is None:
        op = GroupoidOp("add")
    if op.bisymmetry == "unchecked":
        op = check_bisymmetry(op, cfg)
    if op.bisymmetry != "certified":
        raise ItermeansError(
            f"operation is not certified bisymmetric (witness {op.witness})"
        )
    d_fg = make_composition_mean(f, g, op, cfg)
    d_gh = make_composition_mean(g, h, op, cfg)
    d_composed = make_composition_mean(f.compose(g), g.compose(h), op, cfg)
    res_fg = _hypothesis_residual(f, g, op, cfg)
    res_gh = _hypothesis_residual(g, h, op, cfg)
    return CompositeTriple(
        d_fg=d_fg,
        d_gh=d_gh,
        d_composed=d_composed,
        f=f,
        g=g,
        h=h,
        op=op,
        hypothesis_residuals=(res_fg, res_gh),
    )


def invariance_residual(
    triple: CompositeTriple,
    cfg: NumericsConfig = DEFAULT_CONFIG,
    *,
    require_hypotheses: bool = True,
) -> float:
    """max over the grid of the relative gap between the composed candidate
    applied to the mapped pair and applied to the original pair.

    Refuses to report a verification when the pointwise hypotheses fail,
    since the identity is only asserted under them; pass
    require_hypotheses=False to get the raw number anyway.
    """
    worst = max(triple.hypothesis_residuals)
    if require_hypotheses and worst > cfg.hypothesis_tol:
        raise HypothesesUnmetError(
            f"hypothesis residuals {triple.hypothesis_residuals} exceed "
            f"{cfg.hypothesis_tol}; the invariance identity is not applicable"
        )
    xs = cfg.grid.points()
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    inner1 = triple.d_fg.eval_grid(X, Y, cfg)
    inner2 = triple.d_gh.eval_grid(X, Y, cfg)
    direct = triple.d_composed.eval_grid(X, Y, cfg)
    mapped = triple.d_composed.eval_grid(inner1, inner2, cfg)
    return float((np.abs(mapped - direct) / (1.0 + np.abs(direct))).max())


# --------------------------------------------------------------------------
# Gauss iteration
# --------------------------------------------------------------------------


@dataclass
class GaussTrace:
    """Iterates of a mean-type mapping from a starting pair. On convergence
    the limit is the midpoint of the final (agreeing) coordinates."""

    iterates: list  # [(x, y), ...] including the start
    converged: bool
    limit: Optional[float]
    iterations: int

    def to_dict(self):
        return {
            "converged": self.converged,
            "limit": self.limit,
            "iterations": self.iterations,
            "iterates": [[x, y] for x, y in self.iterates],
        }


def gauss_iterate(
    m1: MeanObject,
    m2: MeanObject,
    x0: float,
    y0: float,
    cfg: NumericsConfig = DEFAULT_CONFIG,
    *,
    check_internality: bool = True,
) -> GaussTrace:
    """Iterate (x, y) -> (m1(x, y), m2(x, y)) until the coordinates agree.

    Internality of both coordinates keeps each iterate inside the previous
    interval, so the gap is non-increasing; for strict means it contracts.
    Non-convergence within the cap is reported in the trace, not raised.
    """
    if check_internality:
        for m in (m1, m2):
            rep = m.checks if m.checks is not None else check_mean(m, cfg)
            if not rep.internal.passed:
                raise ItermeansError(
                    f"{m.provenance} fails internality; Gauss iteration is "
                    f"not contractive (witness {rep.internal.witness})"
                )
    x, y = float(x0), float(y0)
    iterates = [(x, y)]
    for n in range(cfg.gauss_max_iters):
        if abs(x - y) <= cfg.gauss_tol:
            return GaussTrace(iterates, True, 0.5 * (x + y), n)
        x, y = m1.evaluate(x, y, cfg), m2.evaluate(x, y, cfg)
        iterates.append((x, y))
    converged = abs(x - y) <= cfg.gauss_tol
    return GaussTrace(
        iterates, converged, 0.5 * (x + y) if converged else None, cfg.gauss_max_iters
    )


# --------------------------------------------------------------------------
# generator chains and the composite functional equation
# --------------------------------------------------------------------------


def build_generator_chain(
    h: MonotoneMap, cfg: NumericsConfig = DEFAULT_CONFIG
) -> Tuple[MonotoneMap, MonotoneMap]:
    """From the innermost map h (above the identity), build
    g = sum of inverse iterates of h, then f = sum of inverse iterates of g.

    Either level raises if its sum cannot be certified; for linear h both
    levels collapse to exact linear maps.
    """
    g = S.series_map(h, cfg)
    f = S.series_map(g, cfg)
    return g, f


@dataclass
class CompositeEquationReport:
    """Pointwise residuals |LHS(x) - RHS(x)| of the composite functional
    equation that a fully mean-valued triple would force on h.

    LHS is the shifted sum over g = sum of inverse iterates of h, evaluated
    as f(g(x)); RHS is the sum of inverse iterates of g o h. Truncation
    counts make the residuals reproducible.
    """

    points: list  # [(x, lhs, rhs, residual)]
    max_residual: float
    truncation_terms: dict

    def to_dict(self):
        return {
            "schema_version": 1,
            "max_residual": self.max_residual,
            "truncation_terms": self.truncation_terms,
            "points": [
                {"x": x, "lhs": l, "rhs": r, "residual": d}
                for x, l, r, d in self.points
            ],
        }


def composite_equation_residual(
    h: MonotoneMap,
    cfg: NumericsConfig = DEFAULT_CONFIG,
    xs=None,
) -> CompositeEquationReport:
    """Measure, per grid point, how far h is from solving the composite
    equation. Uses the pre-simplification form of the left side (the plain
    sum composed with g) to avoid one nested inversion."""
    if xs is None:
        xs = cfg.grid.points()
    xs = np.asarray(xs, dtype=np.float64)
    g = S.series_map(h, cfg)
    f = S.series_map(g, cfg)
    rhs_map = S.series_map(g.compose(h), cfg)

    gx = g.eval_many(xs, cfg)
    lhs = f.eval_many(gx, cfg)
    rhs = rhs_map.eval_many(xs, cfg)
    res = np.abs(lhs - rhs)

    terms = {"inner": 0, "lhs": 0, "rhs": 0}
    for probe_map, key, args in (
        (h, "inner", xs),
        (g, "lhs", gx),
        (g.compose(h), "rhs", xs),
    ):
        rep = S.series_report(probe_map, [float(args[0]), float(args[-1])], cfg)
        terms[key] = rep.terms_used
    points = [
        (float(x), float(l), float(r), float(d))
        for x, l, r, d in zip(xs, lhs, rhs, res)
    ]
    return CompositeEquationReport(
        points=points,
        max_residual=float(res.max()),
        truncation_terms=terms,
    )


# --------------------------------------------------------------------------
# derivative obstruction at the origin
# --------------------------------------------------------------------------


@dataclass
class DerivativeObstructionReport:
    """Infeasibility of the derivative system a*b = a+b, b*c = b+c,
    a*b^2*c = a*b + b*c over a, b, c >= 1, where a, b, c play the roles of
    the three maps' derivatives at 0. Backed by algebraic elimination and a
    grid scan whose minimum violation stays strictly positive."""

    feasible: bool
    elimination_trace: list
    grid_min_violation: float
    grid_spec: dict
    roles: dict = field(
        default_factory=lambda: {"a": "f'(0)", "b": "g'(0)", "c": "h'(0)"}
    )

    def to_dict(self):
        return {
            "schema_version": 1,
            "feasible": self.feasible,
            "roles": self.roles,
            "grid_min_violation": self.grid_min_violation,
            "grid": self.grid_spec,
            "elimination_trace": self.elimination_trace,
        }


def system_violation(a, b, c):
    """Largest absolute violation among the three derivative equations."""
    e1 = np.abs(a * b - a - b)
    e2 = np.abs(b * c - b - c)
    e3 = np.abs(a * b * b * c - a * b - b * c)
    return np.maximum(e1, np.maximum(e2, e3))


def derivative_obstruction(
    cfg: NumericsConfig = DEFAULT_CONFIG,
    lo: float = 1.0,
    hi: float = 10.0,
    step: float = 0.05,
) -> DerivativeObstructionReport:
    """Eliminate algebraically, then scan the cube [lo, hi]^3 recording the
    minimum violation. No derivatives are estimated numerically: the maps
    the system describes cannot exist, so only the algebra is checked."""
    trace = [
        "from a*b = a + b: b = 1 is impossible (it gives a = a + 1), so "
        "a = b/(b-1) with b > 1",
        "from b*c = b + c: likewise c = b/(b-1), hence c = a",
        "substitute into a*b^2*c = a*b + b*c: (a*b)^2 = 2*a*b, so a*b = 2",
        "but a*b = a + b, so a + b = 2 and a*b = 2: a and b solve "
        "t^2 - 2*t + 2 = 0, whose discriminant is -4 < 0",
        "no real solution exists, let alone one with a, b, c >= 1",
    ]
    axis = np.arange(lo, hi + step * 0.5, step)
    best = np.inf
    B, C = np.meshgrid(axis, axis, indexing="ij")
    for a in axis:
        best = min(best, float(system_violation(a, B, C).min()))
    return DerivativeObstructionReport(
        feasible=False,
        elimination_trace=trace,
        grid_min_violation=best,
        grid_spec={"lo": lo, "hi": hi, "step": step, "points_per_axis": len(axis)},
    )
