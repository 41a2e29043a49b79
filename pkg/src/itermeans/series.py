"""Sums of inverse iterates: g^0 + g^-1 + g^-2 + ... with convergence
certification, the shifted variant that starts at g itself, and the
reflexivity residual of the functional equation f(g(x)) = f(x) + g(x).

A generator displaced below the identity admits no sum at all (its inverse
iterates grow), so those are refused up front; a generator above the
identity is summed with a geometric tail bound certified from the computed
terms, since no a-priori rate is available for general maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import nodes as N
from ._core import engine
from ._core.ops import ST_DIVERGED, ST_OK
from .config import DEFAULT_CONFIG, NumericsConfig
from .errors import SeriesDivergenceError, SeriesUndeterminedError
from .maps import MonotoneMap


@dataclass
class SeriesReport:
    """Convergence evidence for the sum of inverse iterates over a set of
    evaluation points. ``converged`` certifies the geometric tail bound at
    every point; it is mutually exclusive with ``divergence_witness``."""

    converged: bool
    terms_used: int
    tail_estimate: float
    values: list  # (x, partial sum) pairs
    divergence_witness: Optional[float] = None

    def to_dict(self):
        return {
            "converged": self.converged,
            "terms_used": self.terms_used,
            "tail_estimate": self.tail_estimate,
            "divergence_witness": self.divergence_witness,
            "values": [[x, s] for x, s in self.values],
        }


def _require_above(g: MonotoneMap, cfg: NumericsConfig) -> None:
    cls = g.classify_displacement(cfg)
    if cls.above:
        return
    if cls.below:
        raise SeriesDivergenceError(
            f"generator {g.label!r} sits below the identity; its inverse "
            "iterates grow without bound and the sum has no value"
        )
    raise SeriesDivergenceError(
        f"generator {g.label!r} meets the identity near x={cls.witness!r}; "
        "the inverse iterates stall at the fixpoint and the sum diverges"
    )


def _linear_sum_coef(g: MonotoneMap) -> Optional[float]:
    """For g(x) = a*x with a > 1 the sum collapses to x * a/(a-1)."""
    if N.is_linear(g.node) and g.node.a > 1.0:
        return g.node.a / (g.node.a - 1.0)
    return None


def sum_inverse_iterates(
    g: MonotoneMap, x: float, cfg: NumericsConfig = DEFAULT_CONFIG
) -> float:
    """Value of the sum of inverse iterates of g at x (identity term first).

    Truncates once the last term is small against the partial sum and the
    geometric tail estimate term*rho/(1-rho) drops under the series
    tolerance; raises if the partial sums pass the divergence cap or the cap
    on terms is reached without certification.
    """
    _require_above(g, cfg)
    coef = _linear_sum_coef(g)
    if coef is not None:
        return coef * float(x)
    tab, root = g._tab()
    value, _, _, status = engine.series_stats(tab, root, float(x), cfg.kernel_tuple())
    if status == ST_OK:
        return value
    if status == ST_DIVERGED:
        raise SeriesDivergenceError(
            f"partial sums of inverse iterates of {g.label!r} exceeded the "
            f"divergence cap at x={x!r}"
        )
    raise SeriesUndeterminedError(
        f"sum of inverse iterates of {g.label!r} at x={x!r} hit the term cap "
        "without certifying a geometric tail (convergence undetermined)"
    )


def series_map(
    g: MonotoneMap, cfg: NumericsConfig = DEFAULT_CONFIG, label: Optional[str] = None
) -> MonotoneMap:
    """The sum of inverse iterates as a map in its own right.

    Strictly increasing because every term is; its inverse goes through
    bracketed root finding. Convergence is certified up front at the ends
    and midpoint of the working grid so failures surface at construction.
    """
    _require_above(g, cfg)
    if label is None:
        label = f"sum-inv-iterates({g.label})"
    coef = _linear_sum_coef(g)
    if coef is not None:
        return MonotoneMap(N.PAffine(coef, 0.0), label)
    node = N.PSeries(g.node)
    probe = MonotoneMap(node, label)
    tab, root = probe._tab()
    child = tab.child_of(root)
    lo, hi = cfg.grid.lo, cfg.grid.hi
    for x in (lo, (lo * hi) ** 0.5, hi):
        _, terms, _, status = engine.series_stats(tab, child, x, cfg.kernel_tuple())
        if status == ST_DIVERGED:
            raise SeriesDivergenceError(
                f"partial sums of inverse iterates of {g.label!r} exceeded "
                f"the divergence cap at x={x!r}"
            )
        if status != ST_OK:
            raise SeriesUndeterminedError(
                f"sum of inverse iterates of {g.label!r} at x={x!r} failed to "
                f"certify a geometric tail after {terms} terms"
            )
    return probe


def build_f_from_g(
    g: MonotoneMap, cfg: NumericsConfig = DEFAULT_CONFIG
) -> MonotoneMap:
    """Alias of series_map: builds the outer function that makes the
    two-function mean candidate reflexive."""
    return series_map(g, cfg)


def shifted_series(
    g: MonotoneMap, x: float, cfg: NumericsConfig = DEFAULT_CONFIG
) -> float:
    """Sum starting one iterate earlier, i.e. g + (sum of inverse iterates);
    equals the plain sum composed with g."""
    return g.eval(x, cfg) + sum_inverse_iterates(g, x, cfg)


def shifted_series_map(
    g: MonotoneMap, cfg: NumericsConfig = DEFAULT_CONFIG
) -> MonotoneMap:
    f = series_map(g, cfg)
    return MonotoneMap(
        N.sum_nodes(g.node, f.node), f"shifted-sum-inv-iterates({g.label})"
    )


def reflexivity_residual(
    f: MonotoneMap,
    g: MonotoneMap,
    cfg: NumericsConfig = DEFAULT_CONFIG,
    *,
    relative: bool = True,
) -> float:
    """Largest grid violation of f(g(x)) = f(x) + g(x).

    By default normalized by 1 + |f(x)| + |g(x)|; pass relative=False for
    the raw magnitude.
    """
    xs = cfg.grid.points()
    gx = g.eval_many(xs, cfg)
    fx = f.eval_many(xs, cfg)
    fgx = f.eval_many(gx, cfg)
    res = np.abs(fgx - fx - gx)
    if relative:
        res = res / (1.0 + np.abs(fx) + np.abs(gx))
    return float(res.max())


def series_report(
    g: MonotoneMap, xs, cfg: NumericsConfig = DEFAULT_CONFIG
) -> SeriesReport:
    """Evaluate the sum at each point, collecting truncation evidence
    instead of raising; a divergent point becomes the witness."""
    cls = g.classify_displacement(cfg)
    if not cls.above:
        return SeriesReport(
            converged=False,
            terms_used=0,
            tail_estimate=float("inf"),
            values=[],
            divergence_witness=float(xs[0]),
        )
    coef = _linear_sum_coef(g)
    if coef is not None:
        return SeriesReport(
            converged=True,
            terms_used=1,
            tail_estimate=0.0,
            values=[(float(x), coef * float(x)) for x in xs],
        )
    tab, root = MonotoneMap(N.PSeries(g.node), "probe")._tab()
    child = tab.child_of(root)
    values = []
    worst_terms = 0
    worst_tail = 0.0
    for x in xs:
        value, terms, tail, status = engine.series_stats(
            tab, child, float(x), cfg.kernel_tuple()
        )
        if status != ST_OK:
            return SeriesReport(
                converged=False,
                terms_used=terms,
                tail_estimate=float(tail),
                values=values,
                divergence_witness=float(x),
            )
        values.append((float(x), value))
        worst_terms = max(worst_terms, terms)
        worst_tail = max(worst_tail, tail)
    return SeriesReport(
        converged=True,
        terms_used=worst_terms,
        tail_estimate=worst_tail,
        values=values,
    )
