"""Pure-Python compute engine.

Interprets flattened map tables: affine/power closed forms, expression stack
programs, functional inverses via bracketed root finding, compositions, and
sums of inverse iterates with geometric tail certification. The Cython
engine implements the same semantics on the same tables; this module is the
reference and the fallback.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import (
    BracketError,
    DomainError,
    SeriesDivergenceError,
    SeriesUndeterminedError,
    ToleranceError,
)
from .ops import (
    K_AFFINE,
    K_COMPOSE,
    K_EXPR,
    K_INVERSE,
    K_POWC,
    K_PYFUNC,
    K_SERIES,
    K_SUM2,
    OP_ADD,
    OP_CONST,
    OP_DIV,
    OP_MUL,
    OP_NODE,
    OP_POWI,
    OP_POWQ,
    OP_SUB,
    OP_X,
    SERIES_GUARD_RATIO,
    SERIES_GUARD_TERMS,
    ST_BRACKET,
    ST_DIVERGED,
    ST_OK,
    ST_UNCERTIFIED,
)

BACKEND = "python"

_SERIES_TOL_FLOOR = 1e-15


class Table:
    """Flattened, immutable map tree plus any attached Python callables."""

    def __init__(self, kind, a1, a2, a3, p1, p2, p3, code, consts, pyfuncs):
        self.kind = [int(v) for v in kind]
        self.a1 = [int(v) for v in a1]
        self.a2 = [int(v) for v in a2]
        self.a3 = [int(v) for v in a3]
        self.p1 = [float(v) for v in p1]
        self.p2 = [float(v) for v in p2]
        self.p3 = [float(v) for v in p3]
        self.code = [int(v) for v in code]
        self.consts = [float(v) for v in consts]
        self.pyfuncs = list(pyfuncs)

    # exposed for series probing from the Python layer
    def child_of(self, node):
        return self.a1[node]


def _bad(v):
    return not math.isfinite(v) or v <= 0.0


def _eval(tab, node, x, cfg, depth):
    k = tab.kind[node]
    if k == K_AFFINE:
        v = tab.p1[node] * x + tab.p2[node]
    elif k == K_POWC:
        e = tab.p2[node] / tab.p3[node]
        v = tab.p1[node] * math.pow(x, e)
    elif k == K_EXPR:
        v = _vm(tab, node, x, cfg, depth)
    elif k == K_INVERSE:
        return _invert(tab, tab.a1[node], x, cfg, depth, -1.0)
    elif k == K_COMPOSE:
        v = _eval(tab, tab.a2[node], x, cfg, depth)
        return _eval(tab, tab.a1[node], v, cfg, depth)
    elif k == K_SERIES:
        v, _, _, status = _series(tab, tab.a1[node], x, cfg, depth)
        _raise_series(status, x)
        return v
    elif k == K_SUM2:
        v = _eval(tab, tab.a1[node], x, cfg, depth) + _eval(
            tab, tab.a2[node], x, cfg, depth
        )
    else:  # K_PYFUNC
        v = float(tab.pyfuncs[tab.a1[node]](x))
    if _bad(v):
        raise DomainError(f"map evaluation at x={x!r} produced {v!r}")
    return v


def _vm(tab, node, x, cfg, depth):
    code = tab.code
    consts = tab.consts
    off = tab.a1[node]
    end = off + tab.a2[node]
    stack = []
    push = stack.append
    i = off
    while i < end:
        op = code[i]
        arg = code[i + 1]
        i += 2
        if op == OP_X:
            push(x)
        elif op == OP_CONST:
            push(consts[arg])
        elif op == OP_ADD:
            b = stack.pop()
            stack[-1] += b
        elif op == OP_SUB:
            b = stack.pop()
            stack[-1] -= b
        elif op == OP_MUL:
            b = stack.pop()
            stack[-1] *= b
        elif op == OP_DIV:
            b = stack.pop()
            if b == 0.0:
                raise DomainError(f"division by zero while evaluating at x={x!r}")
            stack[-1] /= b
        elif op == OP_POWI:
            v = stack[-1]
            if v == 0.0 and arg < 0:
                raise DomainError(f"0 raised to negative power at x={x!r}")
            stack[-1] = v**arg
        elif op == OP_POWQ:
            v = stack[-1]
            e = consts[arg]
            if v < 0.0 or (v == 0.0 and e < 0.0):
                raise DomainError(
                    f"fractional power of non-positive base {v!r} at x={x!r}"
                )
            stack[-1] = math.pow(v, e)
        elif op == OP_NODE:
            stack[-1] = _eval(tab, arg, stack[-1], cfg, depth)
    v = stack[-1]
    if not math.isfinite(v):
        raise DomainError(f"expression evaluation at x={x!r} produced {v!r}")
    return v


def _invert(tab, node, y, cfg, depth, guess):
    k = tab.kind[node]
    if k == K_AFFINE:
        a = tab.p1[node]
        if a == 0.0:
            raise DomainError("cannot invert a constant map")
        v = (y - tab.p2[node]) / a
        if _bad(v):
            raise DomainError(f"inverse of affine map at y={y!r} leaves (0, inf)")
        return v
    if k == K_POWC:
        c, p, q = tab.p1[node], tab.p2[node], tab.p3[node]
        if p == 0.0:
            raise DomainError("cannot invert a constant map")
        v = math.pow(y / c, q / p)
        if _bad(v):
            raise DomainError(f"inverse of power map at y={y!r} leaves (0, inf)")
        return v
    if k == K_INVERSE:
        return _eval(tab, tab.a1[node], y, cfg, depth)
    if k == K_COMPOSE:
        v = _invert(tab, tab.a1[node], y, cfg, depth, -1.0)
        return _invert(tab, tab.a2[node], v, cfg, depth, guess)
    if k == K_PYFUNC and tab.a2[node] >= 0:
        v = float(tab.pyfuncs[tab.a2[node]](y))
        if _bad(v):
            raise DomainError(f"registered inverse at y={y!r} produced {v!r}")
        return v
    return _num_invert(tab, node, y, cfg, depth, guess)


def _num_invert(tab, node, y, cfg, depth, guess):
    """Bracket expansion followed by bisection with a safeguarded secant step.

    Assumes the node is strictly increasing; the bracket then always exists
    when y lies in the range.
    """
    inv_tol = cfg[1]
    max_iters = int(cfg[4])
    max_expand = int(cfg[5])
    ftol = inv_tol * max(1.0, abs(y))

    x0 = guess if (guess > 0.0 and math.isfinite(guess)) else 1.0
    f0 = _eval(tab, node, x0, cfg, depth)
    if abs(f0 - y) <= ftol:
        return x0

    if f0 < y:
        lo, flo = x0, f0
        hi = x0
        for _ in range(max_expand):
            hi *= 2.0
            fhi = _eval(tab, node, hi, cfg, depth)
            if fhi >= y:
                break
            lo, flo = hi, fhi
        else:
            raise BracketError(
                f"no upper bracket for y={y!r} after {max_expand} doublings; "
                "the map does not appear to reach this value"
            )
    else:
        hi, fhi = x0, f0
        lo = x0
        for _ in range(max_expand):
            lo *= 0.5
            flo = _eval(tab, node, lo, cfg, depth)
            if flo <= y:
                break
            hi, fhi = lo, flo
        else:
            raise BracketError(
                f"no lower bracket for y={y!r} after {max_expand} halvings; "
                "the map does not appear to reach this value"
            )

    # invariant: flo <= y <= fhi
    stall = 0
    for _ in range(max_iters):
        width = hi - lo
        if fhi > flo and stall < 2:
            xm = lo + (y - flo) * width / (fhi - flo)
            if not (lo < xm < hi):
                xm = lo + 0.5 * width
        else:
            xm = lo + 0.5 * width
        fm = _eval(tab, node, xm, cfg, depth)
        if abs(fm - y) <= ftol:
            return xm
        if fm < y:
            lo, flo = xm, fm
        else:
            hi, fhi = xm, fm
        # shrinking slower than bisection twice in a row forces a bisect
        if hi - lo > 0.5 * width:
            stall += 1
        else:
            stall = 0
        if hi - lo <= 4.0 * 2.2e-16 * max(1.0, hi):
            # bracket collapsed to float resolution; the root is pinned
            return 0.5 * (lo + hi)
    raise ToleranceError(
        f"inversion at y={y!r} did not reach tolerance in {max_iters} iterations"
    )


def _series(tab, child, x, cfg, depth):
    """Sum of inverse iterates of the child map, starting at the identity term.

    Returns (value, terms_used, tail_estimate, status). Certification:
    the last term is small relative to the partial sum and the geometric
    tail bound built from the last term ratio is below the (depth-scaled)
    series tolerance.
    """
    tol = max(cfg[0] * (0.1**depth), _SERIES_TOL_FLOOR)
    cap = cfg[2]
    max_terms = int(cfg[3])

    total = x
    t_prev = x
    ratio = 0.5
    grew = 0
    tail = math.inf
    for k in range(1, max_terms + 1):
        g = t_prev * ratio
        t = _invert(tab, child, t_prev, cfg, depth + 1, g if 0.0 < g < t_prev else -1.0)
        total += t
        if total > cap or t > cap:
            return total, k, tail, ST_DIVERGED
        if t <= 0.0 or t < 1e-300:
            return total, k, 0.0, ST_OK  # terms underflowed; tail is zero
        ratio = t / t_prev
        if ratio >= 1.0:
            grew += 1
            if grew >= 8:
                return total, k, tail, ST_DIVERGED
        else:
            grew = 0
            tail = t * ratio / (1.0 - ratio)
            if t <= tol * (1.0 + total) and tail <= tol:
                return total, k, tail, ST_OK
        if k >= SERIES_GUARD_TERMS and ratio >= SERIES_GUARD_RATIO:
            return total, k, tail, ST_UNCERTIFIED
        t_prev = t
    return total, max_terms, tail, ST_UNCERTIFIED


def _raise_series(status, x):
    if status == ST_OK:
        return
    if status == ST_DIVERGED:
        raise SeriesDivergenceError(
            f"series of inverse iterates diverges at x={x!r} (cap exceeded)"
        )
    raise SeriesUndeterminedError(
        f"series of inverse iterates at x={x!r} reached the term cap without "
        "certifying a geometric tail"
    )


# ---------------------------------------------------------------------------
# public API (mirrored by the Cython engine)
# ---------------------------------------------------------------------------


def eval_scalar(tab, node, x, cfg):
    if not (x > 0.0 and math.isfinite(x)):
        raise DomainError(f"maps are defined on (0, inf); got x={x!r}")
    return _eval(tab, node, float(x), cfg, 0)


def invert_scalar(tab, node, y, cfg, guess=-1.0):
    if not (y > 0.0 and math.isfinite(y)):
        raise DomainError(f"inverse targets must lie in (0, inf); got y={y!r}")
    return _invert(tab, node, float(y), cfg, 0, float(guess))


def series_stats(tab, child, x, cfg, depth=0):
    """Non-raising variant: returns (value, terms, tail_estimate, status)."""
    if not (x > 0.0 and math.isfinite(x)):
        raise DomainError(f"maps are defined on (0, inf); got x={x!r}")
    return _series(tab, child, float(x), cfg, depth)


def eval_many(tab, node, xs, cfg):
    out = np.empty(len(xs), dtype=np.float64)
    for i, x in enumerate(xs):
        out[i] = eval_scalar(tab, node, float(x), cfg)
    return out


def d_eval_many(tab, f_node, g_node, fg_node, op_kind, xs, ys, cfg):
    """Evaluate (fg)^{-1}(f(x) <op> g(y)) pointwise; op_kind 0=add, 1=mul.

    Consecutive targets warm-start the inversion, which matters on grids.
    """
    n = len(xs)
    out = np.empty(n, dtype=np.float64)
    guess = -1.0
    for i in range(n):
        u = eval_scalar(tab, f_node, float(xs[i]), cfg)
        v = eval_scalar(tab, g_node, float(ys[i]), cfg)
        s = u + v if op_kind == 0 else u * v
        if not (s > 0.0 and math.isfinite(s)):
            raise DomainError(f"combined value {s!r} left (0, inf)")
        r = _invert(tab, fg_node, s, cfg, 0, guess)
        out[i] = r
        guess = r
    return out
