# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled compute engine.

Same table format and semantics as pyengine; the hot loops (expression
stack programs, bracketed inversion, inverse-iterate series) run in C.
"""

from libc.math cimport pow, fabs, INFINITY

import numpy as np

from ..errors import (
    BracketError,
    DomainError,
    SeriesDivergenceError,
    SeriesUndeterminedError,
    ToleranceError,
)

BACKEND = "cython"

cdef enum:
    K_AFFINE = 0
    K_POWC = 1
    K_EXPR = 2
    K_INVERSE = 3
    K_COMPOSE = 4
    K_SERIES = 5
    K_SUM2 = 6
    K_PYFUNC = 7

    OP_X = 0
    OP_CONST = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_DIV = 5
    OP_POWI = 6
    OP_POWQ = 7
    OP_NODE = 8

    ST_OK = 0
    ST_DIVERGED = 4
    ST_UNCERTIFIED = 5

    STACK_MAX = 64
    SERIES_GUARD_TERMS = 1000

cdef double SERIES_GUARD_RATIO = 0.999
cdef double SERIES_TOL_FLOOR = 1e-15


cdef class Table:
    """Flattened, immutable map tree plus any attached Python callables."""

    cdef int[::1] kind, a1, a2, a3, code
    cdef double[::1] p1, p2, p3, consts
    cdef public list pyfuncs

    def __init__(self, kind, a1, a2, a3, p1, p2, p3, code, consts, pyfuncs):
        self.kind = np.ascontiguousarray(kind, dtype=np.intc)
        self.a1 = np.ascontiguousarray(a1, dtype=np.intc)
        self.a2 = np.ascontiguousarray(a2, dtype=np.intc)
        self.a3 = np.ascontiguousarray(a3, dtype=np.intc)
        self.p1 = np.ascontiguousarray(p1, dtype=np.float64)
        self.p2 = np.ascontiguousarray(p2, dtype=np.float64)
        self.p3 = np.ascontiguousarray(p3, dtype=np.float64)
        if len(code):
            self.code = np.ascontiguousarray(code, dtype=np.intc)
        else:
            self.code = np.zeros(1, dtype=np.intc)
        if len(consts):
            self.consts = np.ascontiguousarray(consts, dtype=np.float64)
        else:
            self.consts = np.zeros(1, dtype=np.float64)
        self.pyfuncs = list(pyfuncs)

    # exposed for series probing from the Python layer
    def child_of(self, int node):
        return self.a1[node]


cdef inline bint _bad(double v) noexcept:
    # not a positive finite number (nan fails v > 0.0)
    return not (v > 0.0 and v < INFINITY)


cdef inline bint _nonfinite(double v) noexcept:
    return not (v > -INFINITY and v < INFINITY)


cdef double c_eval(Table t, int node, double x, double* cfg, int depth) except? -1e308:
    cdef int k = t.kind[node]
    cdef double v, tail
    cdef int terms, status
    if k == K_AFFINE:
        v = t.p1[node] * x + t.p2[node]
    elif k == K_POWC:
        v = t.p1[node] * pow(x, t.p2[node] / t.p3[node])
    elif k == K_EXPR:
        v = c_vm(t, node, x, cfg, depth)
    elif k == K_INVERSE:
        return c_invert(t, t.a1[node], x, cfg, depth, -1.0)
    elif k == K_COMPOSE:
        v = c_eval(t, t.a2[node], x, cfg, depth)
        return c_eval(t, t.a1[node], v, cfg, depth)
    elif k == K_SERIES:
        status = c_series(t, t.a1[node], x, cfg, depth, &v, &tail, &terms)
        if status == ST_DIVERGED:
            raise SeriesDivergenceError(
                f"series of inverse iterates diverges at x={x!r} (cap exceeded)"
            )
        if status != ST_OK:
            raise SeriesUndeterminedError(
                f"series of inverse iterates at x={x!r} reached the term cap "
                "without certifying a geometric tail"
            )
        return v
    elif k == K_SUM2:
        v = c_eval(t, t.a1[node], x, cfg, depth)
        v = v + c_eval(t, t.a2[node], x, cfg, depth)
    else:  # K_PYFUNC
        v = <double> t.pyfuncs[t.a1[node]](x)
    if _bad(v):
        raise DomainError(f"map evaluation at x={x!r} produced {v!r}")
    return v


cdef double c_vm(Table t, int node, double x, double* cfg, int depth) except? -1e308:
    cdef double[STACK_MAX] stack
    cdef int sp = 0
    cdef int i = t.a1[node]
    cdef int end = i + t.a2[node]
    cdef int op, arg
    cdef double b, v, e
    while i < end:
        op = t.code[i]
        arg = t.code[i + 1]
        i += 2
        if op == OP_X:
            stack[sp] = x
            sp += 1
        elif op == OP_CONST:
            stack[sp] = t.consts[arg]
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            stack[sp - 1] += stack[sp]
        elif op == OP_SUB:
            sp -= 1
            stack[sp - 1] -= stack[sp]
        elif op == OP_MUL:
            sp -= 1
            stack[sp - 1] *= stack[sp]
        elif op == OP_DIV:
            sp -= 1
            b = stack[sp]
            if b == 0.0:
                raise DomainError(f"division by zero while evaluating at x={x!r}")
            stack[sp - 1] /= b
        elif op == OP_POWI:
            v = stack[sp - 1]
            if v == 0.0 and arg < 0:
                raise DomainError(f"0 raised to negative power at x={x!r}")
            stack[sp - 1] = pow(v, <double> arg)
        elif op == OP_POWQ:
            v = stack[sp - 1]
            e = t.consts[arg]
            if v < 0.0 or (v == 0.0 and e < 0.0):
                raise DomainError(
                    f"fractional power of non-positive base {v!r} at x={x!r}"
                )
            stack[sp - 1] = pow(v, e)
        else:  # OP_NODE
            stack[sp - 1] = c_eval(t, arg, stack[sp - 1], cfg, depth)
    v = stack[sp - 1]
    if _nonfinite(v):
        raise DomainError(f"expression evaluation at x={x!r} produced {v!r}")
    return v


cdef double c_invert(Table t, int node, double y, double* cfg, int depth, double guess) except? -1e308:
    cdef int k = t.kind[node]
    cdef double a, c, p, q, v
    if k == K_AFFINE:
        a = t.p1[node]
        if a == 0.0:
            raise DomainError("cannot invert a constant map")
        v = (y - t.p2[node]) / a
        if _bad(v):
            raise DomainError(f"inverse of affine map at y={y!r} leaves (0, inf)")
        return v
    if k == K_POWC:
        c = t.p1[node]
        p = t.p2[node]
        q = t.p3[node]
        if p == 0.0:
            raise DomainError("cannot invert a constant map")
        v = pow(y / c, q / p)
        if _bad(v):
            raise DomainError(f"inverse of power map at y={y!r} leaves (0, inf)")
        return v
    if k == K_INVERSE:
        return c_eval(t, t.a1[node], y, cfg, depth)
    if k == K_COMPOSE:
        v = c_invert(t, t.a1[node], y, cfg, depth, -1.0)
        return c_invert(t, t.a2[node], v, cfg, depth, guess)
    if k == K_PYFUNC and t.a2[node] >= 0:
        v = <double> t.pyfuncs[t.a2[node]](y)
        if _bad(v):
            raise DomainError(f"registered inverse at y={y!r} produced {v!r}")
        return v
    return c_num_invert(t, node, y, cfg, depth, guess)


cdef double c_num_invert(Table t, int node, double y, double* cfg, int depth, double guess) except? -1e308:
    cdef double inv_tol = cfg[1]
    cdef int max_iters = <int> cfg[4]
    cdef int max_expand = <int> cfg[5]
    cdef double ftol = inv_tol * (1.0 if fabs(y) < 1.0 else fabs(y))
    cdef double x0, f0, lo, hi, flo, fhi, width, xm, fm, collapse
    cdef int i, stall
    cdef bint found

    x0 = guess if (guess > 0.0 and guess < INFINITY) else 1.0
    f0 = c_eval(t, node, x0, cfg, depth)
    if fabs(f0 - y) <= ftol:
        return x0

    if f0 < y:
        lo = x0
        flo = f0
        hi = x0
        fhi = f0
        found = False
        for i in range(max_expand):
            hi *= 2.0
            fhi = c_eval(t, node, hi, cfg, depth)
            if fhi >= y:
                found = True
                break
            lo = hi
            flo = fhi
        if not found:
            raise BracketError(
                f"no upper bracket for y={y!r} after {max_expand} doublings; "
                "the map does not appear to reach this value"
            )
    else:
        hi = x0
        fhi = f0
        lo = x0
        flo = f0
        found = False
        for i in range(max_expand):
            lo *= 0.5
            flo = c_eval(t, node, lo, cfg, depth)
            if flo <= y:
                found = True
                break
            hi = lo
            fhi = flo
        if not found:
            raise BracketError(
                f"no lower bracket for y={y!r} after {max_expand} halvings; "
                "the map does not appear to reach this value"
            )

    # invariant: flo <= y <= fhi
    stall = 0
    for i in range(max_iters):
        width = hi - lo
        if fhi > flo and stall < 2:
            xm = lo + (y - flo) * width / (fhi - flo)
            if not (lo < xm and xm < hi):
                xm = lo + 0.5 * width
        else:
            xm = lo + 0.5 * width
        fm = c_eval(t, node, xm, cfg, depth)
        if fabs(fm - y) <= ftol:
            return xm
        if fm < y:
            lo = xm
            flo = fm
        else:
            hi = xm
            fhi = fm
        if hi - lo > 0.5 * width:
            stall += 1
        else:
            stall = 0
        collapse = 4.0 * 2.2e-16 * (1.0 if hi < 1.0 else hi)
        if hi - lo <= collapse:
            return 0.5 * (lo + hi)
    raise ToleranceError(
        f"inversion at y={y!r} did not reach tolerance in {max_iters} iterations"
    )


cdef int c_series(Table t, int child, double x, double* cfg, int depth,
                  double* out_val, double* out_tail, int* out_terms) except? -1:
    cdef double tol = cfg[0] * pow(0.1, depth)
    cdef double cap = cfg[2]
    cdef int max_terms = <int> cfg[3]
    cdef double total = x
    cdef double t_prev = x
    cdef double ratio = 0.5
    cdef double tail = INFINITY
    cdef double g, term
    cdef int grew = 0
    cdef int k

    if tol < SERIES_TOL_FLOOR:
        tol = SERIES_TOL_FLOOR

    for k in range(1, max_terms + 1):
        g = t_prev * ratio
        if not (0.0 < g and g < t_prev):
            g = -1.0
        term = c_invert(t, child, t_prev, cfg, depth + 1, g)
        total += term
        if total > cap or term > cap:
            out_val[0] = total
            out_tail[0] = tail
            out_terms[0] = k
            return ST_DIVERGED
        if term <= 0.0 or term < 1e-300:
            out_val[0] = total
            out_tail[0] = 0.0
            out_terms[0] = k
            return ST_OK
        ratio = term / t_prev
        if ratio >= 1.0:
            grew += 1
            if grew >= 8:
                out_val[0] = total
                out_tail[0] = tail
                out_terms[0] = k
                return ST_DIVERGED
        else:
            grew = 0
            tail = term * ratio / (1.0 - ratio)
            if term <= tol * (1.0 + total) and tail <= tol:
                out_val[0] = total
                out_tail[0] = tail
                out_terms[0] = k
                return ST_OK
        if k >= SERIES_GUARD_TERMS and ratio >= SERIES_GUARD_RATIO:
            out_val[0] = total
            out_tail[0] = tail
            out_terms[0] = k
            return ST_UNCERTIFIED
        t_prev = term
    out_val[0] = total
    out_tail[0] = tail
    out_terms[0] = max_terms
    return ST_UNCERTIFIED


cdef inline void _unpack(object cfg, double* out):
    out[0] = cfg[0]
    out[1] = cfg[1]
    out[2] = cfg[2]
    out[3] = cfg[3]
    out[4] = cfg[4]
    out[5] = cfg[5]


def eval_scalar(Table tab, int node, double x, cfg):
    cdef double c[6]
    _unpack(cfg, c)
    if not (x > 0.0 and x < INFINITY):
        raise DomainError(f"maps are defined on (0, inf); got x={x!r}")
    return c_eval(tab, node, x, c, 0)


def invert_scalar(Table tab, int node, double y, cfg, double guess=-1.0):
    cdef double c[6]
    _unpack(cfg, c)
    if not (y > 0.0 and y < INFINITY):
        raise DomainError(f"inverse targets must lie in (0, inf); got y={y!r}")
    return c_invert(tab, node, y, c, 0, guess)


def series_stats(Table tab, int child, double x, cfg, int depth=0):
    """Non-raising variant: returns (value, terms, tail_estimate, status)."""
    cdef double c[6]
    cdef double val = 0.0
    cdef double tail = 0.0
    cdef int terms = 0
    cdef int status
    _unpack(cfg, c)
    if not (x > 0.0 and x < INFINITY):
        raise DomainError(f"maps are defined on (0, inf); got x={x!r}")
    status = c_series(tab, child, x, c, depth, &val, &tail, &terms)
    return val, terms, tail, status


def eval_many(Table tab, int node, xs, cfg):
    cdef double c[6]
    _unpack(cfg, c)
    cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    out = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef double x
    for i in range(xv.shape[0]):
        x = xv[i]
        if not (x > 0.0 and x < INFINITY):
            raise DomainError(f"maps are defined on (0, inf); got x={x!r}")
        ov[i] = c_eval(tab, node, x, c, 0)
    return out


def d_eval_many(Table tab, int f_node, int g_node, int fg_node, int op_kind,
                xs, ys, cfg):
    """Evaluate (fg)^{-1}(f(x) <op> g(y)) pointwise; op_kind 0=add, 1=mul.

    Consecutive targets warm-start the inversion, which matters on grids.
    """
    cdef double c[6]
    _unpack(cfg, c)
    cdef const double[::1] xv = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(ys, dtype=np.float64)
    out = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    cdef double u, v, s, r
    cdef double guess = -1.0
    for i in range(xv.shape[0]):
        u = c_eval(tab, f_node, xv[i], c, 0)
        v = c_eval(tab, g_node, yv[i], c, 0)
        s = u + v if op_kind == 0 else u * v
        if not (s > 0.0 and s < INFINITY):
            raise DomainError(f"combined value {s!r} left (0, inf)")
        r = c_invert(tab, fg_node, s, c, 0, guess)
        ov[i] = r
        guess = r
    return out
