"""Benchmark the compiled kernel against the pure-Python fallback.

Run with ``python -m itermeans.bench``. Workloads cover the hot paths:
expression evaluation, bracketed inversion, inverse-iterate series, mean
evaluation over a grid, and a two-level series tower. Both engines consume
identical tables, so the timings are apples to apples.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import nodes as N
from ._core import pyengine
from .config import DEFAULT_CONFIG
from .maps import MonotoneMap
from .series import series_map

try:
    from ._core import engine as compiled
    if compiled.BACKEND != "cython":
        compiled = None
except ImportError:  # pragma: no cover - depends on the build
    compiled = None


def _engines():
    engines = [("python", pyengine)]
    if compiled is not None:
        engines.append(("cython", compiled))
    return engines


def _build(eng, *pnodes):
    arrays, indices = N.build_table_arrays(*pnodes)
    return eng.Table(*arrays), indices


def _workloads():
    """Return (name, setup(eng) -> callable) pairs; the callable is timed."""
    kt = DEFAULT_CONFIG.kernel_tuple()
    r = MonotoneMap.from_expr("p*x^2/(x+1)", {"p": 0.5})
    g = r.inverse()
    f_series = N.PSeries(g.node)
    h = MonotoneMap.from_expr("2*x+x^2")
    g_tower = series_map(h).node
    f_tower = N.PSeries(g_tower)

    xs_eval = np.geomspace(0.01, 100.0, 20000)
    ys_inv = np.geomspace(0.01, 40.0, 2000)
    xs_series = np.geomspace(0.1, 10.0, 300)
    mesh = np.geomspace(0.1, 10.0, 15)
    MX, MY = np.meshgrid(mesh, mesh, indexing="ij")
    xs_tower = np.geomspace(0.5, 2.0, 10)

    def expr_eval(eng):
        tab, (root,) = _build(eng, r.node)
        return lambda: eng.eval_many(tab, root, xs_eval, kt)

    def inversion(eng):
        tab, (root,) = _build(eng, r.node)

        def run():
            for y in ys_inv:
                eng.invert_scalar(tab, root, float(y), kt)

        return run

    def series(eng):
        tab, (root,) = _build(eng, f_series)
        return lambda: eng.eval_many(tab, root, xs_series, kt)

    def mean_grid(eng):
        fs = N.PSeries(g.node)
        pullback = N.sum_nodes(g.node, fs)
        tab, (fi, gi, pi) = _build(eng, fs, g.node, pullback)
        return lambda: eng.d_eval_many(
            tab, fi, gi, pi, 0, MX.ravel(), MY.ravel(), kt
        )

    def tower(eng):
        tab, (root,) = _build(eng, f_tower)
        return lambda: eng.eval_many(tab, root, xs_tower, kt)

    return [
        ("expression eval x20000", expr_eval),
        ("numeric inversion x2000", inversion),
        ("inverse-iterate series x300", series),
        ("iterative mean 15x15 grid", mean_grid),
        ("two-level series tower x10", tower),
    ]


def run(repeat: int = 3) -> list:
    rows = []
    for name, setup in _workloads():
        timings = {}
        for eng_name, eng in _engines():
            fn = setup(eng)
            fn()  # warm-up (table caching, code paths)
            best = float("inf")
            for _ in range(repeat):
                t0 = time.perf_counter()
                fn()
                best = min(best, time.perf_counter() - t0)
            timings[eng_name] = best
        rows.append((name, timings))
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="itermeans.bench")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    rows = run(args.repeat)
    have_compiled = compiled is not None
    header = f"{'workload':<32}{'python':>12}"
    if have_compiled:
        header += f"{'cython':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, timings in rows:
        line = f"{name:<32}{timings['python'] * 1e3:>10.2f}ms"
        if have_compiled:
            spd = timings["python"] / timings["cython"]
            line += f"{timings['cython'] * 1e3:>10.2f}ms{spd:>9.1f}x"
        print(line)
    if not have_compiled:
        print("(compiled backend not available; showing the fallback only)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
