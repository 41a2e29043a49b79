"""Compute backend selection.

The compiled kernel is preferred when available; set ITERMEANS_PURE_PYTHON=1
to force the pure-Python engine. Both expose the same module-level API
(Table, eval_scalar, invert_scalar, series_stats, eval_many, d_eval_many).
"""

import os

if os.environ.get("ITERMEANS_PURE_PYTHON"):
    from . import pyengine as engine
else:
    try:
        from . import engine  # type: ignore[no-redef]
    except ImportError:
        from . import pyengine as engine

BACKEND = engine.BACKEND

__all__ = ["engine", "BACKEND"]
