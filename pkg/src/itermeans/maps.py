"""Validated monotone bijections of (0, inf): evaluation, numerical
inversion, composition, signed integer iterates, and the displacement
trichotomy (above the identity, below it, or crossing it)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import expr as E
from . import nodes as N
from ._core import engine
from .config import DEFAULT_CONFIG, NumericsConfig
from .errors import DomainError


@dataclass(frozen=True)
class DisplacementClass:
    """Where a map sits relative to the identity on the sampled grid.

    ``Above`` means g(x) > x at every sample, ``Below`` means 0 < g(x) < x at
    every sample, and ``HasInteriorFixpoint`` carries an x with g(x) = x to
    tolerance. An increasing continuous bijection with no interior fixpoint
    must fall in one of the first two classes.
    """

    verdict: str  # Above | Below | HasInteriorFixpoint
    witness: Optional[float] = None

    @property
    def above(self) -> bool:
        return self.verdict == "Above"

    @property
    def below(self) -> bool:
        return self.verdict == "Below"


class MonotoneMap:
    """An immutable map of (0, inf) onto (0, inf), assumed strictly
    increasing. Evaluation is exact for affine/power closed forms and
    numeric elsewhere; inversion uses registered closed forms when the
    structure allows and bracketed root finding otherwise.

    Instances are safe to share across threads: construction freezes the
    node tree and the compiled table is append-only state derived from it.
    """

    __slots__ = ("node", "label", "_compiled")

    def __init__(self, node: N.PNode, label: str = "map"):
        object.__setattr__(self, "node", node)
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "_compiled", None)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("MonotoneMap is immutable")

    def __repr__(self):
        return f"MonotoneMap({self.label!r})"

    # -- construction -----------------------------------------------------

    @staticmethod
    def identity() -> "MonotoneMap":
        return MonotoneMap(N.IDENTITY, "x")

    @staticmethod
    def affine(a: float, b: float = 0.0, label: Optional[str] = None) -> "MonotoneMap":
        if label is None:
            label = f"{a}*x" if b == 0.0 else f"{a}*x{b:+}"
        return MonotoneMap(N.PAffine(float(a), float(b)), label)

    @staticmethod
    def power(p: int, q: int = 1, c: float = 1.0) -> "MonotoneMap":
        return MonotoneMap(N.PPowc(float(c), int(p), int(q)), f"{c}*x^{p}/{q}")

    @staticmethod
    def from_expr(
        source: Union[str, E.FuncExpr],
        params: Optional[dict] = None,
        label: Optional[str] = None,
    ) -> "MonotoneMap":
        fexpr = E.parse(source) if isinstance(source, str) else source
        if params:
            fexpr = fexpr.bind(**params)
        node = N.analyze(fexpr.root, fexpr.params)
        if label is None:
            label = fexpr.unparse()
        return MonotoneMap(node, label)

    @staticmethod
    def from_callable(
        fn: Callable[[float], float],
        inverse: Optional[Callable[[float], float]] = None,
        label: str = "callable",
    ) -> "MonotoneMap":
        return MonotoneMap(N.PPyfunc(fn, inverse), label)

    # -- kernel plumbing ---------------------------------------------------

    def _tab(self):
        compiled = self._compiled
        if compiled is None:
            compiled = N.build_table(self.node)
            object.__setattr__(self, "_compiled", compiled)
        return compiled

    # -- evaluation ---------------------------------------------------------

    def eval(self, x: float, cfg: NumericsConfig = DEFAULT_CONFIG) -> float:
        tab, root = self._tab()
        return engine.eval_scalar(tab, root, float(x), cfg.kernel_tuple())

    __call__ = eval

    def eval_many(self, xs, cfg: NumericsConfig = DEFAULT_CONFIG) -> np.ndarray:
        tab, root = self._tab()
        return engine.eval_many(tab, root, np.asarray(xs, dtype=np.float64), cfg.kernel_tuple())

    def inverse_eval(
        self, y: float, cfg: NumericsConfig = DEFAULT_CONFIG, guess: float = -1.0
    ) -> float:
        tab, root = self._tab()
        return engine.invert_scalar(tab, root, float(y), cfg.kernel_tuple(), guess)

    # -- algebra ------------------------------------------------------------

    def compose(self, inner: "MonotoneMap") -> "MonotoneMap":
        """self after inner: x -> self(inner(x))."""
        return MonotoneMap(
            N.compose_nodes(self.node, inner.node),
            f"comp({self.label}, {inner.label})",
        )

    def inverse(self) -> "MonotoneMap":
        return MonotoneMap(N.inverse_node(self.node), f"inv({self.label})")

    def iterate(self, n: int) -> "MonotoneMap":
        """n-fold self-composition; negative n iterates the inverse, 0 is
        the identity."""
        return MonotoneMap(N.iterate_node(self.node, int(n)), f"({self.label})^[{n}]")

    def __add__(self, other: "MonotoneMap") -> "MonotoneMap":
        return MonotoneMap(
            N.sum_nodes(self.node, other.node), f"({self.label})+({other.label})"
        )

    # -- classification ------------------------------------------------------

    def classify_displacement(
        self, cfg: NumericsConfig = DEFAULT_CONFIG
    ) -> DisplacementClass:
        """Sample the wide validation grid and return the trichotomy verdict.

        A sign change of g(x) - x between samples is refined by bisection to
        produce the fixpoint witness.
        """
        xs = cfg.validation_grid.points()
        ys = self.eval_many(xs, cfg)
        d = ys - xs
        zero_tol = 8.0 * np.finfo(float).eps * np.maximum(1.0, xs)
        near_zero = np.abs(d) <= zero_tol
        if near_zero.any():
            return DisplacementClass(
                "HasInteriorFixpoint", float(xs[int(np.argmax(near_zero))])
            )
        if (d > 0).all():
            return DisplacementClass("Above")
        if (d < 0).all():
            return DisplacementClass("Below")
        sign = np.sign(d)
        flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
        i = int(flips[0])
        lo, hi = float(xs[i]), float(xs[i + 1])
        dlo = float(d[i])
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            dm = self.eval(mid, cfg) - mid
            if dm == 0.0:
                lo = hi = mid
                break
            if (dm > 0) == (dlo > 0):
                lo, dlo = mid, dm
            else:
                hi = mid
        return DisplacementClass("HasInteriorFixpoint", 0.5 * (lo + hi))


# thin functional aliases mirroring the operation-style API


def compose(outer: MonotoneMap, inner: MonotoneMap) -> MonotoneMap:
    return outer.compose(inner)


def iterate(m: MonotoneMap, n: int) -> MonotoneMap:
    return m.iterate(n)


def classify_displacement(
    m: MonotoneMap, cfg: NumericsConfig = DEFAULT_CONFIG
) -> DisplacementClass:
    return m.classify_displacement(cfg)
