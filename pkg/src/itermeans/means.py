"""Mean candidates and the mean axioms.

Constructors cover: the two-function candidate (f o g)^{-1}(f(x) (+) g(y))
over a bisymmetric operation, the iterative mean generated by a map above
the identity (outer function = sum of inverse iterates), its twin generated
by a map below the identity, the multiplicative variant, generalized
weighted quasiarithmetic means, the arithmetic mean, and scalar multiples
of it (useful as deliberate non-means). ``check_mean`` grid-tests
reflexivity, internality, strictness, and symmetry, attaching re-evaluable
witnesses to every failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import nodes as N
from . import series as S
from ._core import engine
from .config import DEFAULT_CONFIG, NumericsConfig
from .errors import DomainError, ItermeansError
from .maps import MonotoneMap

# --------------------------------------------------------------------------
# binary operations
# --------------------------------------------------------------------------


@dataclass
class GroupoidOp:
    """A two-argument operation with a bisymmetry certification status.

    ``certified`` means no sampled quadruple violated
    (u+v)+(w+z) = (u+w)+(v+z) (with + standing for the operation); a
    refutation carries the violating quadruple.
    """

    kind: str  # add | mul | custom
    fn: Optional[Callable[[float, float], float]] = None
    bisymmetry: str = "unchecked"  # unchecked | certified | refuted
    witness: Optional[tuple] = None

    def apply(self, u: float, v: float) -> float:
        if self.kind == "add":
            return u + v
        if self.kind == "mul":
            return u * v
        return float(self.fn(u, v))

    @property
    def builtin(self) -> bool:
        return self.kind in ("add", "mul")


def addition() -> GroupoidOp:
    return GroupoidOp("add")


def multiplication() -> GroupoidOp:
    return GroupoidOp("mul")


def custom_op(fn: Callable[[float, float], float]) -> GroupoidOp:
    return GroupoidOp("custom", fn)


# --------------------------------------------------------------------------
# check report
# --------------------------------------------------------------------------


@dataclass
class CheckOutcome:
    passed: bool
    witness: Optional[dict] = None

    def to_dict(self):
        d = {"pass": self.passed}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass
class MeanCheckReport:
    """Grid verdicts for the four mean axioms; failures carry witnesses that
    re-evaluate to the reported values."""

    reflexive: CheckOutcome
    internal: CheckOutcome
    strict: CheckOutcome
    symmetric: CheckOutcome
    tolerances: dict
    grid: dict
    partial: bool = False
    eval_failures: list = field(default_factory=list)

    @property
    def is_mean(self) -> bool:
        """The mean axioms proper: reflexive, internal, strict. Symmetry is
        reported but is not an axiom (weighted means fail it by design)."""
        return (
            self.reflexive.passed
            and self.internal.passed
            and self.strict.passed
            and not self.partial
        )

    def to_dict(self):
        return {
            "schema_version": 1,
            "reflexive": self.reflexive.to_dict(),
            "internal": self.internal.to_dict(),
            "strict": self.strict.to_dict(),
            "symmetric": self.symmetric.to_dict(),
            "grid": self.grid,
            "tolerances": self.tolerances,
            "partial": self.partial,
            "eval_failures": self.eval_failures,
        }


# --------------------------------------------------------------------------
# mean objects
# --------------------------------------------------------------------------


class MeanObject:
    """A two-variable function on (0, inf)^2 with construction provenance
    and a cached axiom report. Evaluation is pure; instances are safe to
    share. The report cache is written once by check_mean."""

    def __init__(self, kind, provenance, f=None, g=None, op=None, pullback=None,
                 base=None, factor=None, fn=None):
        self.kind = kind  # pullback | scaled | callable
        self.provenance = provenance
        self.f = f
        self.g = g
        self.op = op
        self.pullback = pullback  # MonotoneMap inverted at evaluation time
        self.base = base
        self.factor = factor
        self.fn = fn
        self.checks: Optional[MeanCheckReport] = None
        self._multi = None

    def __repr__(self):
        return f"MeanObject({self.provenance})"

    def _tables(self):
        if self._multi is None:
            tab, (fi, gi, pi) = N.build_multi_table(
                self.f.node, self.g.node, self.pullback.node
            )
            self._multi = (tab, fi, gi, pi)
        return self._multi

    def evaluate(self, x: float, y: float, cfg: NumericsConfig = DEFAULT_CONFIG) -> float:
        if self.kind == "scaled":
            return self.factor * self.base.evaluate(x, y, cfg)
        if self.kind == "callable":
            return float(self.fn(x, y))
        tab, fi, gi, pi = self._tables()
        kt = cfg.kernel_tuple()
        u = engine.eval_scalar(tab, fi, float(x), kt)
        v = engine.eval_scalar(tab, gi, float(y), kt)
        s = self.op.apply(u, v)
        if not np.isfinite(s) or s <= 0.0:
            raise DomainError(f"combined value {s!r} left (0, inf)")
        return engine.invert_scalar(tab, pi, s, kt)

    __call__ = evaluate

    def eval_grid(self, X, Y, cfg: NumericsConfig = DEFAULT_CONFIG) -> np.ndarray:
        """Evaluate on broadcast-compatible arrays, preserving shape."""
        X = np.asarray(X, dtype=np.float64)
        Y = np.asarray(Y, dtype=np.float64)
        shape = np.broadcast_shapes(X.shape, Y.shape)
        xs = np.broadcast_to(X, shape).ravel()
        ys = np.broadcast_to(Y, shape).ravel()
        if self.kind == "pullback" and self.op.builtin:
            tab, fi, gi, pi = self._tables()
            opk = 0 if self.op.kind == "add" else 1
            out = engine.d_eval_many(tab, fi, gi, pi, opk, xs, ys, cfg.kernel_tuple())
            return np.asarray(out).reshape(shape)
        out = np.empty(xs.shape[0], dtype=np.float64)
        for i in range(xs.shape[0]):
            out[i] = self.evaluate(xs[i], ys[i], cfg)
        return out.reshape(shape)


def _pullback_mean(f, g, op, pullback, provenance) -> MeanObject:
    return MeanObject("pullback", provenance, f=f, g=g, op=op, pullback=pullback)


def make_composition_mean(
    f: MonotoneMap,
    g: MonotoneMap,
    op: GroupoidOp = None,
    cfg: NumericsConfig = DEFAULT_CONFIG,
) -> MeanObject:
    """(f o g)^{-1}(f(x) (+) g(y)) for increasing bijections f, g.

    The caller is responsible for having validated f and g; reflexivity of
    the result is a property to check, not a given.
    """
    if op is None:
        op = addition()
    return _pullback_mean(
        f, g, op, f.compose(g),
        {"kind": "composition", "f": f.label, "g": g.label, "op": op.kind},
    )


def make_iterative_mean(
    g: MonotoneMap, cfg: NumericsConfig = DEFAULT_CONFIG
) -> MeanObject:
    """The strict mean generated by a map above the identity: the outer
    function is the sum of inverse iterates of g, so the candidate is
    reflexive by construction. The pullback map is the pointwise sum g + f,
    which equals f o g for this particular f."""
    f = S.series_map(g, cfg)
    pullback = MonotoneMap(
        N.sum_nodes(g.node, f.node), f"shifted-sum-inv-iterates({g.label})"
    )
    return _pullback_mean(
        f, g, addition(), pullback,
        {"kind": "iterative_from_g", "g": g.label},
    )


def make_iterative_mean_from_r(
    r: MonotoneMap, cfg: NumericsConfig = DEFAULT_CONFIG
) -> MeanObject:
    """The iterative mean of a generator below the identity with a
    convergent sum of forward iterates; equals the mean generated by the
    inverse map."""
    cls = r.classify_displacement(cfg)
    if not cls.below:
        raise ItermeansError(
            f"generator {r.label!r} must sit strictly below the identity "
            f"(classified {cls.verdict})"
        )
    mean = make_iterative_mean(r.inverse(), cfg)
    mean.provenance = {"kind": "iterative_from_r", "r": r.label}
    return mean


def make_product_mean(
    f: MonotoneMap, g: MonotoneMap, cfg: NumericsConfig = DEFAULT_CONFIG
) -> MeanObject:
    """The multiplicative variant: (f o g)^{-1}(f(x) * g(y)). Constructed
    and evaluated like the additive candidate but with no axiom claims."""
    mean = make_composition_mean(f, g, multiplication(), cfg)
    mean.provenance = {"kind": "multiplicative", "f": f.label, "g": g.label}
    return mean


def make_gwqam(
    phi: MonotoneMap, psi: MonotoneMap, cfg: NumericsConfig = DEFAULT_CONFIG
) -> MeanObject:
    """Generalized weighted quasiarithmetic mean
    (phi + psi)^{-1}(phi(x) + psi(y)) for increasing phi, psi."""
    return _pullback_mean(
        phi, psi, addition(), phi + psi,
        {"kind": "gwqam", "phi": phi.label, "psi": psi.label},
    )


def arithmetic_mean() -> MeanObject:
    ident = MonotoneMap.identity()
    mean = make_gwqam(ident, ident)
    mean.provenance = {"kind": "arithmetic"}
    return mean


def scaled_arithmetic(factor: float) -> MeanObject:
    """factor * (x + y)/2; not a mean unless factor == 1."""
    return MeanObject(
        "scaled",
        {"kind": "scaled_arithmetic", "factor": factor},
        base=arithmetic_mean(),
        factor=float(factor),
    )


# --------------------------------------------------------------------------
# axiom checking
# --------------------------------------------------------------------------


def _grid_values(M: MeanObject, xs, cfg):
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    failures = []
    try:
        vals = M.eval_grid(X, Y, cfg)
        return vals, failures
    except ItermeansError:
        pass  # fall back to pointwise evaluation and record the holes
    n = len(xs)
    vals = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            try:
                vals[i, j] = M.evaluate(xs[i], xs[j], cfg)
            except ItermeansError as exc:
                if len(failures) < 16:
                    failures.append(
                        {"x": float(xs[i]), "y": float(xs[j]), "error": str(exc)}
                    )
    return vals, failures


def check_mean(M: MeanObject, cfg: NumericsConfig = DEFAULT_CONFIG) -> MeanCheckReport:
    """Grid-check reflexivity, internality, strictness (off the diagonal
    only; the sharp inequalities are vacuous on it), and symmetry."""
    xs = cfg.grid.points()
    vals, failures = _grid_values(M, xs, cfg)
    valid = np.isfinite(vals)
    n = len(xs)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    lo = np.minimum(X, Y)
    hi = np.maximum(X, Y)

    def worst(mask, violation):
        # index of the largest violation among masked entries
        v = np.where(mask, violation, -np.inf)
        i, j = np.unravel_index(int(np.argmax(v)), v.shape)
        return i, j

    # reflexivity (diagonal, relative)
    diag = np.diag(vals)
    dmask = np.isfinite(diag)
    rerr = np.abs(diag - xs) / (1.0 + xs)
    rbad = dmask & (rerr > cfg.reflexive_tol)
    if rbad.any():
        i = int(np.argmax(np.where(rbad, rerr, -np.inf)))
        reflexive = CheckOutcome(
            False, {"x": float(xs[i]), "value": float(diag[i])}
        )
    else:
        reflexive = CheckOutcome(True)

    # internality (whole grid, relative slack)
    slack = cfg.internal_tol * (1.0 + hi)
    viol = np.maximum(lo - vals, vals - hi)
    ibad = valid & (viol > slack)
    if ibad.any():
        i, j = worst(ibad, viol)
        internal = CheckOutcome(
            False,
            {
                "x": float(X[i, j]),
                "y": float(Y[i, j]),
                "value": float(vals[i, j]),
                "bounds": [float(lo[i, j]), float(hi[i, j])],
            },
        )
    else:
        internal = CheckOutcome(True)

    # strictness (off-diagonal pairs with a real margin)
    margin = hi - lo
    smask = valid & (margin > 1e-6 * (1.0 + hi))
    edge = np.minimum(vals - lo, hi - vals)
    sbad = smask & (edge <= cfg.strict_tol * (1.0 + hi))
    if sbad.any():
        i, j = worst(sbad, -edge)
        strict = CheckOutcome(
            False,
            {
                "x": float(X[i, j]),
                "y": float(Y[i, j]),
                "value": float(vals[i, j]),
                "bounds": [float(lo[i, j]), float(hi[i, j])],
            },
        )
    else:
        strict = CheckOutcome(True)

    # symmetry
    both = valid & valid.T
    serr = np.abs(vals - vals.T) / (1.0 + np.abs(vals))
    ybad = both & (serr > cfg.symmetry_tol)
    if ybad.any():
        i, j = worst(ybad, serr)
        symmetric = CheckOutcome(
            False,
            {
                "x": float(X[i, j]),
                "y": float(Y[i, j]),
                "value_xy": float(vals[i, j]),
                "value_yx": float(vals[j, i]),
            },
        )
    else:
        symmetric = CheckOutcome(True)

    report = MeanCheckReport(
        reflexive=reflexive,
        internal=internal,
        strict=strict,
        symmetric=symmetric,
        tolerances={
            "reflexive": cfg.reflexive_tol,
            "internal": cfg.internal_tol,
            "strict": cfg.strict_tol,
            "symmetric": cfg.symmetry_tol,
        },
        grid=cfg.grid.to_dict(),
        partial=not bool(valid.all()),
        eval_failures=failures,
    )
    if M.checks is None:
        M.checks = report
    return report


# --------------------------------------------------------------------------
# symmetric-shift reduction
# --------------------------------------------------------------------------


@dataclass
class ShiftSymmetryReport:
    """Evidence for the collapse of a symmetric candidate built from f and
    g = f + c: reflexivity forces the doubling identity
    f(f(x) + c) = 2 f(x) + c, hence f(x) = 2x - c, and the candidate reduces
    to the arithmetic mean."""

    hypothesis_ok: bool
    hypothesis_witness: Optional[dict]
    identity_residual: float
    doubling_residual: float
    arithmetic_residual: float
    mean_check: Optional[MeanCheckReport]

    @property
    def collapses_to_arithmetic(self) -> bool:
        return self.hypothesis_ok and self.arithmetic_residual < 1e-8

    def to_dict(self):
        return {
            "schema_version": 1,
            "hypothesis_ok": self.hypothesis_ok,
            "hypothesis_witness": self.hypothesis_witness,
            "identity_residual": self.identity_residual,
            "doubling_residual": self.doubling_residual,
            "arithmetic_residual": self.arithmetic_residual,
            "mean_check": self.mean_check.to_dict() if self.mean_check else None,
        }


def shift_symmetry_reduction(
    f: MonotoneMap, c: float, cfg: NumericsConfig = DEFAULT_CONFIG
) -> ShiftSymmetryReport:
    """With g = f + c, check the doubling identity and that the candidate
    equals the arithmetic mean on the grid. A map leaving (0, inf) is a
    hypothesis violation, reported rather than raised."""
    xs = cfg.grid.points()
    g = MonotoneMap(
        N.compose_nodes(N.PAffine(1.0, float(c)), f.node), f"({f.label})+{c}"
    )
    try:
        fx = f.eval_many(xs, cfg)
        gx = g.eval_many(xs, cfg)
    except ItermeansError as exc:
        return ShiftSymmetryReport(
            hypothesis_ok=False,
            hypothesis_witness={"error": str(exc)},
            identity_residual=float("nan"),
            doubling_residual=float("nan"),
            arithmetic_residual=float("nan"),
            mean_check=None,
        )
    # doubling identity 2 f(x) + c = f(f(x) + c)
    try:
        ffc = f.eval_many(fx + c, cfg)
    except ItermeansError as exc:
        return ShiftSymmetryReport(
            hypothesis_ok=False,
            hypothesis_witness={"error": str(exc)},
            identity_residual=float("nan"),
            doubling_residual=float("nan"),
            arithmetic_residual=float("nan"),
            mean_check=None,
        )
    identity_residual = float(np.abs(ffc - 2.0 * fx - c).max())
    doubling_residual = float(np.abs(fx - (2.0 * xs - c)).max())

    D = make_composition_mean(f, g, addition(), cfg)
    A = arithmetic_mean()
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    try:
        dv = D.eval_grid(X, Y, cfg)
        av = A.eval_grid(X, Y, cfg)
        arithmetic_residual = float(np.abs(dv - av).max())
    except ItermeansError as exc:
        return ShiftSymmetryReport(
            hypothesis_ok=False,
            hypothesis_witness={"error": str(exc)},
            identity_residual=identity_residual,
            doubling_residual=doubling_residual,
            arithmetic_residual=float("nan"),
            mean_check=None,
        )
    return ShiftSymmetryReport(
        hypothesis_ok=True,
        hypothesis_witness=None,
        identity_residual=identity_residual,
        doubling_residual=doubling_residual,
        arithmetic_residual=arithmetic_residual,
        mean_check=check_mean(D, cfg),
    )
