"""Map-node algebra and compilation to flat kernel tables.

A map is represented as an immutable tree of small nodes. Construction goes
through the smart constructors below, which fold the closed forms the
kernels can invert exactly (affine and power shapes) so that linear examples
stay exact end to end. Everything else is compiled to a stack program or a
structural node and handled numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Tuple, Union

import numpy as np

from . import expr as E
from ._core import engine
from ._core.ops import (
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
    STACK_MAX,
)
from .errors import UnboundParameterError

# --------------------------------------------------------------------------
# node types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PAffine:
    a: float
    b: float = 0.0


@dataclass(frozen=True)
class PPowc:
    c: float
    p: int
    q: int


@dataclass(frozen=True)
class PExpr:
    ast: E.Node  # parameter-free (parameters folded to literals)


@dataclass(frozen=True)
class PInverse:
    child: "PNode"


@dataclass(frozen=True)
class PCompose:
    outer: "PNode"
    inner: "PNode"


@dataclass(frozen=True)
class PSeries:
    child: "PNode"


@dataclass(frozen=True)
class PSum2:
    left: "PNode"
    right: "PNode"


@dataclass(frozen=True)
class PPyfunc:
    fn: Callable[[float], float]
    inv: Optional[Callable[[float], float]] = None


PNode = Union[PAffine, PPowc, PExpr, PInverse, PCompose, PSeries, PSum2, PPyfunc]

IDENTITY = PAffine(1.0, 0.0)


def is_identity(n: PNode) -> bool:
    return isinstance(n, PAffine) and n.a == 1.0 and n.b == 0.0


def is_linear(n: PNode) -> bool:
    return isinstance(n, PAffine) and n.b == 0.0


# --------------------------------------------------------------------------
# smart constructors (fold what the kernels can treat exactly)
# --------------------------------------------------------------------------

_EXP_LIMIT = 10**6  # beyond this, rational exponents stop folding


def compose_nodes(outer: PNode, inner: PNode) -> PNode:
    if is_identity(outer):
        return inner
    if is_identity(inner):
        return outer
    if isinstance(outer, PAffine) and isinstance(inner, PAffine):
        return PAffine(outer.a * inner.a, outer.a * inner.b + outer.b)
    if isinstance(outer, PPowc) and isinstance(inner, PPowc):
        p, q = outer.p * inner.p, outer.q * inner.q
        if abs(p) <= _EXP_LIMIT and q <= _EXP_LIMIT:
            frac = Fraction(p, q)
            c = outer.c * math.pow(inner.c, outer.p / outer.q)
            return PPowc(c, frac.numerator, frac.denominator)
    if isinstance(outer, PAffine) and outer.b == 0.0 and isinstance(inner, PPowc):
        if outer.a > 0.0:
            return PPowc(outer.a * inner.c, inner.p, inner.q)
    if isinstance(outer, PPowc) and is_linear(inner) and inner.a > 0.0:
        return PPowc(outer.c * math.pow(inner.a, outer.p / outer.q), outer.p, outer.q)
    return PCompose(outer, inner)


def inverse_node(n: PNode) -> PNode:
    if isinstance(n, PInverse):
        return n.child
    if isinstance(n, PAffine) and n.a != 0.0:
        return PAffine(1.0 / n.a, -n.b / n.a)
    if isinstance(n, PPowc) and n.p != 0:
        frac = Fraction(n.q, n.p)
        return PPowc(math.pow(n.c, -n.q / n.p), frac.numerator, frac.denominator)
    if isinstance(n, PCompose):
        return compose_nodes(inverse_node(n.inner), inverse_node(n.outer))
    return PInverse(n)


def sum_nodes(left: PNode, right: PNode) -> PNode:
    if isinstance(left, PAffine) and isinstance(right, PAffine):
        return PAffine(left.a + right.a, left.b + right.b)
    return PSum2(left, right)


def iterate_node(n: PNode, times: int) -> PNode:
    if times == 0:
        return IDENTITY
    base = n if times > 0 else inverse_node(n)
    out = base
    for _ in range(abs(times) - 1):
        out = compose_nodes(base, out)
    return out


# --------------------------------------------------------------------------
# AST analysis: constant folding and closed-form pattern extraction
# --------------------------------------------------------------------------


def _fold(node: E.Node, params: dict) -> E.Node:
    """Bind parameters and collapse constant subtrees to literals."""
    if isinstance(node, E.Param):
        if node.name not in params:
            raise UnboundParameterError(f"parameter {node.name!r} is unbound")
        return E.Num(float(params[node.name]))
    if isinstance(node, E.BinOp):
        left = _fold(node.left, params)
        right = _fold(node.right, params)
        if isinstance(left, E.Num) and isinstance(right, E.Num):
            a, b = left.value, right.value
            if node.op == "+":
                v = a + b
            elif node.op == "-":
                v = a - b
            elif node.op == "*":
                v = a * b
            elif b != 0.0:
                v = a / b
            else:
                return E.BinOp(node.op, left, right)
            if math.isfinite(v):
                return E.Num(v)
        return E.BinOp(node.op, left, right)
    if isinstance(node, E.PowRat):
        base = _fold(node.base, params)
        if isinstance(base, E.Num) and base.value > 0.0:
            v = math.pow(base.value, node.p / node.q)
            if math.isfinite(v):
                return E.Num(v)
        return E.PowRat(base, node.p, node.q)
    if isinstance(node, E.Inv):
        return E.Inv(_fold(node.child, params))
    if isinstance(node, E.Comp):
        return E.Comp(_fold(node.outer, params), _fold(node.inner, params))
    return node


def _linear_parts(node: E.Node) -> Optional[Tuple[float, float]]:
    """Extract (a, b) with node == a*x + b, or None."""
    if isinstance(node, E.Var):
        return (1.0, 0.0)
    if isinstance(node, E.Num):
        return (0.0, node.value)
    if isinstance(node, E.BinOp):
        if node.op in ("+", "-"):
            l = _linear_parts(node.left)
            r = _linear_parts(node.right)
            if l is None or r is None:
                return None
            s = 1.0 if node.op == "+" else -1.0
            return (l[0] + s * r[0], l[1] + s * r[1])
        if node.op == "*":
            l = _linear_parts(node.left)
            r = _linear_parts(node.right)
            if l is None or r is None:
                return None
            if l[0] == 0.0:
                return (l[1] * r[0], l[1] * r[1])
            if r[0] == 0.0:
                return (r[1] * l[0], r[1] * l[1])
            return None
        if node.op == "/":
            l = _linear_parts(node.left)
            r = _linear_parts(node.right)
            if l is None or r is None or r[0] != 0.0 or r[1] == 0.0:
                return None
            return (l[0] / r[1], l[1] / r[1])
    if isinstance(node, E.PowRat) and node.p == node.q:
        return _linear_parts(node.base)
    return None


def _powc_parts(node: E.Node) -> Optional[Tuple[float, int, int]]:
    """Extract (c, p, q) with node == c * x**(p/q), or None."""
    if isinstance(node, E.Var):
        return (1.0, 1, 1)
    if isinstance(node, E.PowRat):
        inner = _powc_parts(node.base)
        if inner is None or inner[0] <= 0.0:
            return None
        c, p, q = inner
        pp, qq = p * node.p, q * node.q
        if abs(pp) > _EXP_LIMIT or qq > _EXP_LIMIT:
            return None
        frac = Fraction(pp, qq)
        return (math.pow(c, node.p / node.q), frac.numerator, frac.denominator)
    if isinstance(node, E.BinOp) and node.op == "*":
        for first, second in ((node.left, node.right), (node.right, node.left)):
            if isinstance(first, E.Num):
                inner = _powc_parts(second)
                if inner is not None:
                    return (first.value * inner[0], inner[1], inner[2])
        return None
    if isinstance(node, E.BinOp) and node.op == "/":
        if isinstance(node.right, E.Num) and node.right.value != 0.0:
            inner = _powc_parts(node.left)
            if inner is not None:
                return (inner[0] / node.right.value, inner[1], inner[2])
        if isinstance(node.left, E.Num):
            inner = _powc_parts(node.right)
            if inner is not None and inner[0] != 0.0:
                return (node.left.value / inner[0], -inner[1], inner[2])
        return None
    return None


def analyze(ast: E.Node, params: dict) -> PNode:
    """Turn a bound AST into a map node, folding recognized closed forms."""
    folded = _fold(ast, params)
    if isinstance(folded, E.Inv):
        return inverse_node(analyze(folded.child, {}))
    if isinstance(folded, E.Comp):
        return compose_nodes(analyze(folded.outer, {}), analyze(folded.inner, {}))
    lin = _linear_parts(folded)
    if lin is not None and lin[0] != 0.0:
        return PAffine(lin[0], lin[1])
    pw = _powc_parts(folded)
    if pw is not None and pw[0] > 0.0 and pw[1] != 0:
        if pw[1] == pw[2]:
            return PAffine(pw[0], 0.0)
        return PPowc(pw[0], pw[1], pw[2])
    return PExpr(folded)


# --------------------------------------------------------------------------
# flattening to kernel tables
# --------------------------------------------------------------------------


class _TableBuilder:
    def __init__(self):
        self.kind, self.a1, self.a2, self.a3 = [], [], [], []
        self.p1, self.p2, self.p3 = [], [], []
        self.code, self.consts = [], []
        self.pyfuncs = []
        self._memo = {}

    def _emit(self, kind, a1=0, a2=0, a3=0, p1=0.0, p2=0.0, p3=1.0) -> int:
        self.kind.append(kind)
        self.a1.append(a1)
        self.a2.append(a2)
        self.a3.append(a3)
        self.p1.append(p1)
        self.p2.append(p2)
        self.p3.append(p3)
        return len(self.kind) - 1

    def add(self, n: PNode) -> int:
        key = id(n)
        if key in self._memo:
            return self._memo[key]
        if isinstance(n, PAffine):
            idx = self._emit(K_AFFINE, p1=n.a, p2=n.b)
        elif isinstance(n, PPowc):
            idx = self._emit(K_POWC, p1=n.c, p2=float(n.p), p3=float(n.q))
        elif isinstance(n, PInverse):
            idx = self._emit(K_INVERSE, a1=self.add(n.child))
        elif isinstance(n, PCompose):
            outer = self.add(n.outer)
            inner = self.add(n.inner)
            idx = self._emit(K_COMPOSE, a1=outer, a2=inner)
        elif isinstance(n, PSeries):
            idx = self._emit(K_SERIES, a1=self.add(n.child))
        elif isinstance(n, PSum2):
            left = self.add(n.left)
            right = self.add(n.right)
            idx = self._emit(K_SUM2, a1=left, a2=right)
        elif isinstance(n, PPyfunc):
            fi = len(self.pyfuncs)
            self.pyfuncs.append(n.fn)
            ii = -1
            if n.inv is not None:
                ii = len(self.pyfuncs)
                self.pyfuncs.append(n.inv)
            idx = self._emit(K_PYFUNC, a1=fi, a2=ii)
        elif isinstance(n, PExpr):
            off = len(self.code)
            depth = self._compile(n.ast)
            if depth > STACK_MAX:
                raise ValueError(f"expression too deep for the VM stack ({depth})")
            idx = self._emit(K_EXPR, a1=off, a2=len(self.code) - off)
        else:  # pragma: no cover - exhaustive
            raise TypeError(f"unknown node {n!r}")
        self._memo[key] = idx
        return idx

    def _const(self, v: float) -> int:
        self.consts.append(float(v))
        return len(self.consts) - 1

    def _compile(self, ast: E.Node) -> int:
        """Emit postfix code; returns the maximum stack depth."""
        if isinstance(ast, E.Var):
            self.code += [OP_X, 0]
            return 1
        if isinstance(ast, E.Num):
            self.code += [OP_CONST, self._const(ast.value)]
            return 1
        if isinstance(ast, E.Param):
            raise UnboundParameterError(f"parameter {ast.name!r} is unbound")
        if isinstance(ast, E.BinOp):
            dl = self._compile(ast.left)
            dr = self._compile(ast.right)
            op = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}[ast.op]
            self.code += [op, 0]
            return max(dl, dr + 1)
        if isinstance(ast, E.PowRat):
            d = self._compile(ast.base)
            if ast.q == 1 and abs(ast.p) <= 16:
                self.code += [OP_POWI, ast.p]
            else:
                self.code += [OP_POWQ, self._const(ast.p / ast.q)]
            return d
        if isinstance(ast, (E.Inv, E.Comp)):
            # nested functional forms become their own map nodes
            sub = self.add(analyze(ast, {}))
            self.code += [OP_X, 0, OP_NODE, sub]
            return 1
        raise TypeError(f"unknown AST node {ast!r}")  # pragma: no cover

    def arrays(self):
        return (
            np.asarray(self.kind, dtype=np.intc),
            np.asarray(self.a1, dtype=np.intc),
            np.asarray(self.a2, dtype=np.intc),
            np.asarray(self.a3, dtype=np.intc),
            np.asarray(self.p1, dtype=np.float64),
            np.asarray(self.p2, dtype=np.float64),
            np.asarray(self.p3, dtype=np.float64),
            np.asarray(self.code, dtype=np.intc),
            np.asarray(self.consts, dtype=np.float64),
            self.pyfuncs,
        )

    def build(self):
        return engine.Table(*self.arrays())


def build_table(root: PNode):
    """Flatten a node tree; returns (table, root_index)."""
    b = _TableBuilder()
    idx = b.add(root)
    return b.build(), idx


def build_multi_table(*roots: PNode):
    """Flatten several trees into one shared table; returns (table, indices).

    Needed when a kernel routine touches more than one map per call."""
    b = _TableBuilder()
    indices = [b.add(r) for r in roots]
    return b.build(), indices


def build_table_arrays(*roots: PNode):
    """Flatten to raw arrays so a caller can instantiate the table under a
    specific backend (used by the benchmark and backend-parity tests)."""
    b = _TableBuilder()
    indices = [b.add(r) for r in roots]
    return b.arrays(), indices
