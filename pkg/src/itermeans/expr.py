"""A small textual language for one-variable functions on (0, inf).

Grammar::

    expr     := term (("+"|"-") term)*
    term     := factor (("*"|"/") factor)*
    factor   := base ("^" rational)?
    base     := "x" | number | ident | "(" expr ")"
              | "inv" "(" expr ")" | "comp" "(" expr "," expr ")"
    rational := integer ("/" positive-integer)?

Identifiers other than ``x``, ``inv`` and ``comp`` are named parameters that
must be bound to numbers before evaluation. Exponents are rational so that
inverses stay well-defined on the positive half-line. ``inv(e)`` denotes the
functional inverse of ``e``; ``comp(f, g)`` denotes f(g(x)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from .config import NumericsConfig, DEFAULT_CONFIG
from .errors import (
    DomainError,
    ExprSyntaxError,
    UnboundParameterError,
    UnknownIdentifierError,
)

# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class PowRat:
    base: "Node"
    p: int
    q: int  # q >= 1


@dataclass(frozen=True)
class Inv:
    child: "Node"


@dataclass(frozen=True)
class Comp:
    outer: "Node"
    inner: "Node"


Node = Union[Var, Num, Param, BinOp, PowRat, Inv, Comp]

# --------------------------------------------------------------------------
# tokenizer
# --------------------------------------------------------------------------

_SYMBOLS = set("+-*/^(),")


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in _SYMBOLS:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    while k < n and text[k].isdigit():
                        k += 1
                    j = k
            lit = text[i:j]
            try:
                value = float(lit)
            except ValueError:
                raise ExprSyntaxError(f"bad number literal {lit!r}", i) from None
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(("eof", None, n))
    return tokens


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ExprSyntaxError(f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "eof":
            raise ExprSyntaxError(f"unexpected trailing input {tok[1]!r}", tok[2])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.next()[0]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        node = self.base()
        if self.peek()[0] == "^":
            self.next()
            p, q = self.rational()
            node = PowRat(node, p, q)
        return node

    def rational(self):
        """Greedy: in ``x^1/2`` the ``/2`` belongs to the exponent, while in
        ``x^2/(x+1)`` it does not (the divisor is not an integer literal)."""
        sign = 1
        if self.peek()[0] == "-":
            self.next()
            sign = -1
        tok = self.expect("num")
        if tok[1] != int(tok[1]):
            raise ExprSyntaxError("exponent must be an integer or integer ratio", tok[2])
        p = sign * int(tok[1])
        q = 1
        if self.peek()[0] == "/":
            nxt = self.tokens[self.pos + 1]
            if nxt[0] == "num" and nxt[1] == int(nxt[1]) and nxt[1] > 0:
                self.next()
                self.next()
                q = int(nxt[1])
        return p, q

    def base(self) -> Node:
        tok = self.next()
        kind, value, pos = tok
        if kind == "num":
            return Num(float(value))
        if kind == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "ident":
            if value == "x":
                return Var()
            if value == "inv":
                self.expect("(")
                child = self.expr()
                self.expect(")")
                return Inv(child)
            if value == "comp":
                self.expect("(")
                outer = self.expr()
                self.expect(",")
                inner = self.expr()
                self.expect(")")
                return Comp(outer, inner)
            if self.peek()[0] == "(":
                raise ExprSyntaxError(f"unknown function {value!r}", pos)
            return Param(value)
        raise ExprSyntaxError(f"unexpected token {value!r}", pos)


# --------------------------------------------------------------------------
# unparse
# --------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _unparse(node: Node, parent_prec: int = 0) -> str:
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Inv):
        return f"inv({_unparse(node.child)})"
    if isinstance(node, Comp):
        return f"comp({_unparse(node.outer)}, {_unparse(node.inner)})"
    if isinstance(node, PowRat):
        base = _unparse(node.base, 4)
        exp = str(node.p) if node.q == 1 else f"{node.p}/{node.q}"
        text = f"{base}^{exp}"
        return f"({text})" if parent_prec > 3 else text
    prec = _PREC[node.op]
    left = _unparse(node.left, prec)
    right = _unparse(node.right, prec + 1)
    text = f"{left}{node.op}{right}"
    return f"({text})" if parent_prec > prec else text


# --------------------------------------------------------------------------
# evaluation (reference path; the compute kernels have their own)
# --------------------------------------------------------------------------


def _eval_ast(node: Node, x: float, params: dict) -> float:
    if isinstance(node, Var):
        return x
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Param):
        try:
            return params[node.name]
        except KeyError:
            raise UnboundParameterError(f"parameter {node.name!r} is unbound") from None
    if isinstance(node, BinOp):
        a = _eval_ast(node.left, x, params)
        b = _eval_ast(node.right, x, params)
        if node.op == "+":
            v = a + b
        elif node.op == "-":
            v = a - b
        elif node.op == "*":
            v = a * b
        else:
            if b == 0.0:
                raise DomainError(f"division by zero at x={x!r}")
            v = a / b
    elif isinstance(node, PowRat):
        base = _eval_ast(node.base, x, params)
        if node.q == 1:
            if base == 0.0 and node.p < 0:
                raise DomainError(f"0 raised to a negative power at x={x!r}")
            v = base**node.p
        else:
            if base < 0.0 or (base == 0.0 and node.p < 0):
                raise DomainError(
                    f"fractional power of non-positive base {base!r} at x={x!r}"
                )
            v = math.pow(base, node.p / node.q)
    elif isinstance(node, Comp):
        v = _eval_ast(node.outer, _eval_ast(node.inner, x, params), params)
    elif isinstance(node, Inv):
        v = _invert_ast(node.child, x, params)
    else:  # pragma: no cover - exhaustive
        raise TypeError(f"unknown node {node!r}")
    if isinstance(v, complex) or not math.isfinite(v):
        raise DomainError(f"evaluation at x={x!r} produced {v!r}")
    return float(v)


def _invert_ast(child: Node, y: float, params: dict) -> float:
    """Bisection inverse for the reference evaluator. Assumes the wrapped
    expression is strictly increasing on (0, inf)."""
    lo = hi = 1.0
    f = lambda t: _eval_ast(child, t, params)
    for _ in range(400):
        if f(hi) >= y:
            break
        hi *= 2.0
    else:
        raise DomainError(f"inverse target y={y!r} not reached from above")
    for _ in range(400):
        if f(lo) <= y:
            break
        lo *= 0.5
    else:
        raise DomainError(f"inverse target y={y!r} not reached from below")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# public types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FuncExpr:
    """A parsed expression with (possibly still unbound) named parameters.

    Immutable; safe to share across threads.
    """

    root: Node
    params: dict = field(default_factory=dict)

    def param_names(self) -> set:
        names = set()

        def walk(n):
            if isinstance(n, Param):
                names.add(n.name)
            elif isinstance(n, BinOp):
                walk(n.left)
                walk(n.right)
            elif isinstance(n, PowRat):
                walk(n.base)
            elif isinstance(n, (Inv,)):
                walk(n.child)
            elif isinstance(n, Comp):
                walk(n.outer)
                walk(n.inner)

        walk(self.root)
        return names

    def unbound(self) -> set:
        return self.param_names() - set(self.params)

    def bind(self, **values) -> "FuncExpr":
        """Return a copy with the given parameters bound. Names the
        expression does not mention are ignored, so one parameter set can
        serve several expressions."""
        merged = dict(self.params)
        merged.update({k: float(v) for k, v in values.items()})
        return FuncExpr(self.root, merged)

    def eval(self, x: float) -> float:
        missing = self.unbound()
        if missing:
            raise UnboundParameterError(
                f"unbound parameters: {', '.join(sorted(missing))}"
            )
        return _eval_ast(self.root, float(x), self.params)

    def unparse(self) -> str:
        return _unparse(self.root)


def parse(text: str) -> FuncExpr:
    """Parse the grammar above; raises ExprSyntaxError with a position."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return FuncExpr(_Parser(text).parse())


@dataclass
class ValidationReport:
    """Sampled evidence that an expression is an increasing bijection.

    Verdicts are honest: sampling can refute strict increase (with a
    re-evaluable witness) but can only support, never prove, continuity or
    surjectivity, hence the third verdict.
    """

    monotone: str  # yes | no | undetermined
    surjective_onto_positive_half_line: str  # yes | no | undetermined
    sample_points: list
    failure_witness: Optional[tuple] = None

    def to_dict(self):
        return {
            "monotone": self.monotone,
            "surjective_onto_positive_half_line": self.surjective_onto_positive_half_line,
            "failure_witness": list(self.failure_witness) if self.failure_witness else None,
            "n_samples": len(self.sample_points),
            "sample_points": [[x, y] for x, y in self.sample_points],
        }


def validate_bijection(
    fexpr: FuncExpr, cfg: NumericsConfig = DEFAULT_CONFIG
) -> ValidationReport:
    """Sample a log-spaced grid and report monotonicity and a surjectivity
    heuristic based on the values at the domain edges."""
    xs = cfg.validation_grid.points()
    samples = [(float(x), fexpr.eval(float(x))) for x in xs]
    ys = [y for _, y in samples]

    monotone = "yes"
    witness = None
    for i in range(len(ys) - 1):
        if not (ys[i] < ys[i + 1]):
            monotone = "no"
            witness = (samples[i][0], samples[i + 1][0])
            break

    lo, hi = xs[0], xs[-1]
    if any(y <= 0.0 for y in ys):
        surjective = "no"
    elif ys[0] <= lo**0.25 and ys[-1] >= hi**0.25:
        surjective = "yes"
    elif ys[0] >= 1.0 or ys[-1] <= 1.0:
        # bounded away from an endpoint of (0, inf) over twelve decades
        surjective = "no"
    else:
        surjective = "undetermined"

    return ValidationReport(
        monotone=monotone,
        surjective_onto_positive_half_line=surjective,
        sample_points=samples,
        failure_witness=witness,
    )
