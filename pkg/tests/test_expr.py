import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itermeans import expr as E
from itermeans.errors import (
    DomainError,
    ExprSyntaxError,
    UnboundParameterError,
)


class TestParse:
    def test_linear_with_parameter(self):
        fe = E.parse("w*x").bind(w=0.25)
        assert fe.eval(1.0) == 0.25

    def test_identity(self):
        assert E.parse("x").eval(1.0) == 1.0

    def test_quadratic_over_linear(self):
        fe = E.parse("p*x^2/(x+1)").bind(p=0.5)
        assert fe.eval(1.0) == 0.25

    def test_exponent_ratio_is_greedy(self):
        # the slash after an integer exponent belongs to the exponent
        assert E.parse("x^1/2").eval(4.0) == 2.0
        # but a parenthesized divisor is ordinary division
        assert E.parse("x^2/(x+1)").eval(1.0) == 0.5

    def test_negative_exponent(self):
        assert E.parse("x^-1").eval(4.0) == 0.25

    def test_composition(self):
        assert E.parse("comp(x^2, 2*x)").eval(3.0) == 36.0

    def test_inverse_marker(self):
        # inverse of t -> t/2 is t -> 2t
        assert E.parse("inv(x/2)").eval(3.0) == pytest.approx(6.0, abs=1e-10)

    def test_syntax_error_carries_position(self):
        with pytest.raises(ExprSyntaxError) as err:
            E.parse("x +")
        assert err.value.pos == 3

    def test_unknown_function(self):
        with pytest.raises(ExprSyntaxError):
            E.parse("foo(x)")

    def test_empty(self):
        with pytest.raises(ExprSyntaxError):
            E.parse("   ")

    def test_unbalanced(self):
        with pytest.raises(ExprSyntaxError):
            E.parse("(x+1")

    def test_unbound_parameter(self):
        with pytest.raises(UnboundParameterError):
            E.parse("w*x").eval(1.0)

    def test_bind_ignores_unrelated_names(self):
        fe = E.parse("w*x").bind(w=0.5, p=3.0)
        assert fe.eval(2.0) == 1.0

    def test_division_by_zero(self):
        with pytest.raises(DomainError):
            E.parse("1/(x-1)").eval(1.0)

    def test_precedence(self):
        assert E.parse("2+3*x^2").eval(2.0) == 14.0


class TestUnparse:
    CASES = [
        "w*x",
        "x",
        "p*x^2/(x+1)",
        "x/(1-w)",
        "2*x+x^2",
        "inv(x/2)",
        "comp(x^2, 2*x)",
        "x^1/2",
        "x^-1",
        "(x+1)^2/3-x",
        "1/x",
        "x-0.25*x",
    ]

    @pytest.mark.parametrize("text", CASES)
    def test_roundtrip_battery(self, text):
        first = E.parse(text)
        again = E.parse(first.unparse())
        assert again.root == first.root


def _trees(depth):
    leaf = st.one_of(
        st.just(E.Var()),
        st.builds(E.Num, st.floats(min_value=0.001, max_value=100, allow_nan=False)),
        st.builds(E.Param, st.sampled_from(["w", "p", "alpha"])),
    )
    if depth == 0:
        return leaf
    sub = _trees(depth - 1)
    return st.one_of(
        leaf,
        st.builds(E.BinOp, st.sampled_from("+-*/"), sub, sub),
        st.builds(
            E.PowRat,
            sub,
            st.integers(min_value=-5, max_value=5).filter(lambda p: p != 0),
            st.integers(min_value=1, max_value=5),
        ),
        st.builds(E.Inv, sub),
        st.builds(E.Comp, sub, sub),
    )


class TestRoundtripProperty:
    @given(_trees(3))
    @settings(max_examples=200, deadline=None)
    def test_parse_unparse_parse_is_identity(self, tree):
        text = E._unparse(tree)
        assert E.parse(text).root == tree


class TestValidate:
    def test_linear_bijection(self, cfg):
        rep = E.validate_bijection(E.parse("x/w").bind(w=0.5), cfg)
        assert rep.monotone == "yes"
        assert rep.surjective_onto_positive_half_line == "yes"
        assert rep.failure_witness is None

    def test_identity(self, cfg):
        assert E.validate_bijection(E.parse("x"), cfg).monotone == "yes"

    def test_reciprocal_is_not_increasing(self, cfg):
        rep = E.validate_bijection(E.parse("1/x"), cfg)
        assert rep.monotone == "no"
        x1, x2 = rep.failure_witness
        fe = E.parse("1/x")
        assert x1 < x2 and fe.eval(x1) >= fe.eval(x2)  # witness re-evaluates

    def test_shifted_is_not_onto(self, cfg):
        rep = E.validate_bijection(E.parse("x+5"), cfg)
        assert rep.monotone == "yes"
        assert rep.surjective_onto_positive_half_line == "no"

    def test_never_claims_monotone_against_a_witness(self, cfg):
        # constant function: every consecutive pair is a violation
        rep = E.validate_bijection(E.parse("x-x+3"), cfg)
        assert rep.monotone == "no"
        assert rep.failure_witness is not None

    def test_samples_recorded(self, cfg):
        rep = E.validate_bijection(E.parse("x"), cfg)
        assert len(rep.sample_points) == cfg.validation_grid.n
