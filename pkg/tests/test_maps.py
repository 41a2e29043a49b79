import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itermeans.errors import BracketError, DomainError
from itermeans.maps import MonotoneMap, classify_displacement, compose, iterate

from conftest import quad_r


class TestEval:
    def test_linear(self):
        h = MonotoneMap.from_expr("x/w", {"w": 0.5})
        assert h.eval(3.0) == 6.0

    def test_identity(self):
        assert MonotoneMap.identity().eval(7.0) == 7.0

    def test_quadratic_over_linear(self, quad_generator):
        # direct arithmetic: 0.5 * 4 / 3
        assert quad_generator.eval(2.0) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_rejects_nonpositive_argument(self):
        m = MonotoneMap.identity()
        with pytest.raises(DomainError):
            m.eval(0.0)
        with pytest.raises(DomainError):
            m.eval(-1.0)

    def test_rejects_nonpositive_output(self):
        m = MonotoneMap.from_expr("2*x-5")
        with pytest.raises(DomainError):
            m.eval(1.0)

    def test_eval_many_matches_scalar(self, quad_generator):
        xs = np.geomspace(0.1, 10, 7)
        many = quad_generator.eval_many(xs)
        for x, v in zip(xs, many):
            assert v == quad_generator.eval(float(x))


class TestInverse:
    def test_linear_closed_form(self):
        g = MonotoneMap.from_expr("x/(1-w)", {"w": 0.5})
        assert g.inverse_eval(10.0) == 5.0

    def test_identity(self):
        assert MonotoneMap.identity().inverse_eval(4.0) == 4.0

    def test_numeric_inverse_of_quadratic(self, quad_generator):
        y = quad_generator.eval(3.0)
        assert y == pytest.approx(9.0 / 8.0, abs=1e-15)
        assert quad_generator.inverse_eval(y) == pytest.approx(3.0, abs=1e-10)

    def test_inverse_map_object(self, quad_generator):
        inv = quad_generator.inverse()
        assert inv.eval(9.0 / 8.0) == pytest.approx(3.0, abs=1e-10)
        # inverse of the inverse evaluates forward again, exactly
        assert inv.inverse().eval(2.0) == quad_generator.eval(2.0)

    def test_bracket_failure_signals_not_onto(self):
        # range of x + 5 is (5, inf); 1.0 is unreachable
        m = MonotoneMap.from_expr("x+5")
        with pytest.raises((BracketError, DomainError)):
            m.inverse_eval(1.0)

    def test_power_closed_form(self):
        m = MonotoneMap.from_expr("x^3/2")
        y = m.eval(4.0)
        assert y == 8.0
        assert m.inverse_eval(8.0) == pytest.approx(4.0, rel=1e-14)


class TestCompose:
    def test_linear_pair(self):
        f = MonotoneMap.from_expr("x/w", {"w": 0.5})
        g = MonotoneMap.from_expr("x/(1-w)", {"w": 0.5})
        fg = f.compose(g)
        for x in (0.3, 1.0, 7.0):
            assert fg.eval(x) == pytest.approx(4.0 * x, rel=1e-15)

    def test_identity_is_neutral(self, quad_generator):
        fg = quad_generator.compose(MonotoneMap.identity())
        gf = MonotoneMap.identity().compose(quad_generator)
        for x in (0.5, 2.0):
            assert fg.eval(x) == quad_generator.eval(x)
            assert gf.eval(x) == quad_generator.eval(x)

    def test_mixed_weights(self):
        w = 0.25
        g = MonotoneMap.from_expr("x/(1-w)", {"w": w})
        h = MonotoneMap.from_expr("x/w", {"w": w})
        gh = compose(g, h)
        assert gh.eval(1.0) == pytest.approx(1.0 / 0.1875, rel=1e-15)

    def test_associativity_on_samples(self, quad_generator, cfg):
        a = MonotoneMap.from_expr("2*x+x^2")
        b = quad_generator.inverse()
        c = MonotoneMap.from_expr("x^1/2")
        left = a.compose(b).compose(c)
        right = a.compose(b.compose(c))
        for x in (0.5, 1.0, 3.0):
            assert left.eval(x, cfg) == pytest.approx(right.eval(x, cfg), rel=1e-12)


class TestIterate:
    def test_negative_iterates_of_linear(self):
        g = MonotoneMap.from_expr("x/w", {"w": 0.5})
        m = g.iterate(-3)  # inverse is x/2, applied three times
        assert m.eval(8.0) == 1.0

    def test_zero_is_identity(self, quad_generator):
        m = quad_generator.iterate(0)
        assert m.eval(5.0) == 5.0

    def test_repeated_doubling(self):
        m = MonotoneMap.affine(2.0).iterate(2)
        assert m.eval(3.0) == 12.0

    @pytest.mark.parametrize("a", [-2, -1, 0, 1, 2])
    @pytest.mark.parametrize("b", [-2, -1, 0, 1, 2])
    def test_group_law_on_samples(self, a, b, cfg):
        m = MonotoneMap.from_expr("x^3/2")
        whole = m.iterate(a + b)
        for x in (0.7, 1.3, 2.0):
            split = m.iterate(a).eval(m.iterate(b).eval(x, cfg), cfg)
            assert split == pytest.approx(whole.eval(x, cfg), rel=1e-10)

    def test_group_law_numeric_inverse(self, quad_generator, cfg):
        # iterates of the numeric inverse compose consistently too
        m = quad_generator.inverse()
        for x in (0.5, 1.5):
            split = m.iterate(1).eval(m.iterate(-1).eval(x, cfg), cfg)
            assert split == pytest.approx(x, rel=1e-9)


class TestClassify:
    @pytest.mark.parametrize("w", [0.3, 0.7])
    def test_expanding_linear_is_above(self, w, cfg):
        h = MonotoneMap.from_expr("x/w", {"w": w})
        assert h.classify_displacement(cfg).verdict == "Above"

    def test_quadratic_generator_is_below(self, quad_generator, cfg):
        assert quad_generator.classify_displacement(cfg).verdict == "Below"

    def test_square_has_fixpoint_at_one(self, cfg):
        cls = MonotoneMap.from_expr("x^2").classify_displacement(cfg)
        assert cls.verdict == "HasInteriorFixpoint"
        assert cls.witness == pytest.approx(1.0, abs=1e-6)

    def test_identity_reports_fixpoint(self, cfg):
        cls = classify_displacement(MonotoneMap.identity(), cfg)
        assert cls.verdict == "HasInteriorFixpoint"


class TestCallable:
    def test_pyfunc_roundtrip(self, cfg):
        m = MonotoneMap.from_callable(lambda x: x + 0.5 * math.sin(x), label="wobble")
        y = m.eval(2.0, cfg)
        assert m.inverse_eval(y, cfg) == pytest.approx(2.0, abs=1e-9)

    def test_registered_inverse_is_used(self, cfg):
        m = MonotoneMap.from_callable(quad_r, inverse=lambda y: 2.0 * y, label="fake")
        # the registered inverse is trusted verbatim
        assert m.inverse_eval(3.0, cfg) == 6.0


class TestRoundTripProperty:
    @given(
        a=st.floats(min_value=0.05, max_value=20.0),
        b=st.floats(min_value=0.0, max_value=3.0),
        x=st.floats(min_value=0.01, max_value=100.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_affine_round_trip(self, a, b, x, cfg=None):
        from itermeans.config import DEFAULT_CONFIG

        cfg = DEFAULT_CONFIG
        m = MonotoneMap.affine(a, b)
        y = m.eval(x, cfg)
        back = m.inverse_eval(y, cfg)
        assert abs(back - x) <= 10.0 * cfg.inverse_tol * max(1.0, x)

    @given(x=st.floats(min_value=0.01, max_value=50.0))
    @settings(max_examples=60, deadline=None)
    def test_numeric_round_trip(self, x):
        from itermeans.config import DEFAULT_CONFIG

        cfg = DEFAULT_CONFIG
        m = MonotoneMap.from_expr("2*x+x^2")
        y = m.eval(x, cfg)
        back = m.inverse_eval(y, cfg)
        assert abs(back - x) <= 10.0 * cfg.inverse_tol * max(1.0, x)
