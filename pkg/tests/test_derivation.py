import csv
import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from doob_pathwise.derivation import (
    chain_llogl,
    chain_lp,
    layer_cake_log,
    layer_cake_power,
    log_tail_integral,
    log_young_step,
    power_start_integral,
    power_tail_integral,
    young_step,
)
from doob_pathwise.errors import DomainError, ExponentOutOfRange
from doob_pathwise.pathwise_ineq import eval_llogl, eval_lp, tolerance

from oracles import (
    quad_layer_power,
    quad_log_tail,
    quad_lp_chain_stage1,
    quad_start_power,
    quad_tail_power,
)

nonneg_paths = st.lists(st.floats(0, 20), min_size=1, max_size=30)
pos_start_paths = st.tuples(st.floats(1e-2, 20), st.lists(st.floats(0, 20), max_size=30)).map(
    lambda t: [t[0], *t[1]]
)
C = math.e / (math.e - 1)


class TestLayerCake:
    @pytest.mark.parametrize("xs, p, expected", [((1, 3, 2), 2, 9), ((0,), 3, 0), ((2, 1), 3, 8)])
    def test_power_examples(self, xs, p, expected):
        assert layer_cake_power(xs, p) == expected

    @pytest.mark.parametrize("xs, expected", [((1, 3, 2), 3), ((2,), 2), ((0.5, 4), 4)])
    def test_log_examples(self, xs, expected):
        assert layer_cake_log(xs) == expected

    def test_errors(self):
        with pytest.raises(ExponentOutOfRange):
            layer_cake_power((1, 2), 1.0)
        with pytest.raises(DomainError):
            layer_cake_log((0, 2))

    @given(st.floats(0, 50), st.sampled_from([1.5, 2.0, 3.0, 5.0]))
    def test_closed_forms_match_quadrature(self, c, p):
        tol = 1e-8 * (1 + c**p)
        assert abs(layer_cake_power([c], p) - quad_layer_power(c, p)) <= tol
        assert abs(power_tail_integral(c, p) - quad_tail_power(c, p)) <= tol
        assert abs(power_start_integral(c, p) - quad_start_power(c, p)) <= tol

    @given(st.floats(1e-3, 50), st.floats(0, 10))
    def test_log_tail_matches_quadrature(self, x0, extra):
        c = x0 + extra
        assert abs(log_tail_integral(c, x0) - quad_log_tail(c, x0)) <= 1e-8

    @given(st.lists(st.floats(0, 20), min_size=1, max_size=30), st.sampled_from([1.5, 2, 3, 5]))
    def test_layer_cake_identity(self, xs, alpha):
        m = max(xs)
        assert layer_cake_power(xs, alpha) == pytest.approx(m**alpha, rel=1e-12, abs=0)


class TestYoung:
    def test_examples(self):
        assert young_step(2, 2, 2) == (4, 4)
        assert young_step(1, 3, 2) == (3, 5)
        lhs, rhs = young_step(0, 7, 3)
        assert lhs == 0 and rhs == pytest.approx(7**1.5 / 1.5, rel=1e-15)

    def test_log_examples(self):
        assert log_young_step(1, math.e) == (1.0, 1.0)
        lhs, rhs = log_young_step(2, 3)
        assert lhs == pytest.approx(2 * math.log(3), rel=1e-15)
        assert rhs == pytest.approx(2 * math.log(2) + 3 / math.e, rel=1e-15)
        assert log_young_step(0, 5) == (0.0, 5 / math.e)

    def test_errors(self):
        with pytest.raises(DomainError):
            young_step(-1, 1, 2)
        with pytest.raises(ExponentOutOfRange):
            young_step(1, 1, 1)
        with pytest.raises(DomainError):
            log_young_step(1, 0)
        with pytest.raises(DomainError):
            log_young_step(-1, 1)

    @pytest.mark.parametrize("a, p", [(2.0, 2.0), (4.0, 2.0), (0.5, 2.0), (4.0, 3.0 / 2)])
    def test_equality_cases(self, a, p):
        # b = a^(p-1) gives a^p = b^q; choices keep every power exact in binary
        b = a ** (p - 1)
        lhs, rhs = young_step(a, b, p)
        assert lhs == rhs

    @given(st.floats(0, 100), st.floats(0, 100), st.floats(1.01, 8))
    def test_young_holds(self, a, b, p):
        lhs, rhs = young_step(a, b, p)
        assert rhs - lhs >= -tolerance(lhs, rhs)

    @given(st.floats(0, 100), st.floats(1e-6, 100))
    def test_log_young_holds(self, a, b):
        lhs, rhs = log_young_step(a, b)
        assert rhs - lhs >= -tolerance(lhs, rhs)


class TestChainLp:
    def test_example(self):
        ch = chain_lp((1, 3, 2), 2)
        assert ch.values == (9, 13, 13.5)
        assert ch.final_rhs == 18 and ch.all_ordered

    def test_zero_path(self):
        ch = chain_lp((0, 0), 2)
        assert ch.values == (0, 0, 0) and ch.final_rhs == 0 and ch.all_ordered

    def test_single_point(self):
        ch = chain_lp((1,), 2)
        assert ch.values == (1, 1, 1.5) and ch.final_rhs == 2

    def test_rejects_bad_exponent(self):
        with pytest.raises(ExponentOutOfRange):
            chain_lp((1, 2), 1)

    @given(nonneg_paths, st.sampled_from([1.5, 2.0, 3.0, 5.0]))
    def test_ordering_and_final(self, xs, p):
        ch = chain_lp(xs, p)
        assert ch.all_ordered
        assert abs(ch.final_rhs - eval_lp(xs, p).rhs) <= tolerance(ch.final_rhs, ch.target_rhs)

    @given(st.lists(st.floats(0, 5), min_size=1, max_size=8), st.sampled_from([1.5, 2.0, 3.0]))
    def test_stage1_matches_quadrature(self, xs, p):
        ch = chain_lp(xs, p)
        num = quad_lp_chain_stage1(xs, p)
        assert abs(ch.values[1] - num) <= 1e-7 * (1 + abs(num))

    def test_serialisation(self):
        ch = chain_lp((1, 3, 2), 2)
        d = ch.to_dict()
        assert [s["value"] for s in d["stages"]] == [9, 13, 13.5]
        rows = list(csv.reader(io.StringIO(ch.to_csv())))
        assert rows[0] == ["label", "value"] and len(rows) == 5
        assert float(rows[-1][1]) == 18


class TestChainLlogl:
    def test_example(self):
        ch = chain_llogl((1, 3, 2))
        ln2, ln3 = math.log(2), math.log(3)
        # sum term: log(1)*2 + log(3)*(-1) = -ln3
        assert ch.values[0] == 3
        assert ch.values[1] == pytest.approx(1 + 2 * ln3 + ln3, rel=1e-14)
        assert ch.values[2] == pytest.approx(1 + 2 * ln2 + 3 / math.e + ln3, rel=1e-14)
        assert ch.final_rhs == pytest.approx(C * (1 + 2 * ln2 + ln3), rel=1e-14)
        assert ch.final_rhs == pytest.approx(eval_llogl((1, 3, 2))[0].rhs, rel=1e-14)
        assert ch.all_ordered

    @pytest.mark.parametrize("c", [0.25, 1.0, 3.0])
    def test_single_point(self, c):
        ch = chain_llogl((c,))
        assert ch.values[0] == c and ch.values[1] == c
        assert ch.values[2] == pytest.approx(c + c / math.e, rel=1e-15)
        assert ch.final_rhs == pytest.approx(C * c, rel=1e-15)

    def test_constant_path(self):
        ch = chain_llogl((1, 1, 1))
        assert ch.values[:2] == (1, 1)
        assert ch.values[2] == pytest.approx(1 + 1 / math.e, rel=1e-15)
        assert ch.final_rhs == pytest.approx(C, rel=1e-15)

    def test_domain(self):
        with pytest.raises(DomainError):
            chain_llogl((0, 1))

    @given(pos_start_paths)
    def test_matches_form6(self, xs):
        ch = chain_llogl(xs)
        f6 = eval_llogl(xs)[0]
        assert ch.all_ordered
        assert abs(ch.final_rhs - f6.rhs) <= tolerance(ch.final_rhs, f6.rhs)
