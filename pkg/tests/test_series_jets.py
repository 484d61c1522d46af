"""Jet arithmetic, composition by AD, and the solution-jet recurrence."""

from fractions import Fraction

import numpy as np
import pytest

from rigdde.expr import Add, Const, Div, Mul, Neg, Rhs, Sin, Var, jet_compose, parse_expr
from rigdde.intervals import IArray, Interval
from rigdde.jets import Jet, dde_recurrence, jet_derivative, w_star
from rigdde.systems import mackey_glass_unit_delay


def series(vals):
    return [Interval(v) for v in vals]


def point_jet(vals):
    return Jet([IArray.from_point(np.array([float(v)])) for v in vals])


def coeff(j: Jet, k: int) -> Interval:
    c = j.component(0)[k]
    return c if isinstance(c, Interval) else Interval(c)


class TestJetCompose:
    def test_square_of_linear(self):
        # (1 + t)^2 = 1 + 2t + t^2
        expr = Mul(Var(0), Var(0))
        out = jet_compose(expr, [series([1, 1, 0])], order=2)
        for k, want in enumerate([1.0, 2.0, 1.0]):
            assert out[k].contains(want)
            assert out[k].diam() < 1e-14

    def test_identity(self):
        expr = Var(0)
        src = series([2.0, -3.0, 0.5, 7.0])
        out = jet_compose(expr, [src], order=2)
        assert len(out) == 3
        for k in range(3):
            assert out[k] == src[k]

    def test_sin_of_t(self):
        out = jet_compose(Sin(Var(0)), [series([0, 1, 0, 0])], order=3)
        for k, w in enumerate([0.0, 1.0, 0.0, -1.0 / 6.0]):
            assert out[k].contains(w)
            assert out[k].diam() < 1e-14

    def test_rational_division_oracle(self):
        # 1/(1 - t) = 1 + t + t^2 + ...: exact rational coefficients
        expr = Div(Const(1.0), Var(0))
        out = jet_compose(expr, [series([1, -1, 0, 0, 0])], order=4)
        for k in range(5):
            assert out[k].contains(Fraction(1))

    def test_truncation_consistency(self, rng):
        expr = Add(Mul(Var(0), Var(0)), Neg(Mul(Const(2.0), Var(0))))
        vals = rng.standard_normal(6)
        full = jet_compose(expr, [series(vals)], order=5)
        low = jet_compose(expr, [series(vals)], order=3)
        for k in range(4):
            assert low[k].contains(full[k])


class TestWStar:
    def test_antiderivative_weights(self):
        out = w_star(3, point_jet([6, 6, 6]))
        for k, want in enumerate([6.0, 3.0, 2.0]):
            assert coeff(out, k).contains(want)

    def test_single(self):
        out = w_star(1, point_jet([5.0]))
        assert coeff(out, 0).contains(5.0)

    def test_zero(self):
        out = w_star(4, point_jet([0, 0, 0, 0]))
        for k in range(4):
            assert coeff(out, k).contains(0.0)
            assert coeff(out, k).diam() < 1e-300


def scalar_rhs(expr, delays):
    return Rhs([expr], d=1, delays=delays)


class TestDdeRecurrence:
    def test_pure_delay_constant_history(self):
        # x'(t) = -x(t - tau), x == 1 on history: x(t) = 1 - t on step one
        rhs = scalar_rhs(Neg(Var(1)), [1.0])
        out = dde_recurrence(rhs, [Interval(1.0)], [point_jet([1, 0, 0, 0])], n=3)
        assert out.order == 4
        for k, w in enumerate([1.0, -1.0, 0.0, 0.0, 0.0]):
            assert coeff(out, k).contains(w)
            assert coeff(out, k).diam() < 1e-14

    def test_exponential(self):
        # x' = x from 1: scaled coefficients 1/k!
        rhs = scalar_rhs(Var(0), [1.0])
        out = dde_recurrence(rhs, [Interval(1.0)], [point_jet([1, 0, 0, 0])], n=3)
        fact = 1
        for k in range(5):
            if k:
                fact *= k
            assert coeff(out, k).contains(Fraction(1, fact))

    def test_mackey_glass_symbolic_oracle(self):
        # method-of-steps: with constant delayed value c the ODE is
        # x' = -2x + 4c/(1 + c^q), so x^(j+1) = -2 x^(j) for j >= 1
        q = 9.65
        c = 1.1
        rhs = mackey_glass_unit_delay(2.0, 1.0, q)
        out = dde_recurrence(rhs, [Interval(c)], [point_jet([c, 0, 0])], n=2)
        x1 = -2.0 * c + 4.0 * c / (1.0 + c**q)
        x2 = -2.0 * x1 / 2.0
        x3 = -2.0 * x2 / 3.0
        for k, want in [(1, x1), (2, x2), (3, x3)]:
            iv = coeff(out, k)
            assert abs(iv.mid() - want) <= 1e-12
            assert iv.diam() <= 1e-12

    def test_linear_dde_polynomial_history(self):
        # x'(t) = a x(t) + b x(t-1), delayed segment t+... with local jet
        # (0, 1): x(0)=0 gives x_[1]=0? no: x_[1] = b*0 + a*0 = 0s
        a, b = 0.5, -2.0
        expr = Add(Mul(Const(a), Var(0)), Mul(Const(b), Var(1)))
        rhs = scalar_rhs(expr, [1.0])
        out = dde_recurrence(rhs, [Interval(0.0)], [point_jet([0.0, 1.0, 0.0])], n=2)
        # f(t) = a x(t) + b t; x_[1] = f(0) = 0; F_[1] = a x_[1] + b = b
        # => x_[2] = b/2; F_[2] = a x_[2] = a b/2 => x_[3] = a b/6
        assert coeff(out, 1).contains(0.0)
        assert abs(coeff(out, 2).mid() - b / 2) <= 1e-14
        assert abs(coeff(out, 3).mid() - a * b / 6) <= 1e-14

    def test_point_inputs_stay_thin(self):
        rhs = mackey_glass_unit_delay(2.0, 1.0, 9.65)
        out = dde_recurrence(
            rhs, [Interval(0.9)], [point_jet([1.05, 0.3, -0.1, 0.02])], n=3
        )
        for k in range(5):
            iv = coeff(out, k)
            assert iv.diam() <= 1e-12 * max(1.0, iv.mag())


class TestJetDerivative:
    def test_t_squared(self):
        dj, factor = jet_derivative(point_jet([0, 0, 1]), 1)
        assert dj.order == 1
        assert coeff(dj, 0).contains(0.0)
        assert coeff(dj, 1).contains(2.0)
        assert factor == 3  # binom(n+1, k) = binom(3, 1)

    def test_k_zero_identity(self):
        j = point_jet([1.0, 2.0, 3.0])
        dj, factor = jet_derivative(j, 0)
        for k in range(3):
            assert coeff(dj, k).contains(coeff(j, k).mid())
            assert coeff(dj, k).diam() <= 4e-16 * max(1.0, coeff(dj, k).mag())
        assert factor == 1

    def test_polynomial_oracle(self, rng):
        from math import comb

        c = rng.standard_normal(6)
        j = point_jet(c)
        k = 2
        dj, factor = jet_derivative(j, k)
        assert factor == comb(6, 2)
        for l in range(6 - k):
            want = comb(l + k, k) * c[l + k]
            assert abs(coeff(dj, l).mid() - want) <= 1e-12 * max(1.0, abs(want))

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            jet_derivative(point_jet([1.0, 2.0]), 5)


class TestExprText:
    def test_prefix_parse_and_eval(self):
        e = parse_expr("(add (neg (mul 2.0 x0)) x1)")
        v = e.ev([Interval(1.0), Interval(3.0)])
        assert v.contains(1.0)

    def test_pow_parse(self):
        e = parse_expr("(pow x0 2)")
        assert e.ev([Interval(3.0)]).contains(9.0)

    def test_parse_error(self):
        with pytest.raises(Exception):
            parse_expr("(add 1")
