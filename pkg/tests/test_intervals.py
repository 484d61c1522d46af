"""Interval scalar/array arithmetic: containment, rounding, serialization."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rigdde.intervals import (
    IArray,
    Interval,
    IntervalError,
    format_float,
    format_interval,
    format_matrix,
    format_vector,
    hull,
    icos,
    iexp,
    ilog,
    imatmul,
    imatvec,
    ipower,
    isin,
    isqrt,
    mid_split,
    parse_float,
    parse_interval,
    parse_matrix,
    parse_vector,
)

finite = st.floats(
    allow_nan=False, allow_infinity=False, min_value=-1e12, max_value=1e12
)


def ivs(lo_hi=finite):
    return st.tuples(lo_hi, lo_hi).map(
        lambda t: Interval(min(t), max(t))
    )


def tight_around(result: Interval, lo: float, hi: float, ulps: int = 4):
    """result contains [lo,hi] and its endpoints are within a few ulps."""
    assert result.lo <= lo and hi <= result.hi
    scale = max(abs(lo), abs(hi), 1.0)
    assert lo - result.lo <= ulps * math.ulp(scale)
    assert result.hi - hi <= ulps * math.ulp(scale)


class TestScalarArithmetic:
    def test_add_exact(self):
        tight_around(Interval(1, 2) + Interval(3, 4), 4, 6)

    def test_mul_mixed_sign(self):
        tight_around(Interval(-1, 2) * Interval(3, 4), -4, 8)

    def test_div_third(self):
        r = Interval(1) / Interval(3)
        assert r.contains(Fraction(1, 3))
        assert r.diam() <= 4 * math.ulp(1 / 3)

    def test_div_by_zero_interval(self):
        with pytest.raises(IntervalError):
            Interval(1) / Interval(-1, 1)

    def test_sub(self):
        tight_around(Interval(1, 2) - Interval(0, 1), 0, 2)

    def test_pow_even_through_zero(self):
        r = Interval(-2, 1) ** 2
        assert r.lo <= 0.0 and r.contains(4.0) and r.lo >= -1e-15

    @given(ivs(), ivs(), ivs(), ivs())
    @settings(max_examples=200, deadline=None)
    def test_containment_monotone(self, a, b, a2, b2):
        A = a.hull(a2)
        B = b.hull(b2)
        for op in (lambda x, y: x + y, lambda x, y: x - y, lambda x, y: x * y):
            inner = op(a, b)
            outer = op(A, B)
            assert outer.lo <= inner.lo and inner.hi <= outer.hi

    @given(finite, finite)
    @settings(max_examples=500, deadline=None)
    def test_sampled_exactness(self, x, y):
        a, b = Interval(x), Interval(y)

        def inside(iv, frac):
            # Fraction/float comparisons are exact; avoids float() overflow
            return Fraction(iv.lo) <= frac <= Fraction(iv.hi)

        assert inside(a + b, Fraction(x) + Fraction(y))
        assert inside(a - b, Fraction(x) - Fraction(y))
        assert inside(a * b, Fraction(x) * Fraction(y))
        if abs(y) >= 1e-150:
            # tiny divisors overflow the quotient endpoints to inf, which
            # is sound but not representable as a Fraction
            assert inside(a / b, Fraction(x) / Fraction(y))


class TestElementaryFunctions:
    def test_sqrt(self):
        assert isqrt(Interval(4, 9)).contains(Interval(2, 3))
        s = isqrt(Interval(2))
        assert (s * s).contains(2.0) and s.diam() < 1e-15

    def test_exp_log_roundtrip(self):
        x = Interval(0.5, 1.5)
        assert ilog(iexp(x)).contains(x)

    def test_exp_of_one(self):
        assert iexp(Interval(1)).contains(math.e)

    def test_log_domain(self):
        with pytest.raises(IntervalError):
            ilog(Interval(-1, 1))

    def test_sin_cos_critical_points(self):
        # intervals straddling extrema must clamp to [-1, 1] endpoints
        s = isin(Interval(1.0, 2.0))  # contains pi/2
        assert s.hi >= 1.0 and s.contains(math.sin(1.0))
        c = icos(Interval(3.0, 3.3))  # contains pi
        assert c.lo <= -1.0 and c.contains(math.cos(3.0))

    @given(st.floats(min_value=-20, max_value=20))
    @settings(max_examples=200, deadline=None)
    def test_sincos_pointwise(self, x):
        assert isin(Interval(x)).contains(math.sin(x))
        assert icos(Interval(x)).contains(math.cos(x))

    def test_real_power(self):
        r = ipower(Interval(2, 3), 1.5)
        assert r.contains(2**1.5) and r.contains(3**1.5)
        with pytest.raises(IntervalError):
            ipower(Interval(-1, 1), 9.65)


class TestVectorOps:
    def test_mid_split_examples(self):
        m, c = mid_split(IArray.from_intervals([Interval(1, 3)]))
        assert m[0] == 2.0
        assert c.lo[0] <= -1.0 <= 1.0 <= c.hi[0]
        assert c.diam()[0] <= 2.0 + 1e-14
        m0, c0 = mid_split(IArray.zeros(1))
        assert m0[0] == 0.0
        assert c0.lo[0] <= 0.0 <= c0.hi[0] and c0.diam()[0] <= 1e-320

    @given(st.lists(st.tuples(finite, finite), min_size=1, max_size=6))
    @settings(max_examples=200, deadline=None)
    def test_mid_split_roundtrip(self, pairs):
        x = IArray.from_intervals(
            [Interval(min(a, b), max(a, b)) for a, b in pairs]
        )
        m, c = mid_split(x)
        rejoin = IArray.from_point(m) + c
        assert rejoin.contains(x)

    def test_hull_examples(self):
        a = IArray.from_intervals([Interval(0, 1)])
        b = IArray.from_intervals([Interval(2, 3)])
        h = hull([a, b])
        assert h.lo[0] == 0.0 and h.hi[0] == 3.0
        assert hull([a]).contains(a) and a.contains(hull([a]))

    def test_hull_membership_random(self, rng):
        boxes = [
            IArray(lo, lo + rng.random(4))
            for lo in rng.standard_normal((100, 4))
        ]
        h = hull(boxes)
        for b in boxes:
            assert h.contains(b)

    def test_hull_empty(self):
        with pytest.raises(IntervalError):
            hull([])

    def test_matmul_contains_point_products(self, rng):
        A = rng.standard_normal((4, 5))
        B = rng.standard_normal((5, 3))
        iA = IArray.ball(A, 1e-3)
        iB = IArray.ball(B, 1e-3)
        prod = imatmul(iA, iB)
        for _ in range(20):
            sa = A + (rng.random(A.shape) - 0.5) * 2e-3
            sb = B + (rng.random(B.shape) - 0.5) * 2e-3
            assert prod.contains(IArray.from_point(sa @ sb))

    def test_matvec_sound(self, rng):
        A0 = rng.standard_normal((3, 3))
        v0 = rng.standard_normal(3)
        A = IArray.ball(A0, 0.1)
        v = IArray.ball(v0, 0.1)
        mv = imatvec(A, v)
        mm = imatmul(A, v.reshape(3, 1)).reshape(3)
        for _ in range(20):
            sa = A0 + (rng.random((3, 3)) - 0.5) * 0.2
            sv = v0 + (rng.random(3) - 0.5) * 0.2
            pt = IArray.from_point(sa @ sv)
            assert mv.contains(pt) and mm.contains(pt)


class TestSerialization:
    def test_interval_roundtrip_decimal(self):
        iv = Interval(0.1, 0.30000000000000004)
        assert parse_interval(format_interval(iv)) == iv

    def test_float_roundtrip_hex(self):
        for x in (0.1, -1e308, 3.5, 6.02e23):
            assert parse_float(format_float(x, hex_form=True)) == x
            assert parse_float(format_float(x)) == x

    def test_vector_roundtrip(self, rng):
        v = IArray.ball(rng.standard_normal(7), 0.25)
        for hexf in (False, True):
            back = parse_vector(format_vector(v, hex_form=hexf))
            assert np.array_equal(back.lo, v.lo)
            assert np.array_equal(back.hi, v.hi)

    def test_matrix_roundtrip(self, rng):
        m = IArray.ball(rng.standard_normal((3, 4)), 0.5)
        back = parse_matrix(format_matrix(m, hex_form=True))
        assert np.array_equal(back.lo, m.lo)
        assert np.array_equal(back.hi, m.hi)

    def test_parse_error_reports_position(self):
        with pytest.raises(ValueError):
            parse_vector("{[1,2],[3}")
