"""Rigorous QR and verified matrix inversion."""

import math

import numpy as np
import pytest

from rigdde.intervals import (
    IArray,
    Interval,
    IntervalError,
    imatmul,
    rigorous_qr,
    verified_inverse,
)


def contains_identity(prod: IArray) -> bool:
    d = prod.shape[0]
    eye = np.eye(d)
    return bool(np.all(prod.lo <= eye) and np.all(eye <= prod.hi))


class TestRigorousQr:
    def test_identity(self):
        Q, Qinv = rigorous_qr(np.eye(3))
        assert Q.contains(IArray.from_point(np.eye(3)))
        assert Qinv.contains(IArray.from_point(np.eye(3)))

    def test_rotation(self):
        th = 0.7
        R = np.array(
            [[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]]
        )
        Q, Qinv = rigorous_qr(R)
        assert Q.contains(IArray.from_point(R))
        assert contains_identity(imatmul(Q, Qinv))

    def test_random_product_contains_identity(self, rng):
        for _ in range(10):
            A = rng.standard_normal((3, 3))
            Q, Qinv = rigorous_qr(A)
            assert contains_identity(imatmul(Q, Qinv))

    def test_rank_deficient(self):
        A = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(IntervalError):
            rigorous_qr(A)


class TestVerifiedInverse:
    def test_identity(self):
        B = verified_inverse(IArray.from_point(np.eye(4)))
        assert contains_identity(imatmul(B, B))

    def test_diagonal(self):
        A = IArray.from_point(np.diag([2.0, 4.0]))
        B = verified_inverse(A)
        assert B.contains(IArray.from_point(np.diag([0.5, 0.25])))

    def test_random_5x5_both_sides(self, rng):
        for _ in range(10):
            A0 = rng.standard_normal((5, 5)) + 5 * np.eye(5)
            A = IArray.ball(A0, 1e-10)
            B = verified_inverse(A)
            assert contains_identity(imatmul(A, B))
            assert contains_identity(imatmul(B, A))

    def test_report_widths(self, rng):
        A = IArray.from_point(rng.standard_normal((4, 4)) + 4 * np.eye(4))
        B, width = verified_inverse(A, report=True)
        assert width >= 0.0 and width < 1e-10

    def test_singular_rejected(self):
        A = IArray.from_point(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(IntervalError):
            verified_inverse(A)

    def test_wide_input_rejected(self):
        # entries wide enough to contain singular members must not verify
        A = IArray.ball(np.eye(2), 1.5)
        with pytest.raises(IntervalError):
            verified_inverse(A)
