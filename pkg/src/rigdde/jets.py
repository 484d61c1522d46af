"""Jets of d-valued functions and the solution-jet recurrence for DDEs.

A jet of order n stores Taylor coefficients g^[k] = g^(k)/k! (right
derivatives) for k = 0..n.  Internally coefficients are kept per component as
plain Python lists (``comp_series[c][k]``) so that the same code runs on
floats, numpy-array batches, Intervals and Grad scalars; the :class:`Jet`
wrapper carries the coefficient-major view used at module boundaries.
"""

from __future__ import annotations

import math

from .intervals import IArray, Interval, IntervalError
from .series import sc_interval


class Jet:
    """Order-n jet of a d-valued function at a base point.

    ``coeffs[k][c]`` is component c of the k-th Taylor coefficient; scalars
    may be floats, numpy arrays, Intervals or Grad values.
    """

    __slots__ = ("coeffs", "base_point")

    def __init__(self, coeffs, base_point: float = 0.0):
        coeffs = [list(ck) for ck in coeffs]
        if not coeffs:
            raise ValueError("a jet needs at least the order-0 coefficient")
        d = len(coeffs[0])
        if any(len(ck) != d for ck in coeffs):
            raise ValueError("ragged jet coefficients")
        self.coeffs = coeffs
        self.base_point = float(base_point)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def dim(self) -> int:
        return len(self.coeffs[0])

    def component(self, c: int) -> list:
        """The coefficient series of one scalar component."""
        return [ck[c] for ck in self.coeffs]

    def components(self) -> list:
        return [self.component(c) for c in range(self.dim)]

    @staticmethod
    def from_components(comp_series, base_point: float = 0.0) -> "Jet":
        nlen = len(comp_series[0])
        if any(len(s) != nlen for s in comp_series):
            raise ValueError("ragged component series")
        return Jet(
            [[s[k] for s in comp_series] for k in range(nlen)], base_point
        )

    def truncated(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot truncate to a higher order")
        return Jet(self.coeffs[: order + 1], self.base_point)

    def to_iarray(self) -> IArray:
        """Coefficient-major (order+1, d) interval array of the jet."""
        ivs = [
            [sc_interval(x) for x in ck] for ck in self.coeffs
        ]
        return IArray(
            [[iv.lo for iv in row] for row in ivs],
            [[iv.hi for iv in row] for row in ivs],
        )

    @staticmethod
    def from_iarray(arr: IArray, base_point: float = 0.0) -> "Jet":
        return Jet(
            [[arr[k, c] for c in range(arr.shape[1])] for k in range(arr.shape[0])],
            base_point,
        )

    def __repr__(self):
        return f"Jet(order={self.order}, dim={self.dim})"


def w_star(n: int, j: Jet) -> Jet:
    """Antiderivative weighting: output coefficient k is j_[k]/(k+1), k<n.

    This is the weighting that turns the jet of x' into the order-1..n part
    of the jet of x.
    """
    if j.order < n - 1:
        raise ValueError("jet too short for the requested weighting")
    return Jet(
        [[x / (k + 1) for x in j.coeffs[k]] for k in range(n)], j.base_point
    )


def dde_recurrence(rhs, z0, delayed, n: int, want_f_jet: bool = False):
    """Build the order-(n+1) solution jet at the current time.

    ``z0`` is the current solution value (length-d list of scalars, or an
    IArray/vector) and ``delayed`` the list of m jets of order >= n at the
    delayed times.  Coefficient k+1 of the solution is coefficient k of the
    jet of t -> f(x(t), x(t-tau_1), ...) divided by k+1, where the jet of the
    current-value argument is the part of the solution jet already built --
    this is well-founded because coefficient k of an elementary composition
    only reads argument coefficients of index <= k.

    Returns the solution jet of order n+1, or ``(solution, f_jet)`` with the
    order-n jet of the right-hand side along the solution if requested.
    """
    d = rhs.d
    if isinstance(z0, IArray):
        z0 = list(z0.tolist())
    z0 = list(z0)
    if len(z0) != d:
        raise ValueError("z0 has wrong dimension")
    if len(delayed) != rhs.m:
        raise ValueError("wrong number of delayed jets")
    for j in delayed:
        if j.order < n:
            raise IntervalError("delayed jet order too small for the recurrence")

    # input series: current-value block aliases the solution series being built
    sol = [[z0[c]] for c in range(d)]
    env = list(sol)
    for j in delayed:
        env.extend(j.components())

    states = rhs.make_states(env)
    for k in range(n + 1):
        for c in range(d):
            states[c].extend(k)
            sol[c].append(states[c].out[k] / (k + 1))

    x = Jet.from_components(sol)
    if want_f_jet:
        f_jet = Jet.from_components([st.out[: n + 1] for st in states])
        return x, f_jet
    return x


def jet_derivative(j: Jet, k: int):
    """Jet of the k-th scaled derivative x^[k] = x^(k)/k!.

    Returns ``(djet, remainder_factor)`` where djet has order n-k with
    coefficients binom(l+k, k) * j_[l+k], and remainder_factor = binom(n+1, k)
    is the exact integer scaling of the remainder bound of a forward Taylor
    representation of order n.
    """
    n = j.order
    if not 0 <= k <= n:
        raise ValueError(f"derivative order {k} out of range for jet order {n}")
    coeffs = [
        [math.comb(l + k, k) * x for x in j.coeffs[l + k]] for l in range(n - k + 1)
    ]
    return Jet(coeffs, j.base_point), math.comb(n + 1, k)
