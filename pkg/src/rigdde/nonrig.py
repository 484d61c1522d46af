"""Nonrigorous floating-point mirror of the rigorous pipeline.

The same expression trees and jet recurrences run on plain floats (or numpy
arrays, giving many trajectories in one pass), with no remainder tracking
and no outward rounding.  This backend produces the high-accuracy reference
solutions used by the soundness tests and everything the candidate finder
needs: crossing times, Poincare points, finite-difference Jacobians.

A state stores the same data as the finite part of a function set: the value
now ``z`` and one jet per grid interval.  Entries may carry an extra batch
axis; slicing a batch member gives an ordinary scalar state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import Rhs
from .jets import Jet, dde_recurrence
from .space import Grid, Layout, uniform_orders

import math


@dataclass
class PointState:
    """Point (or batched) representation: value now plus one jet per interval.

    ``jets[i - 1]`` has shape ``(eta_i + 1, d) + batch``; ``z`` has shape
    ``(d,) + batch``.
    """

    grid: Grid
    d: int
    eta: tuple
    z: np.ndarray
    jets: list

    @property
    def batch_shape(self):
        return self.z.shape[1:]

    def member(self, b) -> "PointState":
        """Extract one batch member as a scalar state."""
        return PointState(
            self.grid,
            self.d,
            self.eta,
            np.ascontiguousarray(self.z[..., b]),
            [np.ascontiguousarray(J[..., b]) for J in self.jets],
        )

    # -- conversion to/from flat layout vectors -------------------------------

    def to_vector(self) -> np.ndarray:
        lay = Layout(self.d, self.eta)
        out = np.empty((lay.M,) + self.batch_shape)
        out[0 : self.d] = self.z
        for i in range(1, self.grid.p + 1):
            for k in range(self.eta[i - 1] + 1):
                sl = lay.slice_of(lay.group_jet(i, k))
                out[sl] = self.jets[i - 1][k]
        return out

    @staticmethod
    def from_vector(grid: Grid, d: int, eta, vec) -> "PointState":
        eta = tuple(eta)
        lay = Layout(d, eta)
        vec = np.asarray(vec, dtype=np.float64)
        z = vec[0:d].copy()
        jets = []
        for i in range(1, grid.p + 1):
            J = np.empty((eta[i - 1] + 1, d) + vec.shape[1:])
            for k in range(eta[i - 1] + 1):
                J[k] = vec[lay.slice_of(lay.group_jet(i, k))]
            jets.append(J)
        return PointState(grid, d, eta, z, jets)

    @staticmethod
    def constant(grid: Grid, d: int, n: int, value) -> "PointState":
        eta = uniform_orders(n, grid.p)
        v = np.asarray(value, dtype=np.float64)
        if v.ndim == 0:
            v = np.full(d, float(v))
        jets = []
        for i in range(grid.p):
            J = np.zeros((eta[i] + 1,) + v.shape)
            J[0] = v
            jets.append(J)
        return PointState(grid, d, eta, v.copy(), jets)

    # -- evaluation -----------------------------------------------------------

    def derivative_at(self, i: int, k: int, eps: float) -> np.ndarray:
        """k-th scaled derivative of the represented function at t_i + eps."""
        J = self.jets[i - 1]
        n_i = self.eta[i - 1]
        acc = np.zeros_like(self.z)
        for l in range(n_i - k, -1, -1):
            acc = acc * eps + J[l + k] * math.comb(l + k, k)
        return acc

    def eval(self, t: float) -> np.ndarray:
        """Value of the represented function at t in [-tau, 0]."""
        if t == 0.0:
            return self.z
        h = self.grid.h
        i = min(int(math.floor(-t / h)) + 1, self.grid.p)
        return self.derivative_at(i, 0, t + i * h)


def nonrig_step(rhs: Rhs, st: PointState, cap: int) -> PointState:
    """One full grid step of the method of steps, point arithmetic."""
    delay_steps = [int(round(tau / st.grid.h)) for tau in rhs.delays]
    n_step = min(st.eta[pi - 1] for pi in delay_steps)
    nu = min(n_step + 1, cap)
    delayed = [
        Jet([list(st.jets[pi - 1][k]) for k in range(nu)]) for pi in delay_steps
    ]
    sol = dde_recurrence(rhs, list(st.z), delayed, nu - 1)
    J_new = np.empty((nu + 1, st.d) + st.batch_shape)
    for k in range(nu + 1):
        for c in range(st.d):
            J_new[k, c] = sol.coeffs[k][c]
    h = st.grid.h
    z_new = np.zeros_like(st.z)
    for k in range(nu, -1, -1):
        z_new = z_new * h + J_new[k]
    return PointState(
        st.grid,
        st.d,
        (nu,) + st.eta[:-1],
        z_new,
        [J_new] + st.jets[:-1],
    )


def nonrig_eps_shift(
    x_m: PointState, x_m1: PointState, eps: float, n_out: int
) -> PointState:
    """The representation at time m*h + eps, truncated to uniform order n_out."""
    d = x_m.d
    jets = []
    for i in range(1, x_m.grid.p + 1):
        J = np.empty((n_out + 1, d) + x_m.batch_shape)
        for k in range(n_out + 1):
            J[k] = x_m.derivative_at(i, k, eps)
        jets.append(J)
    z = x_m1.derivative_at(1, 0, eps)
    return PointState(x_m.grid, d, tuple([n_out] * x_m.grid.p), z, jets)


class NonrigTrajectory:
    """Integrates and keeps a sliding window of recent states."""

    def __init__(self, rhs: Rhs, st: PointState, cap: int, window: int = 0):
        self.rhs = rhs
        self.cap = cap
        self.window = window
        self.states = {0: st}
        self.m = 0

    def advance(self, steps: int = 1) -> PointState:
        for _ in range(steps):
            self.states[self.m + 1] = nonrig_step(
                self.rhs, self.states[self.m], self.cap
            )
            self.m += 1
            if self.window and self.m - self.window - 1 in self.states:
                del self.states[self.m - self.window - 1]
        return self.states[self.m]

    def __getitem__(self, m: int) -> PointState:
        try:
            return self.states[m]
        except KeyError:
            raise KeyError(f"state {m} evicted from the window") from None


def project_vector(st: PointState, n: int) -> np.ndarray:
    """Flat layout vector of the order-n truncation (the finite part a(x)
    seen by sections and h-sets, which live in the base uniform space)."""
    d, p = st.d, st.grid.p
    lay = Layout(d, [n] * p)
    out = np.empty((lay.M,) + st.batch_shape)
    out[0:d] = st.z
    for i in range(1, p + 1):
        if st.eta[i - 1] < n:
            raise ValueError("state order below the projection order")
        for k in range(n + 1):
            out[lay.slice_of(lay.group_jet(i, k))] = st.jets[i - 1][k]
    return out
