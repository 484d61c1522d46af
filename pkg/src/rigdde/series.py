"""Truncated Taylor-series (jet) arithmetic, generic over the scalar type.

Series are plain Python lists of scalar coefficients ``a[0..n]`` holding the
Taylor coefficients g^[k] = g^(k)(t0)/k!.  Three scalar backends are used
throughout the package:

* floats / numpy arrays -- fast nonrigorous evaluation; a numpy array scalar
  gives batched evaluation of many trajectories at once;
* :class:`~rigdde.intervals.Interval` -- rigorous enclosures;
* :class:`Grad` -- an interval value paired with an interval gradient with
  respect to a fixed list of seed variables (forward-mode differentiation),
  used to obtain the step Jacobians needed for wrapping-effect control.

All recurrences compute coefficient k from operand coefficients of index at
most k, so series can be extended order by order while they are being
consumed (which is exactly what the solution-jet recurrence for delay
equations requires).
"""

from __future__ import annotations

import math

import numpy as np

from .intervals import (
    IArray,
    Interval,
    IntervalError,
    icos,
    iexp,
    ilog,
    ipower,
    isin,
    isqrt,
)


class Grad:
    """Forward-mode differentiation scalar: interval value + interval gradient.

    The gradient is an :class:`IArray` of fixed length (the number of seed
    variables).  Operations with plain numbers or Intervals treat them as
    constants (zero gradient).
    """

    __slots__ = ("v", "g")

    def __init__(self, v: Interval, g: IArray):
        self.v = v
        self.g = g

    @staticmethod
    def seed(value, nvars: int, index: int) -> "Grad":
        g = IArray.zeros(nvars)
        g[index] = Interval(1.0)
        return Grad(Interval._coerce(value), g)

    @staticmethod
    def const(value, nvars: int) -> "Grad":
        return Grad(Interval._coerce(value), IArray.zeros(nvars))

    def _split(self, other):
        if isinstance(other, Grad):
            return other.v, other.g
        iv = Interval._try_coerce(other)
        if iv is None:
            return None, None
        return iv, None

    def __add__(self, other):
        v, g = self._split(other)
        if v is None:
            return NotImplemented
        return Grad(self.v + v, self.g if g is None else self.g + g)

    __radd__ = __add__

    def __sub__(self, other):
        v, g = self._split(other)
        if v is None:
            return NotImplemented
        return Grad(self.v - v, self.g if g is None else self.g - g)

    def __rsub__(self, other):
        v, g = self._split(other)
        if v is None:
            return NotImplemented
        return Grad(v - self.v, -self.g if g is None else g - self.g)

    def __neg__(self):
        return Grad(-self.v, -self.g)

    def __mul__(self, other):
        v, g = self._split(other)
        if v is None:
            return NotImplemented
        gg = self.g * v
        if g is not None:
            gg = gg + g * self.v
        return Grad(self.v * v, gg)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v, g = self._split(other)
        if v is None:
            return NotImplemented
        q = self.v / v
        gg = self.g / v
        if g is not None:
            gg = gg - g * (q / v)
        return Grad(q, gg)

    def __rtruediv__(self, other):
        v, g = self._split(other)
        if v is None:
            return NotImplemented
        q = v / self.v
        gg = -self.g * (q / self.v)
        if g is not None:
            gg = gg + g / self.v
        return Grad(q, gg)

    def __repr__(self):
        return f"Grad({self.v!r})"


# -- scalar function dispatch -------------------------------------------------


def sc_exp(x):
    if isinstance(x, Grad):
        e = iexp(x.v)
        return Grad(e, x.g * e)
    if isinstance(x, Interval):
        return iexp(x)
    return np.exp(x)


def sc_log(x):
    if isinstance(x, Grad):
        return Grad(ilog(x.v), x.g / x.v)
    if isinstance(x, Interval):
        return ilog(x)
    return np.log(x)


def sc_sin(x):
    if isinstance(x, Grad):
        return Grad(isin(x.v), x.g * icos(x.v))
    if isinstance(x, Interval):
        return isin(x)
    return np.sin(x)


def sc_cos(x):
    if isinstance(x, Grad):
        return Grad(icos(x.v), -(x.g * isin(x.v)))
    if isinstance(x, Interval):
        return icos(x)
    return np.cos(x)


def sc_sqrt(x):
    if isinstance(x, Grad):
        r = isqrt(x.v)
        return Grad(r, x.g / (2.0 * r))
    if isinstance(x, Interval):
        return isqrt(x)
    return np.sqrt(x)


def sc_value(x):
    """Strip differentiation structure: the underlying Interval/float value."""
    if isinstance(x, Grad):
        return x.v
    return x


def sc_interval(x) -> Interval:
    """Coerce a scalar (float/Interval/Grad) to an Interval enclosure."""
    if isinstance(x, Grad):
        return x.v
    return Interval._coerce(x)


def sc_grad(x, nvars: int) -> IArray:
    if isinstance(x, Grad):
        return x.g
    return IArray.zeros(nvars)


# -- series recurrences (one coefficient at a time) ---------------------------
#
# Each function computes coefficient k of the result from operand coefficients
# of index <= k and previously computed result coefficients (passed as `out`).


def conv_coeff(a, b, k):
    s = 0.0
    for i in range(k + 1):
        s = s + a[i] * b[k - i]
    return s


def div_coeff(a, b, out, k):
    s = a[k]
    for i in range(k):
        s = s - out[i] * b[k - i]
    return s / b[0]


def exp_coeff(a, out, k):
    if k == 0:
        return sc_exp(a[0])
    s = 0.0
    for j in range(1, k + 1):
        s = s + (j * a[j]) * out[k - j]
    return s / k


def log_coeff(a, out, k):
    if k == 0:
        return sc_log(a[0])
    s = k * a[k]
    for j in range(1, k):
        s = s - (j * out[j]) * a[k - j]
    return (s / k) / a[0]


def sincos_coeff(a, souts, couts, k):
    """Returns (sin_k, cos_k)."""
    if k == 0:
        return sc_sin(a[0]), sc_cos(a[0])
    s = 0.0
    c = 0.0
    for j in range(1, k + 1):
        ja = j * a[j]
        s = s + ja * couts[k - j]
        c = c - ja * souts[k - j]
    return s / k, c / k
