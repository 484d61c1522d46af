"""Outward-rounded interval arithmetic on IEEE-754 doubles.

Two representations are provided:

* :class:`Interval` -- a scalar interval, fast enough for the inner loops of
  truncated-series arithmetic;
* :class:`IArray` -- arrays of intervals stored as a pair of endpoint
  ``numpy`` arrays, used for vector/matrix work.

Rounding is realized by next-representable nudging instead of switching the
hardware rounding mode, which makes every operation pure and safe under
concurrent use.  A result computed in round-to-nearest differs from the exact
value by strictly less than one unit in the last place, so a single
``nextafter`` step in each direction yields a rigorous enclosure of any
correctly rounded operation.  libm transcendentals are not guaranteed
correctly rounded, so their endpoints are nudged two steps.
"""

from __future__ import annotations

import math
import re

import numpy as np

_INF = math.inf


class IntervalError(ArithmeticError):
    """Raised when an interval operation leaves its domain (e.g. division by
    an interval containing zero) or a verification step fails."""


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _down2(x: float) -> float:
    return math.nextafter(math.nextafter(x, -_INF), -_INF)


def _up2(x: float) -> float:
    return math.nextafter(math.nextafter(x, _INF), _INF)


class Interval:
    """A closed interval [lo, hi] of doubles with outward-rounded arithmetic."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if not (lo <= hi):  # also catches NaN
            raise IntervalError(f"invalid interval endpoints [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def zero() -> "Interval":
        return Interval(0.0, 0.0)

    @staticmethod
    def ball(mid: float, rad: float) -> "Interval":
        """Interval mid + [-rad, rad], outward rounded."""
        return Interval(_down(mid - rad), _up(mid + rad))

    @staticmethod
    def _coerce(x) -> "Interval":
        if isinstance(x, Interval):
            return x
        if isinstance(x, (int, float, np.floating, np.integer)):
            return Interval(float(x), float(x))
        raise TypeError(f"cannot coerce {type(x)!r} to Interval")

    @staticmethod
    def _try_coerce(x):
        try:
            return Interval._coerce(x)
        except TypeError:
            return None

    # -- queries --------------------------------------------------------------

    def mid(self) -> float:
        m = 0.5 * (self.lo + self.hi)
        if not math.isfinite(m):
            m = 0.5 * self.lo + 0.5 * self.hi
        return m

    def diam(self) -> float:
        return _up(self.hi - self.lo)

    def rad(self) -> float:
        return _up(0.5 * _up(self.hi - self.lo))

    def mag(self) -> float:
        """max |x| over the interval."""
        return max(abs(self.lo), abs(self.hi))

    def mig(self) -> float:
        """min |x| over the interval."""
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= float(x) <= self.hi

    def contains_strict(self, other: "Interval") -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersection(self, other: "Interval") -> "Interval":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            raise IntervalError("empty intersection")
        return Interval(lo, hi)

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def is_point(self) -> bool:
        return self.lo == self.hi

    # -- arithmetic -----------------------------------------------------------

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other):
        o = Interval._try_coerce(other)
        if o is None:
            return NotImplemented
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    __radd__ = __add__

    def __sub__(self, other):
        o = Interval._try_coerce(other)
        if o is None:
            return NotImplemented
        return Interval(_down(self.lo - o.hi), _up(self.hi - o.lo))

    def __rsub__(self, other) -> "Interval":
        return Interval._coerce(other) - self

    def __mul__(self, other):
        o = Interval._try_coerce(other)
        if o is None:
            return NotImplemented
        p1 = self.lo * o.lo
        p2 = self.lo * o.hi
        p3 = self.hi * o.lo
        p4 = self.hi * o.hi
        return Interval(_down(min(p1, p2, p3, p4)), _up(max(p1, p2, p3, p4)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Interval._try_coerce(other)
        if o is None:
            return NotImplemented
        if o.lo <= 0.0 <= o.hi:
            raise IntervalError(f"division by interval containing zero: {o}")
        q1 = self.lo / o.lo
        q2 = self.lo / o.hi
        q3 = self.hi / o.lo
        q4 = self.hi / o.hi
        return Interval(_down(min(q1, q2, q3, q4)), _up(max(q1, q2, q3, q4)))

    def __rtruediv__(self, other) -> "Interval":
        return Interval._coerce(other) / self

    def __pow__(self, k: int) -> "Interval":
        if not isinstance(k, (int, np.integer)):
            raise TypeError("use power() for non-integer exponents")
        k = int(k)
        if k < 0:
            return Interval(1.0) / (self ** (-k))
        if k == 0:
            return Interval(1.0)
        if k % 2 == 1 or self.lo >= 0.0:
            lo = _pow_down(self.lo, k)
            hi = _pow_up(self.hi, k)
            if lo > hi:  # even power of a negative interval part
                lo, hi = _pow_down(self.hi, k), _pow_up(self.lo, k)
            return Interval(lo, hi)
        # even power, interval straddles or is below zero
        if self.hi <= 0.0:
            return Interval(_pow_down(-self.hi, k), _pow_up(-self.lo, k))
        return Interval(0.0, max(_pow_up(-self.lo, k), _pow_up(self.hi, k)))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Interval) and self.lo == other.lo and self.hi == other.hi
        )

    def __hash__(self):
        return hash((self.lo, self.hi))


def _pow_down(x: float, k: int) -> float:
    """Lower bound of x**k by binary exponentiation with outward rounding."""
    lo, hi = 1.0, 1.0
    blo, bhi = (x, x)
    n = k
    while n:
        if n & 1:
            lo, hi = _mul_pair(lo, hi, blo, bhi)
        n >>= 1
        if n:
            blo, bhi = _mul_pair(blo, bhi, blo, bhi)
    return lo


def _pow_up(x: float, k: int) -> float:
    lo, hi = 1.0, 1.0
    blo, bhi = (x, x)
    n = k
    while n:
        if n & 1:
            lo, hi = _mul_pair(lo, hi, blo, bhi)
        n >>= 1
        if n:
            blo, bhi = _mul_pair(blo, bhi, blo, bhi)
    return hi


def _mul_pair(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    return _down(min(p1, p2, p3, p4)), _up(max(p1, p2, p3, p4))


# -- transcendental functions -------------------------------------------------

# Enclosure of pi (math.pi rounds down from the true value).
PI = Interval(math.pi, _up(math.pi))
TWO_PI = PI * 2
HALF_PI = PI / 2


def isqrt(x: Interval) -> Interval:
    if x.lo < 0.0:
        raise IntervalError(f"sqrt of interval with negative part: {x}")
    return Interval(max(0.0, _down(math.sqrt(x.lo))), _up(math.sqrt(x.hi)))


def iexp(x: Interval) -> Interval:
    return Interval(max(0.0, _down2(math.exp(x.lo))), _up2(math.exp(x.hi)))


def ilog(x: Interval) -> Interval:
    if x.lo <= 0.0:
        raise IntervalError(f"log of interval reaching zero: {x}")
    return Interval(_down2(math.log(x.lo)), _up2(math.log(x.hi)))


def ipower(x: Interval, e: float) -> Interval:
    """x**e for a real (possibly non-integer) exponent; requires x > 0."""
    if isinstance(e, (int, np.integer)) or float(e).is_integer():
        return x ** int(e)
    if x.lo <= 0.0:
        raise IntervalError(f"non-integer power of non-positive interval: {x}")
    return iexp(ilog(x) * Interval._coerce(float(e)))


def _has_point_near(a: float, b: float, k_offset: float) -> bool:
    """Conservatively test whether (2k + k_offset) * pi falls in [a, b] for
    some integer k.  May report True spuriously (safe direction)."""
    step = 2.0 * math.pi
    k_min = math.floor((a - abs(a) * 1e-12 - k_offset * math.pi) / step) - 1
    k_max = math.ceil((b + abs(b) * 1e-12 - k_offset * math.pi) / step) + 1
    for k in range(int(k_min), int(k_max) + 1):
        pt = PI * (2 * k + k_offset)
        if pt.hi >= a and pt.lo <= b:
            return True
    return False


def isin(x: Interval) -> Interval:
    if x.diam() >= TWO_PI.lo:
        return Interval(-1.0, 1.0)
    slo = _down2(min(math.sin(x.lo), math.sin(x.hi)))
    shi = _up2(max(math.sin(x.lo), math.sin(x.hi)))
    if _has_point_near(x.lo, x.hi, 0.5):  # maxima at pi/2 + 2k pi
        shi = 1.0
    if _has_point_near(x.lo, x.hi, 1.5):  # minima at 3pi/2 + 2k pi
        slo = -1.0
    return Interval(max(slo, -1.0), min(shi, 1.0))


def icos(x: Interval) -> Interval:
    if x.diam() >= TWO_PI.lo:
        return Interval(-1.0, 1.0)
    clo = _down2(min(math.cos(x.lo), math.cos(x.hi)))
    chi = _up2(max(math.cos(x.lo), math.cos(x.hi)))
    if _has_point_near(x.lo, x.hi, 0.0):  # maxima at 2k pi
        chi = 1.0
    if _has_point_near(x.lo, x.hi, 1.0):  # minima at pi + 2k pi
        clo = -1.0
    return Interval(max(clo, -1.0), min(chi, 1.0))


# =============================================================================
# Interval arrays
# =============================================================================


def _nd(a):  # outward nudge down, array version
    return np.nextafter(a, -_INF)


def _nu(a):
    return np.nextafter(a, _INF)


def _arr_mul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    lo = _nd(np.minimum(np.minimum(p1, p2), np.minimum(p3, p4)))
    hi = _nu(np.maximum(np.maximum(p1, p2), np.maximum(p3, p4)))
    return lo, hi


class IArray:
    """An array of intervals, stored as endpoint arrays ``lo`` and ``hi``."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None, _unsafe=False):
        lo = np.asarray(lo, dtype=np.float64)
        hi = lo.copy() if hi is None else np.asarray(hi, dtype=np.float64)
        if not _unsafe:
            if lo.shape != hi.shape:
                raise IntervalError("endpoint shape mismatch")
            if not np.all(lo <= hi):
                raise IntervalError("invalid interval array (lo > hi or NaN)")
        self.lo = lo
        self.hi = hi

    # -- construction ---------------------------------------------------------

    @staticmethod
    def zeros(shape) -> "IArray":
        z = np.zeros(shape)
        return IArray(z, z.copy(), _unsafe=True)

    @staticmethod
    def from_point(a) -> "IArray":
        a = np.asarray(a, dtype=np.float64)
        return IArray(a.copy(), a.copy(), _unsafe=True)

    @staticmethod
    def ball(mid, rad) -> "IArray":
        mid = np.asarray(mid, dtype=np.float64)
        rad = np.asarray(rad, dtype=np.float64)
        return IArray(_nd(mid - rad), _nu(mid + rad), _unsafe=True)

    @staticmethod
    def from_intervals(ivs) -> "IArray":
        ivs = list(ivs)
        return IArray(
            np.array([iv.lo for iv in ivs]), np.array([iv.hi for iv in ivs])
        )

    @staticmethod
    def stack(parts, axis=0) -> "IArray":
        return IArray(
            np.stack([p.lo for p in parts], axis=axis),
            np.stack([p.hi for p in parts], axis=axis),
            _unsafe=True,
        )

    @staticmethod
    def concatenate(parts, axis=0) -> "IArray":
        return IArray(
            np.concatenate([p.lo for p in parts], axis=axis),
            np.concatenate([p.hi for p in parts], axis=axis),
            _unsafe=True,
        )

    @staticmethod
    def _coerce(x, like=None) -> "IArray":
        if isinstance(x, IArray):
            return x
        if isinstance(x, Interval):
            return IArray(np.float64(x.lo), np.float64(x.hi), _unsafe=True)
        return IArray.from_point(x)

    # -- shape / access -------------------------------------------------------

    @property
    def shape(self):
        return self.lo.shape

    @property
    def ndim(self):
        return self.lo.ndim

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx):
        lo = self.lo[idx]
        hi = self.hi[idx]
        if np.ndim(lo) == 0:
            return Interval(float(lo), float(hi))
        return IArray(lo, hi, _unsafe=True)

    def __setitem__(self, idx, value):
        v = IArray._coerce(value)
        self.lo[idx] = v.lo
        self.hi[idx] = v.hi

    def copy(self) -> "IArray":
        return IArray(self.lo.copy(), self.hi.copy(), _unsafe=True)

    def reshape(self, *shape) -> "IArray":
        return IArray(self.lo.reshape(*shape), self.hi.reshape(*shape), _unsafe=True)

    @property
    def T(self) -> "IArray":
        return IArray(self.lo.T, self.hi.T, _unsafe=True)

    def ravel(self) -> "IArray":
        return IArray(self.lo.ravel(), self.hi.ravel(), _unsafe=True)

    def tolist(self):
        if self.ndim == 1:
            return [Interval(float(l), float(h)) for l, h in zip(self.lo, self.hi)]
        return [self[i].tolist() for i in range(self.shape[0])]

    # -- queries --------------------------------------------------------------

    def mid(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def diam(self) -> np.ndarray:
        return _nu(self.hi - self.lo)

    def max_diam(self) -> float:
        return float(np.max(self.diam())) if self.lo.size else 0.0

    def mag(self) -> np.ndarray:
        return np.maximum(np.abs(self.lo), np.abs(self.hi))

    def contains(self, other) -> bool:
        o = IArray._coerce(other)
        return bool(np.all(self.lo <= o.lo) and np.all(o.hi <= self.hi))

    def contains_strict(self, other) -> bool:
        o = IArray._coerce(other)
        return bool(np.all(self.lo < o.lo) and np.all(o.hi < self.hi))

    def hull_with(self, other) -> "IArray":
        o = IArray._coerce(other)
        return IArray(
            np.minimum(self.lo, o.lo), np.maximum(self.hi, o.hi), _unsafe=True
        )

    def intersection(self, other) -> "IArray":
        o = IArray._coerce(other)
        lo = np.maximum(self.lo, o.lo)
        hi = np.minimum(self.hi, o.hi)
        if np.any(lo > hi):
            raise IntervalError("empty intersection")
        return IArray(lo, hi, _unsafe=True)

    def widen(self, rel: float = 0.0, abs_: float = 0.0) -> "IArray":
        """Inflate: each entry grows by rel * its radius plus abs_ on both sides."""
        r = 0.5 * (self.hi - self.lo) * rel + abs_
        return IArray(_nd(self.lo - r), _nu(self.hi + r), _unsafe=True)

    # -- arithmetic -----------------------------------------------------------

    def __neg__(self) -> "IArray":
        return IArray(-self.hi, -self.lo, _unsafe=True)

    def __add__(self, other) -> "IArray":
        o = IArray._coerce(other)
        return IArray(_nd(self.lo + o.lo), _nu(self.hi + o.hi), _unsafe=True)

    __radd__ = __add__

    def __sub__(self, other) -> "IArray":
        o = IArray._coerce(other)
        return IArray(_nd(self.lo - o.hi), _nu(self.hi - o.lo), _unsafe=True)

    def __rsub__(self, other) -> "IArray":
        return IArray._coerce(other) - self

    def __mul__(self, other) -> "IArray":
        o = IArray._coerce(other)
        lo, hi = _arr_mul(self.lo, self.hi, o.lo, o.hi)
        return IArray(lo, hi, _unsafe=True)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "IArray":
        o = IArray._coerce(other)
        if np.any((o.lo <= 0.0) & (o.hi >= 0.0)):
            raise IntervalError("division by interval array containing zero")
        q1 = self.lo / o.lo
        q2 = self.lo / o.hi
        q3 = self.hi / o.lo
        q4 = self.hi / o.hi
        lo = _nd(np.minimum(np.minimum(q1, q2), np.minimum(q3, q4)))
        hi = _nu(np.maximum(np.maximum(q1, q2), np.maximum(q3, q4)))
        return IArray(lo, hi, _unsafe=True)

    def sum(self) -> Interval:
        lo = 0.0
        hi = 0.0
        for l, h in zip(self.lo.ravel(), self.hi.ravel()):
            lo = _down(lo + l)
            hi = _up(hi + h)
        return Interval(lo, hi)

    def scalar(self) -> Interval:
        if self.lo.size != 1:
            raise IntervalError("scalar() on non-singleton IArray")
        return Interval(float(self.lo.ravel()[0]), float(self.hi.ravel()[0]))


def imatmul(a, b) -> IArray:
    """Interval matrix product with per-term outward rounding.

    Accepts IArray or plain arrays for either operand; supports (m,k)@(k,n),
    (m,k)@(k,) and (k,)@(k,n).
    """
    A = IArray._coerce(a)
    B = IArray._coerce(b)
    if A.ndim == 1 and B.ndim == 2:
        out = imatmul(A.reshape(1, -1), B)
        return out.reshape(-1)
    if A.ndim == 2 and B.ndim == 1:
        out = imatmul(A, B.reshape(-1, 1))
        return out.reshape(-1)
    if A.ndim == 1 and B.ndim == 1:
        return idot(A, B)  # type: ignore[return-value]
    m, k = A.shape
    k2, n = B.shape
    if k != k2:
        raise IntervalError(f"matmul shape mismatch {A.shape} @ {B.shape}")
    acc_lo = np.zeros((m, n))
    acc_hi = np.zeros((m, n))
    for t in range(k):
        plo, phi = _arr_mul(
            A.lo[:, t : t + 1], A.hi[:, t : t + 1], B.lo[t : t + 1, :], B.hi[t : t + 1, :]
        )
        # additions of exact zeros stay exact (keeps reduced products bitwise
        # equal to dense products over zero-padded rows)
        acc_lo = np.where(plo == 0.0, acc_lo, _nd(acc_lo + plo))
        acc_hi = np.where(phi == 0.0, acc_hi, _nu(acc_hi + phi))
    return IArray(acc_lo, acc_hi, _unsafe=True)


_EPS_U = 2.0 ** -53


def isum_last_axis(lo: np.ndarray, hi: np.ndarray):
    """Rigorous interval sum along the last axis of endpoint arrays.

    Uses the standard floating-sum error bound |fl(sum) - sum| <=
    gamma_(n-1) * sum|x_i| with gamma_k = k*u/(1-k*u), instead of per-term
    directed rounding; much faster for long reductions.
    """
    n = lo.shape[-1]
    if n == 0:
        z = np.zeros(lo.shape[:-1])
        return z, z.copy()
    # slack factor swamps the few-ulp rounding of the error term itself
    g = (n * _EPS_U) / (1.0 - n * _EPS_U) * (1.0 + 1e-12)
    slo = np.sum(lo, axis=-1)
    shi = np.sum(hi, axis=-1)
    err_lo = _nu(g * np.sum(np.abs(lo), axis=-1))
    err_hi = _nu(g * np.sum(np.abs(hi), axis=-1))
    return _nd(slo - err_lo), _nu(shi + err_hi)


def imatvec(a, b) -> IArray:
    """Rigorous product of a (K,N) interval/point matrix with an N interval
    vector, vectorized over the long inner dimension."""
    A = IArray._coerce(a)
    B = IArray._coerce(b)
    plo, phi = _arr_mul(A.lo, A.hi, B.lo[None, :], B.hi[None, :])
    lo, hi = isum_last_axis(plo, phi)
    return IArray(lo, hi, _unsafe=True)


def idot(a, b) -> Interval:
    A = IArray._coerce(a)
    B = IArray._coerce(b)
    plo, phi = _arr_mul(A.lo, A.hi, B.lo, B.hi)
    lo = 0.0
    hi = 0.0
    for l, h in zip(plo, phi):
        lo = _down(lo + l)
        hi = _up(hi + h)
    return Interval(lo, hi)


def hull(boxes) -> IArray:
    """Smallest box containing every box in a nonempty list."""
    boxes = list(boxes)
    if not boxes:
        raise IntervalError("hull of empty list")
    out = IArray._coerce(boxes[0]).copy()
    for b in boxes[1:]:
        out = out.hull_with(b)
    return out


def mid_split(x: IArray):
    """Split a box into a representable midpoint m and a centered box c with
    m + c containing x."""
    x = IArray._coerce(x)
    m = x.mid()
    c = x - IArray.from_point(m)
    return m, c


# =============================================================================
# Small rigorous linear algebra
# =============================================================================


def _inf_norm_upper(M: IArray) -> float:
    """Rigorous upper bound for the infinity norm of an interval matrix."""
    mag = M.mag()
    worst = 0.0
    for i in range(mag.shape[0]):
        s = 0.0
        for v in mag[i]:
            s = _up(s + float(v))
        worst = max(worst, s)
    return worst


def rigorous_qr(A) -> tuple[IArray, IArray]:
    """Enclose the Gram-Schmidt orthogonalization of a small point matrix.

    Returns (Q, Qinv) where Q is an interval matrix enclosing an exactly
    orthogonal matrix (the orthonormalization of A's columns in exact
    arithmetic) and Qinv is its transpose, so that Id is contained in Q@Qinv.
    Intended for d x d blocks with small d.
    """
    A = np.asarray(A, dtype=np.float64)
    d = A.shape[0]
    if A.shape != (d, d):
        raise IntervalError("rigorous_qr expects a square matrix")
    cols: list[IArray] = []
    for j in range(d):
        v = IArray.from_point(A[:, j])
        for _pass in range(2):  # one re-orthogonalization pass
            for q in cols:
                r = idot(q, v)
                v = v - q * r
        nrm2 = IArray.from_intervals([idot(v, v)])
        nrm = isqrt(nrm2.scalar())
        if nrm.lo <= 0.0:
            raise IntervalError("rank deficiency detected in rigorous_qr")
        v = v / IArray.from_intervals([nrm])
        cols.append(v)
    Q = IArray.stack(cols, axis=1)
    return Q, Q.T


def verified_inverse(A, report=False):
    """Rigorous enclosure of the inverse of an interval (or point) matrix.

    Uses an approximate floating inverse Y of the midpoint plus the Neumann
    series bound: if r = ||I - Y*[A]||_inf < 1, every member of [A] is
    invertible and its inverse lies within Y entrywise inflated by
    r*||Y||_inf/(1-r).  The products A@B and B@A are then checked to contain
    the identity, as the final gate.
    """
    Aiv = IArray._coerce(A)
    n = Aiv.shape[0]
    if Aiv.shape != (n, n):
        raise IntervalError("verified_inverse expects a square matrix")
    try:
        Y = np.linalg.inv(Aiv.mid())
    except np.linalg.LinAlgError as exc:
        raise IntervalError(f"midpoint inversion failed: {exc}") from None
    R = IArray.from_point(np.eye(n)) - imatmul(IArray.from_point(Y), Aiv)
    r = _inf_norm_upper(R)
    if r >= 1.0:
        raise IntervalError(f"inverse verification failed: defect norm {r} >= 1")
    normY = _inf_norm_upper(IArray.from_point(Y))
    delta = _up(_up(r * normY) / _down(1.0 - r))
    B = IArray.ball(Y, np.full((n, n), delta))
    AB = imatmul(Aiv, B)
    BA = imatmul(B, Aiv)
    ident = IArray.from_point(np.eye(n))
    if not (AB.contains(ident) and BA.contains(ident)):
        raise IntervalError("inverse verification failed: Id not contained")
    if report:
        return B, float(max(AB.max_diam(), BA.max_diam()))
    return B


# =============================================================================
# Text serialization
# =============================================================================
#
# Scalars:   [lo,hi] with 17-significant-digit decimal endpoints, or the exact
#            hexadecimal form [0x1.8p+1,0x1.cp+1].
# Vectors:   {[a,b],[c,d],...}
# Matrices:  {{[..],[..]},{[..],[..]}}   (row-major)


def format_float(x: float, hex_form: bool = False) -> str:
    if hex_form:
        return float(x).hex()
    return f"{float(x):.17g}"


def parse_float(s: str) -> float:
    s = s.strip()
    if "x" in s or "X" in s:
        return float.fromhex(s)
    return float(s)


def format_interval(iv: Interval, hex_form: bool = False) -> str:
    return f"[{format_float(iv.lo, hex_form)},{format_float(iv.hi, hex_form)}]"


def parse_interval(s: str) -> Interval:
    s = s.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ValueError(f"not an interval literal: {s!r}")
    body = s[1:-1]
    parts = body.split(",")
    if len(parts) == 1:
        v = parse_float(parts[0])
        return Interval(v, v)
    if len(parts) != 2:
        raise ValueError(f"not an interval literal: {s!r}")
    return Interval(parse_float(parts[0]), parse_float(parts[1]))


def format_vector(v: IArray, hex_form: bool = False) -> str:
    items = ",".join(
        format_interval(Interval(float(l), float(h)), hex_form)
        for l, h in zip(v.lo, v.hi)
    )
    return "{" + items + "}"


def format_matrix(m: IArray, hex_form: bool = False) -> str:
    rows = ",".join(format_vector(m[i], hex_form) for i in range(m.shape[0]))
    return "{" + rows + "}"


_TOKEN = re.compile(r"\s*([{}\[\],]|[^{}\[\],\s]+)")


def _tokenize(s: str):
    pos = 0
    out = []
    while pos < len(s):
        mt = _TOKEN.match(s, pos)
        if not mt:
            break
        out.append(mt.group(1))
        pos = mt.end()
    return out


def _parse_node(tokens, i):
    t = tokens[i]
    if t == "{":
        items = []
        i += 1
        while tokens[i] != "}":
            node, i = _parse_node(tokens, i)
            items.append(node)
            if tokens[i] == ",":
                i += 1
        return items, i + 1
    if t == "[":
        lo = parse_float(tokens[i + 1])
        if tokens[i + 2] == "]":
            return Interval(lo, lo), i + 3
        if tokens[i + 2] != "," or tokens[i + 4] != "]":
            raise ValueError("malformed interval literal")
        hi = parse_float(tokens[i + 3])
        return Interval(lo, hi), i + 5
    # bare number, treated as a degenerate interval
    v = parse_float(t)
    return Interval(v, v), i + 1


def parse_value(s: str):
    """Parse an interval, vector, or matrix literal.

    Returns an Interval for scalar literals and an IArray (1-D or 2-D) for
    brace-delimited vectors/matrices.
    """
    tokens = _tokenize(s)
    if not tokens:
        raise ValueError("empty literal")
    node, i = _parse_node(tokens, 0)
    if i != len(tokens):
        raise ValueError(f"trailing junk in literal: {s!r}")
    return _node_to_value(node)


def _node_to_value(node):
    if isinstance(node, Interval):
        return node
    if all(isinstance(x, Interval) for x in node):
        return IArray.from_intervals(node)
    rows = [_node_to_value(x) for x in node]
    return IArray.stack(rows, axis=0)


def parse_vector(s: str) -> IArray:
    v = parse_value(s)
    if isinstance(v, Interval):
        return IArray.from_intervals([v])
    if v.ndim != 1:
        raise ValueError("expected a vector literal")
    return v


def parse_matrix(s: str) -> IArray:
    v = parse_value(s)
    if not isinstance(v, IArray) or v.ndim != 2:
        raise ValueError("expected a matrix literal")
    return v
