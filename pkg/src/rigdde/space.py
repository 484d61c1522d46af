"""Piecewise-Taylor phase space on a uniform delay grid.

Functions on [-tau, 0] are represented on the grid t_i = -i*h, h = tau/p, by
a value-now block z, one Taylor jet j_i per grid interval I_i = [t_i,
t_{i-1}) of per-interval order eta_i, and one remainder box [xi]_i per
interval bounding the scaled derivative x^[eta_i + 1] on I_i.  A function
set X(A, R) couples a Lohner doubleton A over the finite part (z and all jet
coefficients, z first, jets coefficient-major) with the remainder boxes R.

On interval I_i, writing eps = t - t_i in [0, h):

    x(t)  in  T(j_i; eps) + [xi]_i * eps^(eta_i + 1)

and more generally the k-th scaled derivative x^[k] has the forward Taylor
representation with coefficients binom(l+k, k) * j_{i,[l+k]} and remainder
binom(eta_i + 1, k) * [xi]_i.
"""

from __future__ import annotations

import math

import numpy as np

from .intervals import IArray, Interval, IntervalError
from .lohner import DoubletonSet


class Grid:
    """Uniform grid on [-tau, 0] with p intervals of length h = tau/p.

    When tau/p is exactly representable (e.g. p a power of two and tau an
    integer) all grid arithmetic is exact; otherwise the stored h is the
    rounded value and every rigorous statement holds for the representable
    delay p*h.
    """

    __slots__ = ("tau", "p", "h")

    def __init__(self, tau: float, p: int):
        if tau <= 0 or p < 1:
            raise ValueError("need tau > 0 and p >= 1")
        self.tau = float(tau)
        self.p = int(p)
        self.h = self.tau / self.p

    def t(self, i: int) -> float:
        return -i * self.h

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.tau == other.tau
            and self.p == other.p
        )

    def __repr__(self):
        return f"Grid(tau={self.tau}, p={self.p})"


def uniform_orders(n: int, p: int, q: int = 0) -> tuple:
    """Order vector of the space with jets of order n+1 on the first q
    intervals and n on the rest; q = p normalizes to n+1 everywhere."""
    if not 0 <= q <= p:
        raise ValueError("need 0 <= q <= p")
    return tuple([n + 1] * q + [n] * (p - q))


def space_leq(eta, zeta) -> bool:
    """True iff the space with orders eta embeds in the one with orders zeta
    (pointwise eta_i >= zeta_i; smaller spaces have higher orders)."""
    eta = tuple(eta)
    zeta = tuple(zeta)
    if len(eta) != len(zeta):
        raise ValueError("order vectors over different grids")
    return all(a >= b for a, b in zip(eta, zeta))


def dimension(d: int, p: int, eta) -> int:
    eta = tuple(eta)
    if len(eta) != p:
        raise ValueError("order vector length must equal p")
    return d * (1 + sum(n + 1 for n in eta))


class Layout:
    """Flat indexing of the finite part: z block first, then jets j_1..j_p
    coefficient-major; one variable group = d consecutive entries."""

    __slots__ = ("d", "eta", "offsets", "n_groups")

    def __init__(self, d: int, eta):
        self.d = int(d)
        self.eta = tuple(int(n) for n in eta)
        offs = [1]
        for n in self.eta:
            offs.append(offs[-1] + n + 1)
        self.offsets = tuple(offs)  # group offset of jet i at offsets[i-1]
        self.n_groups = offs[-1]

    @property
    def M(self) -> int:
        return self.d * self.n_groups

    def group_z(self) -> int:
        return 0

    def group_jet(self, i: int, k: int) -> int:
        """Group index of coefficient k of the jet on interval i (1-based)."""
        if not 1 <= i <= len(self.eta) or not 0 <= k <= self.eta[i - 1]:
            raise IndexError(f"no coefficient (i={i}, k={k}) in this layout")
        return self.offsets[i - 1] + k

    def slice_of(self, g: int) -> slice:
        return slice(g * self.d, (g + 1) * self.d)


class FnSet:
    """A (p, eta)-function set X(A, R) on [-tau, 0]."""

    __slots__ = ("grid", "d", "eta", "A", "R", "layout", "_hull")

    def __init__(self, grid: Grid, d: int, eta, A: DoubletonSet, R: IArray):
        self.grid = grid
        self.d = int(d)
        self.eta = tuple(int(n) for n in eta)
        if len(self.eta) != grid.p:
            raise ValueError("order vector length must equal p")
        self.layout = Layout(d, self.eta)
        if A.M != self.layout.M or A.d != d:
            raise ValueError("doubleton dimension does not match layout")
        if R.shape != (grid.p, d):
            raise ValueError("remainder box must have shape (p, d)")
        self.A = A
        self.R = R
        self._hull = None

    # -- construction ---------------------------------------------------------

    @staticmethod
    def from_box(grid: Grid, d: int, eta, box: IArray, R: IArray) -> "FnSet":
        return FnSet(grid, d, eta, DoubletonSet.from_box(box, d), R)

    @staticmethod
    def constant(grid: Grid, d: int, n: int, value) -> "FnSet":
        """The representation of a constant function (point set)."""
        eta = uniform_orders(n, grid.p)
        lay = Layout(d, eta)
        vec = np.zeros(lay.M)
        v = np.asarray(
            [value] * d if np.ndim(value) == 0 else value, dtype=np.float64
        )
        vec[lay.slice_of(lay.group_z())] = v
        for i in range(1, grid.p + 1):
            vec[lay.slice_of(lay.group_jet(i, 0))] = v
        box = IArray.from_point(vec)
        return FnSet(grid, d, eta, DoubletonSet.from_box(box, d), IArray.zeros((grid.p, d)))

    # -- accessors ------------------------------------------------------------

    @property
    def p(self) -> int:
        return self.grid.p

    @property
    def M(self) -> int:
        return self.layout.M

    def hull(self) -> IArray:
        if self._hull is None:
            self._hull = self.A.hull()
        return self._hull

    def z_hull(self) -> IArray:
        return self.hull()[self.layout.slice_of(self.layout.group_z())]

    def coeff_hull(self, i: int, k: int) -> IArray:
        return self.hull()[self.layout.slice_of(self.layout.group_jet(i, k))]

    def jet_hull(self, i: int) -> IArray:
        """Interval jet (eta_i+1, d) of interval i."""
        lay = self.layout
        lo = self.layout.group_jet(i, 0) * self.d
        hi = (self.layout.group_jet(i, self.eta[i - 1]) + 1) * self.d
        return self.hull()[lo:hi].reshape(self.eta[i - 1] + 1, self.d)

    def remainder(self, i: int) -> IArray:
        return self.R[i - 1]

    # -- evaluation -----------------------------------------------------------

    def eval_derivative(self, i: int, k: int, eps: Interval) -> IArray:
        """Enclosure of x^[k](t_i + eps) on interval i for eps in [0, h].

        k may run up to eta_i + 1 (where the value is the remainder box
        itself).  Horner evaluation over the interval eps.
        """
        n_i = self.eta[i - 1]
        if not 0 <= k <= n_i + 1:
            raise IndexError(f"derivative order {k} beyond eta_{i} + 1")
        h = self.grid.h
        if not (0.0 <= eps.lo and eps.hi <= h * (1 + 1e-12)):
            raise IntervalError("eps outside the grid interval")
        # Horner: ((rem*eps + c_m)*eps + c_{m-1})*eps + ... with m = n_i - k,
        # so the remainder ends up multiplied by eps^(n_i + 1 - k).
        acc = self.R[i - 1] * math.comb(n_i + 1, k)
        jet = self.jet_hull(i)
        for l in range(n_i - k, -1, -1):
            acc = acc * eps + jet[l + k] * math.comb(l + k, k)
        return acc

    def eval(self, t: Interval) -> IArray:
        """Enclosure of x(t) for interval t within one grid interval (or the
        point 0, which returns z)."""
        if t.lo == 0.0 and t.hi == 0.0:
            return self.z_hull()
        if t.lo < -self.grid.tau * (1 + 1e-12) or t.hi > 0.0:
            raise IntervalError("t outside [-tau, 0]")
        h = self.grid.h
        i = min(int(math.floor(-t.hi / h)) + 1, self.p)
        t_i = -i * h
        eps = Interval(max(t.lo - t_i, 0.0), t.hi - t_i)
        if eps.hi > h * (1 + 1e-12):
            raise IntervalError("t spans multiple grid intervals; split it")
        return self.eval_derivative(i, 0, eps)

    def delayed_jet_enclosure(self, i: int, order: int) -> IArray:
        """Interval jet [(c)_[k]]_{k=0..order} of the solution over the time
        span of one full step, at delay-interval i: coefficient k is the
        enclosure of x^[k] over [t_i, t_{i-1}]."""
        h = self.grid.h
        eps = Interval(0.0, h)
        rows = [self.eval_derivative(i, k, eps) for k in range(order + 1)]
        return IArray.stack(rows, axis=0)

    # -- misc -----------------------------------------------------------------

    def max_coeff_diam(self) -> float:
        return self.hull().max_diam()

    def max_remainder_diam(self) -> float:
        return self.R.max_diam()

    def signature(self):
        """(n, p, q) of the smallest uniform-ish space containing eta, for
        reporting: n = min order, q = count of leading intervals with n+1."""
        n = min(self.eta)
        q = 0
        for v in self.eta:
            if v >= n + 1:
                q += 1
            else:
                break
        return (n, self.p, q)

    def __repr__(self):
        n, p, q = self.signature()
        return f"FnSet(d={self.d}, C^{n}_{{{p},{q}}}, M={self.M})"


def used_variables(rhs, fnset: FnSet, max_order: int | None = None):
    """Index descriptor of the variables the right-hand side actually reads.

    Returns (u_groups, delay_steps): the list of variable-group indices
    [z, coefficients of j_{p_1}, ..., coefficients of j_{p_m}] (each delayed
    jet up to min(eta_{p_i}, max_order)), and the integer grid multiples p_i.
    """
    g = fnset.grid
    lay = fnset.layout
    steps = []
    for t_d in rhs.delays:
        pk = t_d / g.h
        pi = int(round(pk))
        if not 1 <= pi <= g.p or abs(pk - pi) > 1e-9 * max(1.0, abs(pk)):
            raise IntervalError(
                f"delay {t_d} is not a grid multiple of h={g.h} (p={g.p})"
            )
        steps.append(pi)
    groups = [lay.group_z()]
    for pi in steps:
        top = fnset.eta[pi - 1]
        if max_order is not None:
            top = min(top, max_order)
        groups.extend(lay.group_jet(pi, k) for k in range(top + 1))
    return groups, steps


# -- serialization ------------------------------------------------------------

from .intervals import (  # noqa: E402
    format_matrix,
    format_vector,
    parse_matrix,
    parse_vector,
)


def dump_fnset(x: FnSet, hex_form: bool = True) -> str:
    """Text form of a function set; hex endpoints by default so that reading
    back reproduces the set bit-for-bit."""
    lines = [
        "fnset v1",
        f"d {x.d}",
        f"p {x.grid.p}",
        f"tau {x.grid.tau.hex() if hex_form else repr(x.grid.tau)}",
        "eta " + " ".join(str(n) for n in x.eta),
        "x " + format_vector(IArray.from_point(x.A.x), hex_form),
        "C " + format_matrix(IArray.from_point(x.A.C), hex_form),
        "r0 " + format_vector(x.A.r0, hex_form),
        "r " + format_vector(x.A.r, hex_form),
    ]
    for g, B in enumerate(x.A.B):
        lines.append(f"B{g} " + format_matrix(IArray.from_point(B), hex_form))
    lines.append("R " + format_matrix(x.R.reshape(x.grid.p * x.d, 1), hex_form))
    return "\n".join(lines) + "\n"


def load_fnset(text: str) -> FnSet:
    fields = {}
    Bs = {}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines[0].strip() != "fnset v1":
        raise ValueError("not a fnset v1 file")
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        if key.startswith("B") and key != "B":
            Bs[int(key[1:])] = parse_matrix(rest)
        else:
            fields[key] = rest
    d = int(fields["d"])
    p = int(fields["p"])
    tau_s = fields["tau"].strip()
    tau = float.fromhex(tau_s) if "x" in tau_s else float(tau_s)
    eta = tuple(int(v) for v in fields["eta"].split())
    x = parse_vector(fields["x"]).mid()
    C = parse_matrix(fields["C"]).mid()
    r0 = parse_vector(fields["r0"])
    r = parse_vector(fields["r"])
    B = [Bs[g].mid() for g in range(len(Bs))]
    R = parse_matrix(fields["R"]).reshape(p, d)
    dset = DoubletonSet(x, C, r0, B, r, d)
    return FnSet(Grid(tau, p), d, eta, dset, R)
