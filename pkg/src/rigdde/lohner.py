"""Wrapping-effect-controlled propagation of doubleton sets.

The finite part of a function set is stored as

    A = x + C * r0 + B * r

with a point center ``x``, a point matrix ``C`` against the *initial*
deviation box ``r0`` (shared, unchanged along a whole trajectory), a
block-diagonal point matrix ``B`` of d x d blocks (one per variable group:
the d solution components of one jet coefficient, or of z), and an interval
error box ``r``.

One integrator step maps most variable groups by pure index shifts and
computes a handful of new groups (the value now and the newest jet) from the
small set ``u`` of actually-used variables; :func:`propagate` exploits both:
shift rows are reassigned bitwise, new rows are computed with the u-reduced
multiplication, and the local error of each new group is rotated by the QR
trick before it is folded into ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .intervals import (
    IArray,
    Interval,
    IntervalError,
    imatmul,
    imatvec,
    verified_inverse,
)


class DoubletonSet:
    """The set {x + C·rho0 + B·rho : rho0 in r0, rho in r} in R^M.

    ``d`` is the block size; M must be a multiple of d and B is stored as a
    list of M/d point blocks of shape (d, d).
    """

    __slots__ = ("x", "C", "r0", "B", "r", "d")

    def __init__(self, x, C, r0: IArray, B, r: IArray, d: int):
        self.x = np.asarray(x, dtype=np.float64)
        self.C = np.asarray(C, dtype=np.float64)
        self.r0 = r0
        self.B = list(B)
        self.r = r
        self.d = d
        M = self.x.shape[0]
        if M % d or len(self.B) != M // d or self.C.shape[0] != M or self.r.shape != (M,):
            raise ValueError("inconsistent doubleton shapes")
        if self.C.shape[1] != self.r0.shape[0]:
            raise ValueError("C/r0 shape mismatch")

    @property
    def M(self) -> int:
        return self.x.shape[0]

    @property
    def N(self) -> int:
        return self.C.shape[1]

    @property
    def n_groups(self) -> int:
        return self.M // self.d

    @staticmethod
    def from_box(box: IArray, d: int) -> "DoubletonSet":
        """Initial doubleton for a box: x = mid, C = Id (N = M), r0 the
        centered box, B = Id, r = 0."""
        M = box.shape[0]
        x = box.mid()
        r0 = box - IArray.from_point(x)
        return DoubletonSet(
            x,
            np.eye(M),
            r0,
            [np.eye(d) for _ in range(M // d)],
            IArray.zeros(M),
            d,
        )

    def hull(self) -> IArray:
        """Interval hull x + C·r0 + B·r."""
        out = IArray.from_point(self.x) + imatvec(self.C, self.r0)
        br = np.empty((self.M,)), np.empty((self.M,))
        d = self.d
        lo, hi = br
        for g in range(self.n_groups):
            sl = slice(g * d, (g + 1) * d)
            v = imatvec(self.B[g], self.r[sl])
            lo[sl] = v.lo
            hi[sl] = v.hi
        return out + IArray(lo, hi, _unsafe=True)

    def group_hull(self, g: int) -> IArray:
        d = self.d
        sl = slice(g * d, (g + 1) * d)
        out = IArray.from_point(self.x[sl]) + imatvec(self.C[sl, :], self.r0)
        return out + imatvec(self.B[g], self.r[sl])

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """A random point member (nonrigorous; used by soundness tests)."""
        rho0 = self.r0.lo + (self.r0.hi - self.r0.lo) * rng.random(self.N)
        rho = self.r.lo + (self.r.hi - self.r.lo) * rng.random(self.M)
        out = self.x + self.C @ rho0
        d = self.d
        for g in range(self.n_groups):
            sl = slice(g * d, (g + 1) * d)
            out[sl] += self.B[g] @ rho[sl]
        return out

    def contains_point(self, pt) -> bool:
        """Rigorous membership is not decidable from the outside; this checks
        the sufficient condition used in tests: pt - x - C·mid-free solve.
        Here we simply check pt against the interval hull."""
        return self.hull().contains(IArray.from_point(pt))


def interval_hull(dset: DoubletonSet) -> IArray:
    return dset.hull()


def u_reduce_multiply(rows: IArray, C, u_indices) -> IArray:
    """Multiply interval rows (K x dim_u), whose columns correspond to the
    used variables ``u_indices``, with the point matrix C (M x N) restricted
    to those rows: equals the dense product of the zero-padded rows."""
    C = np.asarray(C, dtype=np.float64)
    return imatmul(rows, IArray.from_point(C[np.asarray(u_indices, dtype=int), :]))


def qr_block_choice(candidates, policy: str = "z"):
    """Pick the variable group whose d x d product D_I·B_I is QR-factored.

    ``candidates`` is a list of (group_label, product_matrix); the default
    policy picks the first candidate (the z block by convention).
    """
    if policy == "z":
        return candidates[0][0]
    if policy == "identity":
        return None
    if policy == "largest-norm":
        return max(candidates, key=lambda c: float(np.linalg.norm(c[1])))[0]
    raise ValueError(f"unknown qr policy {policy!r}")


@dataclass
class StepJacobian:
    """Jacobian data of one step, restricted to the used variables.

    ``u_groups`` lists the input variable-group indices the new rows depend
    on (columns of D come in blocks of d in this order; by convention the z
    group comes first).  ``D`` has d rows per new output group, ``center`` is
    a rigorous enclosure of the new rows evaluated at the set's center point
    (including any additive step remainder), and ``shift_src`` lists, for
    every remaining output group in output order, the input group it copies.
    """

    D: IArray
    center: IArray
    u_groups: list
    shift_src: list
    d: int


@dataclass
class StepReport:
    qr_groups: list = field(default_factory=list)
    qr_fallbacks: int = 0


def propagate(
    dset: DoubletonSet,
    jac: StepJacobian,
    qr_policy: str = "z",
    report: StepReport | None = None,
) -> DoubletonSet:
    """One Lohner step: new groups via mean-value form with per-group QR
    error rotation, shift groups by bitwise reassignment.

    The output set contains the image of every member of the input set under
    any map whose Jacobian (on the input hull, over the used variables) is
    contained in jac.D and whose value at the center is contained in
    jac.center.
    """
    d = dset.d
    if d != jac.d:
        raise ValueError("block size mismatch")
    K = jac.D.shape[0]
    if K % d:
        raise ValueError("jacobian rows not a multiple of d")
    n_new = K // d
    dim_u = d * len(jac.u_groups)
    if jac.D.shape[1] != dim_u:
        raise ValueError("jacobian columns do not match u_groups")

    u_rows = np.concatenate(
        [np.arange(g * d, (g + 1) * d) for g in jac.u_groups]
    )

    # mean-value form of the new rows against the shared r0
    S = u_reduce_multiply(jac.D, dset.C, u_rows)  # K x N interval
    C_new = S.mid()
    x_new = jac.center.mid()
    S_dev = S - IArray.from_point(C_new)
    dev_center = jac.center - IArray.from_point(x_new)

    ident = IArray.from_point(np.eye(d))
    new_B: list[np.ndarray] = []
    new_r_parts: list[IArray] = []
    for g in range(n_new):
        rows = slice(g * d, (g + 1) * d)
        Dg = jac.D[rows]
        prods = []
        for jpos, J in enumerate(jac.u_groups):
            cols = slice(jpos * d, (jpos + 1) * d)
            prods.append((J, Dg[:, cols].mid() @ dset.B[J]))
        chosen = qr_block_choice(prods, qr_policy)
        Q = None
        Qinv = ident
        if chosen is not None:
            prod = dict(prods)[chosen]
            try:
                Qf, _ = np.linalg.qr(prod)
                Qinv = verified_inverse(Qf)
                Q = Qf
            except (np.linalg.LinAlgError, IntervalError):
                Q = None
                Qinv = ident
                if report is not None:
                    report.qr_fallbacks += 1

        # r_g = sum_J (Qinv·D_{g,J}·B_J)·r_J + (Qinv·(S - m(S))_g)·r0
        #       + Qinv·(center - m(center))_g,
        # with the matrix products formed before touching any box: that is
        # what keeps the error boxes from being wrapped at every step.
        acc = imatvec(imatmul(Qinv, S_dev[rows]), dset.r0)
        acc = acc + imatvec(Qinv, dev_center[rows])
        for jpos, J in enumerate(jac.u_groups):
            cols = slice(jpos * d, (jpos + 1) * d)
            MgJ = imatmul(imatmul(Qinv, Dg[:, cols]), IArray.from_point(dset.B[J]))
            acc = acc + imatvec(MgJ, dset.r[J * d : (J + 1) * d])
        new_B.append(np.eye(d) if Q is None else Q)
        new_r_parts.append(acc)
        if report is not None:
            report.qr_groups.append(chosen)

    # assemble output: new groups first, then shift groups in given order
    n_out = n_new + len(jac.shift_src)
    M_out = n_out * d
    x_out = np.empty(M_out)
    C_out = np.empty((M_out, dset.N))
    r_lo = np.empty(M_out)
    r_hi = np.empty(M_out)
    B_out: list[np.ndarray] = []

    x_out[:K] = x_new
    C_out[:K, :] = C_new
    for g in range(n_new):
        sl = slice(g * d, (g + 1) * d)
        B_out.append(new_B[g])
        r_lo[sl] = new_r_parts[g].lo
        r_hi[sl] = new_r_parts[g].hi
    for pos, src in enumerate(jac.shift_src):
        dst = slice(K + pos * d, K + (pos + 1) * d)
        ssl = slice(src * d, (src + 1) * d)
        x_out[dst] = dset.x[ssl]
        C_out[dst, :] = dset.C[ssl, :]
        r_lo[dst] = dset.r.lo[ssl]
        r_hi[dst] = dset.r.hi[ssl]
        B_out.append(dset.B[src])

    return DoubletonSet(
        x_out, C_out, dset.r0, B_out, IArray(r_lo, r_hi, _unsafe=True), d
    )
