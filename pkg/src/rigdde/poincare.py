"""Affine sections and rigorous Poincare-map images.

A section lives in the finite part of the base uniform space: S(x) =
s . a(x) - c, where a(x) collects the value now and the jet coefficients up
to the base order.  Trajectory enclosures usually live in larger spaces
(orders grow as the integration proceeds); evaluating the section there
reads the same coefficients and simply ignores the extra ones.

The return time is located by a sign bracket over full steps followed by a
two-sided bisection in the step offset.  Off-grid section values are
evaluated as interval-weighted linear functionals of the doubleton rows of
the two flanking enclosures -- the same weights the fractional step uses --
so the bisection sees almost no wrapping and can squeeze the bracket even
for sets with a sizeable initial box.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .integrator import (
    DdeProblem,
    IntegrationOptions,
    epsilon_step,
    epsilon_step_long,
    full_step,
)
from .intervals import IArray, Interval, IntervalError, imatvec
from .space import FnSet, Layout


class CrossingError(IntervalError):
    """No usable section crossing (absent, ambiguous, or too early)."""


@dataclass(frozen=True)
class Section:
    """S(x) = s . a(x) - c on the order-n finite part; a crossing counts when
    the value moves from strictly -orientation to strictly +orientation."""

    s: np.ndarray
    c: float
    orientation: int
    d: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "s", np.asarray(self.s, dtype=np.float64))
        if self.orientation not in (-1, 1):
            raise ValueError("orientation must be +1 or -1")

    def layout(self) -> Layout:
        p = (self.s.size // self.d - 1) // (self.n + 1)
        return Layout(self.d, [self.n] * p)

    def value_point(self, vec: np.ndarray) -> float:
        """Nonrigorous value on a flat base-layout vector."""
        return float(self.s @ vec) - self.c

    def _scatter(self, lay_big: Layout) -> np.ndarray:
        """Lift s to the layout of a (possibly order-expanded) set."""
        lay0 = self.layout()
        w = np.zeros(lay_big.M)
        w[0 : self.d] = self.s[0 : self.d]
        p = len(lay_big.eta)
        for i in range(1, p + 1):
            for k in range(self.n + 1):
                src = lay0.slice_of(lay0.group_jet(i, k))
                dst = lay_big.slice_of(lay_big.group_jet(i, k))
                w[dst] = self.s[src]
        return w


def _dot_doubleton(w: IArray, A) -> tuple:
    """s . (x + C r0 + sum B_g r_g) split as (value without the r0 term,
    row of weights against r0).  Keeping the r0 row unsummed lets callers
    combine several sets sharing r0 before the final product."""
    wrow = IArray.stack([w], axis=0)
    val = (w * IArray.from_point(A.x)).sum()
    d = A.d
    for g in range(A.M // d):
        seg = w[g * d : (g + 1) * d]
        br = imatvec(A.B[g], A.r[g * d : (g + 1) * d])
        val = val + (seg * br).sum()
    from .intervals import imatmul

    r0_row = imatmul(wrow, IArray.from_point(A.C))
    return val, r0_row


def section_sign(sec: Section, x: FnSet) -> Interval:
    """Tight interval of S over the set, using the doubleton structure."""
    w = IArray.from_point(sec._scatter(x.layout))
    val, r0_row = _dot_doubleton(w, x.A)
    val = val + imatvec(r0_row, x.A.r0).scalar()
    return val - sec.c


def section_value_at_eps(
    sec: Section, x_m: FnSet, x_m1: FnSet, eps: Interval
) -> Interval:
    """Tight interval of S over the (virtual) fractional-step image at
    offsets eps, without assembling the image set.

    The fractional step makes every finite output row an interval-weighted
    combination of finite rows of x_m (jets) and x_m1 (value now); composing
    with s gives one weight row per input set plus a remainder constant.
    Both sets share r0, so their r0 contributions are combined first.
    """
    d, p, h = x_m.d, x_m.grid.p, x_m.grid.h
    lay_m, lay_m1 = x_m.layout, x_m1.layout
    n = sec.n
    lay0 = sec.layout()

    wm = IArray.zeros((lay_m.M,))
    const = Interval(0.0)
    for i in range(1, p + 1):
        n_i = x_m.eta[i - 1]
        for k in range(n + 1):
            s_ik = sec.s[lay0.slice_of(lay0.group_jet(i, k))]
            if not s_ik.any():
                continue
            wgt = Interval(1.0)
            for l in range(0, n_i - k + 1):
                sl = lay_m.slice_of(lay_m.group_jet(i, l + k))
                wm[sl] = wm[sl] + IArray.from_point(s_ik) * (
                    wgt * math.comb(l + k, k)
                )
                wgt = wgt * eps
            rem = x_m.R[i - 1] * (math.comb(n_i + 1, k) * wgt)
            const = const + (IArray.from_point(s_ik) * rem).sum()
    w1 = IArray.zeros((lay_m1.M,))
    s_z = sec.s[0:d]
    if s_z.any():
        n_1 = x_m1.eta[0]
        wgt = Interval(1.0)
        for l in range(0, n_1 + 1):
            sl = lay_m1.slice_of(lay_m1.group_jet(1, l))
            w1[sl] = w1[sl] + IArray.from_point(s_z) * wgt
            wgt = wgt * eps
        const = const + (IArray.from_point(s_z) * (x_m1.R[0] * wgt)).sum()

    val_m, row_m = _dot_doubleton(wm, x_m.A)
    val_1, row_1 = _dot_doubleton(w1, x_m1.A)
    row = row_m + row_1
    val = val_m + val_1 + imatvec(row, x_m.A.r0).scalar() + const
    return val - sec.c


@dataclass
class Bracket:
    """All member crossing times lie in [(m + mbar)*h interval]:
    t in [m*h + eps1, (m + mbar)*h + eps2]."""

    m: int
    mbar: int
    eps1: float
    eps2: float

    def time(self, h: float) -> Interval:
        lo = Interval(self.m) * h + Interval(self.eps1)
        hi = Interval(self.m + self.mbar) * h + Interval(self.eps2)
        return Interval(lo.lo, hi.hi)


def _strict_sign(v: Interval) -> int:
    if v.hi < 0.0:
        return -1
    if v.lo > 0.0:
        return 1
    return 0


def refine_bracket(
    sec: Section,
    sets: dict,
    m: int,
    mbar: int,
    tol: float,
    max_bisections: int = 60,
) -> Bracket:
    """Two one-sided bisections tightening the offset bracket.

    ``sets[m] .. sets[m + mbar + 1]`` must be available.  An ambiguous
    midpoint (sign interval containing zero) stops that side: the wider
    bracket is kept rather than guessed away.
    """
    h = sets[m].grid.h
    before = -sec.orientation

    # lower end: largest offset in step m that is still strictly 'before'
    e1_lo, e1_hi = 0.0, h
    for _ in range(max_bisections):
        if e1_hi - e1_lo <= tol:
            break
        mid = 0.5 * (e1_lo + e1_hi)
        sgn = _strict_sign(
            section_value_at_eps(sec, sets[m], sets[m + 1], Interval(mid))
        )
        if sgn == before:
            e1_lo = mid
        elif sgn == -before:
            e1_hi = mid
        else:
            break
    eps1 = e1_lo

    # upper end: smallest offset in step m+mbar that is strictly 'after'
    e2_lo, e2_hi = 0.0, h
    for _ in range(max_bisections):
        if e2_hi - e2_lo <= tol:
            break
        mid = 0.5 * (e2_lo + e2_hi)
        sgn = _strict_sign(
            section_value_at_eps(
                sec, sets[m + mbar], sets[m + mbar + 1], Interval(mid)
            )
        )
        if sgn == -before:
            e2_hi = mid
        elif sgn == before:
            e2_lo = mid
        else:
            break
    eps2 = e2_hi
    if mbar == 0 and eps2 < eps1:
        eps2 = eps1
    return Bracket(m, mbar, eps1, eps2)


@dataclass
class PoincareOptions:
    min_return: float | None = None  # default (n+1)*tau
    n_sub: int = 1
    subdiv_index: int = 1
    returns: int = 1
    window: int = 48
    tol: float | None = None  # default h * 2**-20
    n_out: int | None = None  # default: the section's order
    max_steps: int | None = None
    workers: int = 1
    integration: IntegrationOptions = field(default_factory=IntegrationOptions)


@dataclass
class PoincareResult:
    image: FnSet
    return_time: Interval
    pieces: list
    brackets: list
    steps: int


def _first_crossing(problem, sec, x0, opts, skip: int):
    """Integrate until `returns` oriented sign changes, return (sets, bracket).

    ``skip`` oriented crossings are passed over first (for P^k images).
    """
    h = problem.grid.h
    window = max(opts.window, 4)
    sets = {0: x0}
    signs = {0: _strict_sign(section_sign(sec, x0))}
    before = -sec.orientation
    max_steps = opts.max_steps or 100000
    last_before = None
    seen = 0
    m_cur = 0
    x = x0
    while m_cur < max_steps:
        x = full_step(problem, x, opts.integration)
        m_cur += 1
        sets[m_cur] = x
        signs[m_cur] = _strict_sign(section_sign(sec, x))
        old = m_cur - window - 2
        if old in sets:
            del sets[old]
        if signs[m_cur] == before:
            last_before = m_cur
        elif signs[m_cur] == -before and last_before is not None:
            if seen < skip:
                seen += 1
                last_before = None
                continue
            m = last_before
            if m not in sets:
                raise CrossingError(
                    "crossing bracket exceeds the kept window; "
                    "increase PoincareOptions.window"
                )
            mbar = m_cur - m - 1
            return sets, m, mbar
    raise CrossingError("no section crossing within the step horizon")


def poincare_image(
    problem: DdeProblem, x0: FnSet, sec: Section, opts: PoincareOptions | None = None
) -> PoincareResult:
    """Rigorous image of x0 under the (possibly iterated) return map to sec.

    With n_sub > 1 the initial box coordinate ``subdiv_index`` of r0 is
    split evenly; pieces are mapped independently and the results hulled in
    index order (deterministic regardless of worker count).
    """
    opts = opts or PoincareOptions()
    h = problem.grid.h
    tau = problem.grid.tau
    n_out = opts.n_out if opts.n_out is not None else sec.n
    min_return = (
        opts.min_return if opts.min_return is not None else (n_out + 1) * tau
    )
    tol = opts.tol if opts.tol is not None else h * 2.0**-20

    def map_piece(piece: FnSet):
        sets, m, mbar = _first_crossing(problem, sec, piece, opts, opts.returns - 1)
        br = refine_bracket(sec, sets, m, mbar, tol)
        t = br.time(h)
        if not t.lo > min_return:
            raise CrossingError(
                f"return time {t} not above the required minimum {min_return}"
            )
        if mbar == 0:
            img = epsilon_step(
                sets[m], sets[m + 1], Interval(br.eps1, br.eps2), n_out
            )
        else:
            chain = [sets[m + j] for j in range(mbar + 2)]
            img = epsilon_step_long(chain, br.eps1, br.eps2, n_out)
        return img, t, br, m + mbar + 1

    pieces = _split_piece(x0, opts.subdiv_index, opts.n_sub)
    if opts.workers > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=opts.workers) as ex:
            results = list(ex.map(map_piece, pieces))
    else:
        results = [map_piece(p) for p in pieces]

    images = [r[0] for r in results]
    t_all = results[0][1]
    for r in results[1:]:
        t_all = t_all.hull(r[1])
    hull_img = _hull_fnsets(images)
    return PoincareResult(
        image=hull_img,
        return_time=t_all,
        pieces=images,
        brackets=[r[2] for r in results],
        steps=max(r[3] for r in results),
    )


def _split_piece(x0: FnSet, index: int, n_sub: int):
    """Split coordinate ``index`` of r0 into n_sub even pieces.

    Each piece is re-centered (the propagator's mean-value form needs the
    stored center to be a member, i.e. 0 in r0): the center shift C*m is a
    rounded matrix-vector product, so its enclosure slack is pushed into the
    local-error part r.  That absorption is exact only against identity
    error frames, which freshly built sets have.
    """
    if n_sub <= 1:
        return [x0]
    from .lohner import DoubletonSet

    if any(not np.array_equal(B, np.eye(x0.d)) for B in x0.A.B):
        raise IntervalError(
            "subdivision requires a fresh set (identity error frames)"
        )
    out = []
    r0 = x0.A.r0
    lo, hi = float(r0.lo[index]), float(r0.hi[index])
    cuts = np.linspace(lo, hi, n_sub + 1)
    for j in range(n_sub):
        r0j = IArray(r0.lo.copy(), r0.hi.copy())
        r0j.lo[index] = cuts[j]
        r0j.hi[index] = cuts[j + 1]
        m = r0j.mid()
        shift = imatvec(IArray.from_point(x0.A.C), IArray.from_point(m))
        x_j = x0.A.x + shift.mid()
        slack = shift - shift.mid()
        r0j = r0j - IArray.from_point(m)
        # re-symmetrize the split coordinate exactly around zero
        w = max(abs(r0j.lo[index]), abs(r0j.hi[index]))
        r0j.lo[index] = -w
        r0j.hi[index] = w
        Aj = DoubletonSet(
            x_j, x0.A.C.copy(), r0j, list(x0.A.B), x0.A.r + slack, x0.A.d
        )
        out.append(FnSet(x0.grid, x0.d, x0.eta, Aj, x0.R))
    return out


def _hull_fnsets(images):
    if len(images) == 1:
        return images[0]
    box = images[0].hull()
    R = images[0].R
    for im in images[1:]:
        if im.eta != images[0].eta:
            raise IntervalError("piece images in different spaces")
        box = box.hull_with(im.hull())
        R = R.hull_with(im.R)
    return FnSet.from_box(
        images[0].grid, images[0].d, images[0].eta, box, R
    )
