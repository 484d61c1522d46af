"""Nonrigorous candidate machinery feeding the rigorous proofs.

Everything here runs the floating-point mirror of the integrator: locating
section crossings of point trajectories, Newton refinement of periodic
candidates of the return map, finite-difference Jacobians (all columns as
one batched integration), eigenstructure-based coordinate frames, and the
iterative growth of trapping-region candidates (the one step that calls
back into the rigorous Poincare map).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covering import HSetWithTail, localize_pieces
from .expr import Rhs
from .integrator import DdeProblem
from .intervals import IArray, IntervalError
from .nonrig import (
    NonrigTrajectory,
    PointState,
    nonrig_eps_shift,
    project_vector,
)
from .poincare import PoincareOptions, Section, poincare_image


class FinderError(IntervalError):
    """Nonrigorous search failed (no crossing, divergence, bad spectrum)."""


# -- nonrigorous return map ---------------------------------------------------


def _section_terms(sec):
    """Sparse view of the section vector: (z weights, [(i, k, weights)])."""
    lay = sec.layout()
    d = sec.d
    terms = []
    for i in range(1, len(lay.eta) + 1):
        for k in range(sec.n + 1):
            w = sec.s[lay.slice_of(lay.group_jet(i, k))]
            if w.any():
                terms.append((i, k, w))
    return sec.s[0:d], terms


def _crossing_offset(sec, x_m, x_m1, n, bisections: int = 80) -> float:
    """Bisect the section-crossing offset; only the coordinates the section
    reads are evaluated, so this is cheap even for large representations."""
    s_z, terms = _section_terms(sec)
    before = -sec.orientation

    def value(eps):
        v = -sec.c
        if s_z.any():
            v += float(s_z @ x_m1.derivative_at(1, 0, eps))
        for i, k, w in terms:
            v += float(w @ x_m.derivative_at(i, k, eps))
        return v

    lo, hi = 0.0, x_m.grid.h
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        v = value(mid)
        if (v < 0 and before < 0) or (v > 0 and before > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def return_map(
    rhs: Rhs,
    st: PointState,
    sec: Section,
    cap: int,
    returns: int = 1,
    max_steps: int = 100000,
    window: int = 64,
):
    """Nonrigorous return map P^returns for a point (or batched) state.

    Returns (states at the section, crossing times); batched inputs give
    one crossing per member, each bisected on its own member view.
    """
    n = sec.n
    batch = st.batch_shape
    nb = int(np.prod(batch)) if batch else 1
    tr = NonrigTrajectory(rhs, st, cap, window=window)
    before = -sec.orientation
    prev = np.atleast_1d(sec.s @ project_vector(st, n) - sec.c)
    seen = np.zeros(nb, dtype=np.intp)
    crossings = np.full(nb, -1, dtype=np.intp)

    m = 0
    while m < max_steps:
        cur = tr.advance()
        m += 1
        val = np.atleast_1d(sec.s @ project_vector(cur, n) - sec.c)
        crossed = (prev * before > 0.0) & (val * before < 0.0)
        seen += crossed
        newly = crossed & (seen == returns) & (crossings < 0)
        crossings[newly] = m
        prev = val
        if np.all(crossings >= 0):
            break
    else:
        raise FinderError("no section crossing within the step horizon")
    if m - crossings.min() > window:
        raise FinderError("member crossings spread beyond the kept window")

    states, times = [], []
    for b in range(nb):
        mb = int(crossings[b])
        xm = tr[mb - 1] if not batch else tr[mb - 1].member(b)
        xm1 = tr[mb] if not batch else tr[mb].member(b)
        eps = _crossing_offset(sec, xm, xm1, n)
        states.append(nonrig_eps_shift(xm, xm1, eps, n))
        times.append((mb - 1) * st.grid.h + eps)
    if not batch:
        return states[0], times[0]
    return states, np.asarray(times)


def _state_from_vector(grid, d, n, vec) -> PointState:
    return PointState.from_vector(grid, d, tuple([n] * grid.p), vec)


# -- finite-difference Jacobian ----------------------------------------------


@dataclass
class ApproxJacobian:
    DP: np.ndarray
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray  # rows: left eigenvectors (left[i] @ DP = left_values[i] * left[i])
    left_values: np.ndarray
    base_image: np.ndarray
    return_time: float


def approx_jacobian(
    rhs: Rhs,
    grid,
    sec: Section,
    x0: np.ndarray,
    cap: int,
    returns: int = 1,
    fd_rel: float = 1e-7,
    fixed_time: bool = False,
) -> ApproxJacobian:
    """One-sided finite-difference derivative of the return map at x0.

    All M+1 trajectories (base plus one per perturbed coordinate) run as a
    single batched integration.

    With ``fixed_time`` the crossing is solved only for the base point and
    every column uses that same flight time.  At a periodic point this is
    the derivative of the period map, whose spectrum keeps the unit
    eigenvalue along the flow direction that the crossing-solved map
    projects away -- the coordinate-frame recipe needs that eigenvalue.
    """
    d = sec.d
    n = sec.n
    M = x0.size
    steps = fd_rel * np.maximum(1.0, np.abs(x0))
    batch = np.repeat(x0[:, None], M + 1, axis=1)
    batch[:, 1:] += np.diag(steps)
    st = _state_from_vector(grid, d, n, batch)
    if fixed_time:
        base, t_base = return_map(
            rhs, _state_from_vector(grid, d, n, x0), sec, cap, returns
        )
        mb = int(np.floor(t_base / grid.h)) + 1
        eps = t_base - (mb - 1) * grid.h
        eps = min(max(eps, 1e-3 * grid.h), (1 - 1e-3) * grid.h)
        tr = NonrigTrajectory(rhs, st, cap, window=2)
        tr.advance(mb)
        shifted = nonrig_eps_shift(tr[mb - 1], tr[mb], eps, n)
        imgs = project_vector(shifted, n)
        times = np.full(M + 1, t_base)
    else:
        states, times = return_map(rhs, st, sec, cap, returns, window=64)
        imgs = np.stack([project_vector(s, n) for s in states], axis=1)
    DP = (imgs[:, 1:] - imgs[:, :1]) / steps[None, :]
    lam, V = np.linalg.eig(DP)
    lamL, U = np.linalg.eig(DP.T)
    order = np.argsort(-np.abs(lam))
    lam, V = lam[order], V[:, order]
    orderL = np.argsort(-np.abs(lamL))
    lamL, U = lamL[orderL], U[:, orderL]
    return ApproxJacobian(DP, lam, V, U.T, lamL, imgs[:, 0], float(times[0]))


# -- Newton refinement --------------------------------------------------------


@dataclass
class RefineResult:
    x: np.ndarray
    residual: float
    iterations: int
    residual_history: list


def refine_candidate(
    rhs: Rhs,
    grid,
    sec: Section,
    x0: np.ndarray,
    cap: int,
    returns: int = 1,
    tol: float = 1e-12,
    max_iters: int = 50,
) -> RefineResult:
    """Newton iteration on P(x) - x = 0 restricted to the section.

    The linear step solves the bordered system ((DP - I, s), (s^T, 0)) so
    corrections stay tangent to the section.  Steps are damped: when the
    full step does not reduce the scaled residual it is halved (up to 8
    times, also covering steps whose trajectory leaves the map's domain).
    Divergence (three consecutive failures to improve) aborts.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    M = x.size
    scale = 1.0 + np.abs(x)

    def residual_of(y):
        J = approx_jacobian(rhs, grid, sec, y, cap, returns)
        rv = J.base_image - y
        return J, rv, float(np.max(np.abs(rv / scale)))

    history = []
    grows = 0
    best = None
    J, res_vec, res = residual_of(x)
    for it in range(max_iters):
        history.append(res)
        if best is None or res < best[0]:
            best = (res, x.copy(), it)
            grows = 0
        else:
            grows += 1
            if grows >= 3:
                raise FinderError(f"Newton diverging: residuals {history[-4:]}")
        if res < tol:
            return RefineResult(x, res, it + 1, history)
        A = np.zeros((M + 1, M + 1))
        A[:M, :M] = J.DP - np.eye(M)
        A[:M, M] = sec.s
        A[M, :M] = sec.s
        b = np.zeros(M + 1)
        b[:M] = -res_vec
        b[M] = sec.c - sec.s @ x
        step = np.linalg.solve(A, b)[:M]
        lam = 1.0
        accepted = False
        for _ in range(9):
            try:
                J_new, rv_new, res_new = residual_of(x + lam * step)
            except (FinderError, FloatingPointError, ValueError):
                res_new = np.inf
            if np.isfinite(res_new) and res_new < res:
                x = x + lam * step
                J, res_vec, res = J_new, rv_new, res_new
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            history.append(res)
            grows += 1
            if grows >= 3:
                raise FinderError(
                    f"Newton stalled: no damping step improves {res}"
                )
    return RefineResult(best[1], best[0], max_iters, history)


def _flow_at_time(rhs, grid, d, n, vec, T, cap):
    """Nonrigorous time-T flow of a (possibly batched) coefficient vector,
    returned as a coefficient vector (same layout)."""
    h = grid.h
    mb = int(np.floor(T / h)) + 1
    eps = T - (mb - 1) * h
    eps = min(max(eps, 1e-9 * h), (1 - 1e-9) * h)
    st = _state_from_vector(grid, d, n, vec)
    tr = NonrigTrajectory(rhs, st, cap, window=2)
    tr.advance(mb)
    return project_vector(nonrig_eps_shift(tr[mb - 1], tr[mb], eps, n), n), (
        tr[mb - 1],
        tr[mb],
        eps,
    )


def refine_periodic_fixed_time(
    rhs: Rhs,
    grid,
    sec: Section,
    x0: np.ndarray,
    T0: float,
    cap: int,
    tol: float = 1e-12,
    max_iters: int = 40,
    fd_rel: float = 1e-7,
) -> "PeriodicOrbit":
    """Newton on the boundary-value form of a periodic orbit: unknowns are
    the coefficient vector x and the period T, equations are
    flow_T(x) - x = 0 plus the phase condition s.x = c.

    More robust than the return-map Newton when the section-crossing
    structure of nearby trajectories is changing (extra crossings appearing
    or disappearing), since no crossing detection is involved.
    """
    d, n = sec.d, sec.n
    x = np.asarray(x0, dtype=np.float64).copy()
    T = float(T0)
    M = x.size
    scale = 1.0 + np.abs(x)

    def residual_of(y, Ty):
        if not grid.h < Ty:
            raise ValueError("period candidate shorter than one grid step")
        steps = fd_rel * np.maximum(1.0, np.abs(y))
        batch = np.repeat(y[:, None], M + 1, axis=1)
        batch[:, 1:] += np.diag(steps)
        imgs, (xm, xm1, eps) = _flow_at_time(rhs, grid, d, n, batch, Ty, cap)
        h = grid.h
        dt = 1e-7 * h
        eps2 = eps + dt if eps + dt < h else eps - dt
        sgn = 1.0 if eps + dt < h else -1.0
        img_dt = project_vector(
            nonrig_eps_shift(xm.member(0), xm1.member(0), eps2, n), n
        )
        fT = sgn * (img_dt - imgs[:, 0]) / dt
        DP = (imgs[:, 1:] - imgs[:, :1]) / steps[None, :]
        rv = imgs[:, 0] - y
        return DP, fT, rv, float(
            max(np.max(np.abs(rv / scale)), abs(sec.s @ y - sec.c))
        )

    DP, fT, rv, res = residual_of(x, T)
    best = (res, x.copy(), T)
    grows = 0
    for it in range(max_iters):
        if res < tol:
            return PeriodicOrbit(x, T, res, it, DP)
        A = np.zeros((M + 1, M + 1))
        A[:M, :M] = DP - np.eye(M)
        A[:M, M] = fT
        A[M, :M] = sec.s
        b = np.zeros(M + 1)
        b[:M] = -rv
        b[M] = sec.c - sec.s @ x
        sol = np.linalg.solve(A, b)
        lam = 1.0
        accepted = False
        for _ in range(9):
            try:
                out = residual_of(x + lam * sol[:M], T + lam * sol[M])
            except (FloatingPointError, ValueError, KeyError):
                out = None
            if out is not None and np.isfinite(out[3]) and out[3] < res:
                x = x + lam * sol[:M]
                T = T + lam * sol[M]
                DP, fT, rv, res = out
                accepted = True
                if res < best[0]:
                    best = (res, x.copy(), T)
                    grows = 0
                break
            lam *= 0.5
        if not accepted:
            grows += 1
            if grows >= 2:
                raise FinderError(
                    f"fixed-time Newton stalled at residual {res}"
                )
    if best[0] < tol:
        return PeriodicOrbit(best[1], best[2], best[0], max_iters, DP)
    raise FinderError(f"fixed-time Newton did not converge: {best[0]}")


@dataclass
class PeriodicOrbit:
    x: np.ndarray
    period: float
    residual: float
    iterations: int
    DP: np.ndarray  # period-map derivative at the solution


# -- coordinate frames --------------------------------------------------------


def build_coordinates(J: ApproxJacobian, unit_tol: float = 0.2):
    """Frame C = (c | u | s_3 ... s_M).

    c: left eigenvector of the eigenvalue nearest 1 (the flow direction's
    unit multiplier -- this column is transverse to the section and carries
    coefficient 0 on its support); u: right eigenvector of the dominant
    eigenvalue with |lambda| > 1; s_j: an orthonormal basis of the
    complement orthogonal to both.  Returns (C, diagnostics).
    """
    lam = J.eigenvalues
    i_unit = int(np.argmin(np.abs(lam - 1.0)))
    if abs(lam[i_unit] - 1.0) > unit_tol:
        raise FinderError(
            f"no eigenvalue near 1 (closest {lam[i_unit]})"
        )
    cand = [
        i
        for i in range(lam.size)
        if i != i_unit and abs(lam[i]) > 1.0
    ]
    if not cand:
        raise FinderError(f"no unstable eigenvalue: leading {lam[:4]}")
    i_un = cand[int(np.argmax(np.abs(lam[cand])))]
    if abs(lam[i_un].imag) > 1e-6 * abs(lam[i_un]):
        raise FinderError(f"unstable eigenvalue not real: {lam[i_un]}")

    lamL_idx = int(np.argmin(np.abs(J.left_values - lam[i_unit])))
    c = np.real(J.left[lamL_idx])
    c = c / np.linalg.norm(c)
    u = np.real(J.right[:, i_un])
    u = u / np.linalg.norm(u)
    M = c.size
    basis = np.linalg.qr(
        np.concatenate([c[:, None], u[:, None], np.eye(M)], axis=1)
    )[0]
    s_cols = basis[:, 2:M]
    C = np.concatenate([c[:, None], u[:, None], s_cols], axis=1)
    diags = {
        "lambda_unit": lam[i_unit],
        "lambda_unstable": lam[i_un],
        "leading": lam[: min(6, lam.size)],
    }
    return C, diags


def mean_unstable_vector(samples, v_ref=None, comp: int = 1) -> np.ndarray:
    """Mean direction spanned by section samples, normalized to 1 in
    component ``comp``; samples with a vanishing component are skipped."""
    samples = [np.asarray(s, dtype=np.float64) for s in samples]
    if len(samples) < 2:
        raise FinderError("need at least two samples")
    if v_ref is None:
        centroid = np.mean(samples, axis=0)
        v_ref = min(samples, key=lambda s: np.linalg.norm(s - centroid))
    dirs = []
    for s in samples:
        dv = s - v_ref
        if dv[comp] == 0.0:
            continue
        dirs.append(dv / dv[comp])
    if not dirs:
        raise FinderError("all samples were skipped (zero component)")
    u = np.mean(dirs, axis=0)
    return u / u[comp]


# -- trapping-region growth ---------------------------------------------------


@dataclass
class GrowthOptions:
    max_iters: int = 30
    seed_radius: float = 1e-6
    inflate: float = 1.02
    grow_tail: bool = True
    require_u_inside: bool = True  # False: covering candidates (u stretches out)
    poincare: PoincareOptions = field(default_factory=PoincareOptions)


@dataclass
class GrowthResult:
    hset: HSetWithTail
    iterations: int
    converged: bool
    last_bounds: object


def grow_trapping_region(
    problem: DdeProblem,
    sec: Section,
    frame: HSetWithTail,
    opts: GrowthOptions | None = None,
) -> GrowthResult:
    """Iteratively inflate a trapping-region candidate until the rigorous
    Poincare image falls back inside it.

    The unstable interval W stays fixed; the stable local coordinates start
    at the seed radius and are hulled with each rigorous image (slightly
    inflated so the fixed point of the iteration has interior stable room);
    the tail scale grows the same way when enabled.  On success the frame's
    stable columns are rescaled so the support is the normalized unit ball.
    """
    opts = opts or GrowthOptions()
    M = frame.layout().M
    lo = np.full(M, -opts.seed_radius)
    hi = np.full(M, opts.seed_radius)
    lo[0] = hi[0] = 0.0
    lo[1], hi[1] = frame.W.lo, frame.W.hi
    coords = IArray(lo, hi)
    tail = frame.tail.copy()
    bounds = None
    for it in range(1, opts.max_iters + 1):
        work = HSetWithTail(
            frame.name, frame.grid, frame.d, frame.n,
            frame.v_ref, frame.C, frame.W, tail,
        )
        x0 = work.support_box(coords)
        res = poincare_image(problem, x0, sec, opts.poincare)
        bounds = localize_pieces(work, res.pieces, keep_coords=True)
        img = bounds.coords
        rmag = np.maximum(np.abs(res.image.R.lo), np.abs(res.image.R.hi))
        inside = (
            (
                not opts.require_u_inside
                or (frame.W.lo < bounds.u.lo and bounds.u.hi < frame.W.hi)
            )
            and bool(np.all(img.lo[2:] > coords.lo[2:]))
            and bool(np.all(img.hi[2:] < coords.hi[2:]))
            and bool(np.all(rmag < tail) if np.any(tail) else not np.any(rmag))
        )
        if inside:
            return GrowthResult(
                _rescaled(frame, coords, tail), it, True, bounds
            )
        # hull and inflate the stable coordinates
        new_lo = np.minimum(coords.lo, opts.inflate * img.lo)
        new_hi = np.maximum(coords.hi, opts.inflate * img.hi)
        new_lo[0:2] = coords.lo[0:2]
        new_hi[0:2] = coords.hi[0:2]
        coords = IArray(new_lo, new_hi)
        if opts.grow_tail:
            tail = np.maximum(tail, opts.inflate * rmag)
    return GrowthResult(_rescaled(frame, coords, tail), opts.max_iters, False, bounds)


def _rescaled(frame: HSetWithTail, coords: IArray, tail: np.ndarray) -> HSetWithTail:
    """Fold the grown stable radii into the frame columns so the support is
    {0} x W x unit ball again."""
    M = frame.layout().M
    mid = coords.mid()
    mid[0:2] = 0.0
    rad = 0.5 * (coords.hi - coords.lo)
    scale = np.ones(M)
    scale[2:] = np.maximum(rad[2:], 1e-300)
    v_ref = frame.v_ref + frame.C @ mid
    C = frame.C * scale[None, :]
    return HSetWithTail(
        frame.name, frame.grid, frame.d, frame.n, v_ref, C, frame.W, tail
    )
