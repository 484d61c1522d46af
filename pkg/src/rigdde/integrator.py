"""Rigorous time-stepping for delay differential equations.

One full step of size h advances a function-set enclosure X of the solution
segment: jets and remainders shift one grid index (the solution over past
intervals is unchanged data), the jet on the newest interval is computed
exactly from the value now and the delayed jets by the solution-jet
recurrence, its remainder comes from the same recurrence evaluated over a
rough enclosure of the step, and the finite part is pushed through the
Lohner doubleton propagator using Jacobians obtained by running the very
same recurrence on gradient-carrying scalars.

Orders grow by one every full delay (representation expansion) up to a
configurable cap; with the cap equal to the initial order the classical
fixed-order scheme is recovered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import Rhs
from .intervals import IArray, Interval, IntervalError
from .jets import Jet, dde_recurrence
from .lohner import DoubletonSet, StepJacobian, StepReport, propagate
from .series import Grad, sc_grad, sc_interval
from .space import FnSet, Grid, Layout, used_variables


class EnclosureError(IntervalError):
    """Rough-enclosure validation failed; the only failure point of a step."""


@dataclass
class IntegrationOptions:
    """Tuning knobs of the rigorous stepper.

    max_order: absolute cap on jet orders (representation expansion stops
      there).  ``None`` means 2*n0+1 where n0 is the minimal order of the
      initial set; setting it to n0 disables expansion.
    qr_policy: passed to the Lohner propagator.
    rough_inflate / rough_retry / rough_max_iter: rough-enclosure heuristic.
    """

    max_order: int | None = None
    qr_policy: str = "z"
    rough_inflate: float = 1.5
    rough_abs: float = 1e-15
    rough_retry: float = 2.0
    rough_max_iter: int = 30


@dataclass
class StepMeta:
    rough: IArray | None = None
    new_order: int = 0
    report: StepReport = field(default_factory=StepReport)


class DdeProblem:
    """A delay equation x'(t) = f(x(t), x(t-tau_1), ..., x(t-tau_m)) on a
    grid with all delays integer grid multiples p_1 = p > p_2 > ... >= 1."""

    def __init__(self, rhs: Rhs, grid: Grid):
        self.rhs = rhs
        self.grid = grid
        self.d = rhs.d
        steps = []
        for t_d in rhs.delays:
            pk = t_d / grid.h
            pi = int(round(pk))
            if not 1 <= pi <= grid.p or abs(pk - pi) > 1e-9 * max(1.0, pk):
                raise IntervalError(f"delay {t_d} does not sit on the grid")
            steps.append(pi)
        if steps and steps[0] != grid.p:
            raise IntervalError("largest delay must equal the history length")
        if any(a <= b for a, b in zip(steps, steps[1:])):
            raise IntervalError("delays must be strictly decreasing")
        self.delay_steps = steps

    def f_value(self, z: IArray, delayed_values) -> IArray:
        """Interval evaluation of f at the given current/delayed values."""
        env = list(z.tolist())
        for v in delayed_values:
            env.extend(v.tolist())
        return IArray.from_intervals(
            [sc_interval(v) for v in self.rhs.ev(env)]
        )


def rough_enclosure(
    problem: DdeProblem,
    x: FnSet,
    opts: IntegrationOptions | None = None,
):
    """A box Z containing the solution value over the whole next step.

    Validates the integral-inequality condition  B + [0,h] * f(W, U) = Z
    subset-of W  for an inflated candidate W, where B is the current value
    box and U encloses the delayed arguments over the step.  Inflation
    retries are the method's only heuristic (and its only failure point).
    """
    opts = opts or IntegrationOptions()
    h = x.grid.h
    eps = Interval(0.0, h)
    delayed = [x.eval_derivative(pi, 0, eps) for pi in problem.delay_steps]
    B = x.z_hull()
    fB = problem.f_value(B, delayed)
    W = (B + fB * eps).widen(opts.rough_inflate, opts.rough_abs)
    for _ in range(opts.rough_max_iter):
        Z = B + problem.f_value(W, delayed) * eps
        if W.contains(Z):
            return Z
        W = W.hull_with(Z).widen(opts.rough_retry - 1.0, opts.rough_abs)
    raise EnclosureError(
        f"rough enclosure failed after {opts.rough_max_iter} inflation rounds"
    )


def full_step(
    problem: DdeProblem,
    x: FnSet,
    opts: IntegrationOptions | None = None,
    want_meta: bool = False,
):
    """One rigorous step of size h.

    Output orders: the newest interval gets order nu = min(n+1, cap) where
    n is the smallest order among the delayed jets actually used; all other
    jets/remainders shift one index (bitwise).
    """
    opts = opts or IntegrationOptions()
    grid = x.grid
    d = x.d
    h = grid.h
    lay = x.layout
    n_step = min(x.eta[pi - 1] for pi in problem.delay_steps)
    cap = opts.max_order if opts.max_order is not None else 2 * min(x.eta) + 1
    nu = min(n_step + 1, max(cap, 1))
    meta = StepMeta(new_order=nu)

    # rough enclosure of the value over the step, and of the delayed jets
    Z = rough_enclosure(problem, x, opts)
    meta.rough = Z
    step_eps = Interval(0.0, h)
    c_jets = [
        Jet.from_iarray(x.delayed_jet_enclosure(pi, nu))
        for pi in problem.delay_steps
    ]
    _, F_jet = dde_recurrence(problem.rhs, Z, c_jets, nu, want_f_jet=True)
    F_top = IArray.from_intervals([sc_interval(v) for v in F_jet.coeffs[nu]])
    # the new jet has order nu, so its remainder bounds x^[nu+1] = F^[nu]/(nu+1)
    xi_new = F_top / (nu + 1)
    rem_z = F_top * step_eps * (Interval(h) ** nu)

    # used variables: z plus delayed-jet coefficients 0..nu-1
    u_groups, _ = used_variables(problem.rhs, x, max_order=nu - 1)
    dim_u = d * len(u_groups)

    # jacobian of the new jet via gradient scalars on the set hull
    hullv = x.hull()
    seeds = []
    for pos, g in enumerate(u_groups):
        sl = lay.slice_of(g)
        for c in range(d):
            seeds.append(Grad.seed(hullv[sl][c], dim_u, pos * d + c))
    z_seed = seeds[:d]
    delayed_grad = []
    off = d
    for pi in problem.delay_steps:
        comps = []
        for k in range(nu):
            comps.append(seeds[off : off + d])
            off += d
        delayed_grad.append(Jet(comps))
    sol_g = dde_recurrence(problem.rhs, z_seed, delayed_grad, nu - 1)

    # the same jet at the set's center (point input -> tight enclosure)
    cx = x.A.x
    z_c = [Interval(cx[lay.slice_of(lay.group_z())][c]) for c in range(d)]
    delayed_c = []
    for pi in problem.delay_steps:
        comps = [
            [
                Interval(cx[lay.slice_of(lay.group_jet(pi, k))][c])
                for c in range(d)
            ]
            for k in range(nu)
        ]
        delayed_c.append(Jet(comps))
    sol_c = dde_recurrence(problem.rhs, z_c, delayed_c, nu - 1)

    # assemble D rows and center rows: z-bar first, then j_1 coefficients
    K = d * (nu + 2)
    D = IArray.zeros((K, dim_u))
    center = IArray.zeros(K)
    hiv = Interval(h)
    # j_1 coefficient rows occupy D[d:(nu+2)*d]
    for k in range(nu + 1):
        for c in range(d):
            row = d * (k + 1) + c
            D[row] = sc_grad(sol_g.coeffs[k][c], dim_u)
            center[row] = sc_interval(sol_c.coeffs[k][c])
    # z-bar = T(j_1; h) + rem_z: Horner in interval h over the jet rows
    for c in range(d):
        acc_D = IArray.zeros(dim_u)
        acc_c = Interval(0.0)
        for k in range(nu, -1, -1):
            acc_D = acc_D * hiv + D[d * (k + 1) + c]
            acc_c = acc_c * hiv + center[d * (k + 1) + c]
        D[c] = acc_D
        center[c] = acc_c + rem_z[c]

    # shifts: j_i(y) = j_{i-1}(x) for i = 2..p (old j_p is consumed)
    shift_src = []
    for i in range(1, grid.p):
        for k in range(x.eta[i - 1] + 1):
            shift_src.append(lay.group_jet(i, k))

    jac = StepJacobian(D=D, center=center, u_groups=u_groups, shift_src=shift_src, d=d)
    A_new = propagate(x.A, jac, qr_policy=opts.qr_policy, report=meta.report)

    eta_new = (nu,) + x.eta[:-1]
    R_new = IArray.concatenate([xi_new.reshape(1, d), x.R[: grid.p - 1]], axis=0)
    y = FnSet(grid, d, eta_new, A_new, R_new)
    if want_meta:
        return y, meta
    return y


class Trajectory:
    """The sequence X_0, X_1, ... of per-step enclosures.

    ``window`` limits how many full sets are retained (older entries are
    dropped to bound memory, keeping only their z-hulls for reporting);
    ``None`` keeps everything.
    """

    def __init__(self, problem: DdeProblem, window: int | None = None):
        self.problem = problem
        self.sets: list[FnSet | None] = []
        self.metas: list[StepMeta | None] = []
        self.z_hulls: list[IArray] = []
        self.window = window

    def append(self, x: FnSet, meta: StepMeta | None = None):
        self.sets.append(x)
        self.metas.append(meta)
        self.z_hulls.append(x.z_hull())
        if self.window is not None:
            cut = len(self.sets) - self.window
            for i in range(max(cut, 0)):
                if self.sets[i] is not None:
                    self.sets[i] = None

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, m: int) -> FnSet:
        s = self.sets[m]
        if s is None:
            raise IndexError(f"set {m} was evicted from the trajectory window")
        return s

    def dump_lines(self):
        out = []
        for m, (x, meta) in enumerate(zip(self.sets, self.metas)):
            if x is None:
                continue
            n, p, q = x.signature()
            out.append(
                f"step={m} n={n} p={p} q={q} "
                f"coeff_diam={x.max_coeff_diam():.6e} "
                f"rem_diam={x.max_remainder_diam():.6e}"
            )
        return out


def integrate(
    problem: DdeProblem,
    x0: FnSet,
    steps: int,
    opts: IntegrationOptions | None = None,
    window: int | None = None,
) -> Trajectory:
    """Advance x0 by the given number of full steps."""
    opts = opts or IntegrationOptions()
    if opts.max_order is None:
        opts = IntegrationOptions(
            max_order=2 * min(x0.eta) + 1,
            qr_policy=opts.qr_policy,
            rough_inflate=opts.rough_inflate,
            rough_abs=opts.rough_abs,
            rough_retry=opts.rough_retry,
            rough_max_iter=opts.rough_max_iter,
        )
    traj = Trajectory(problem, window=window)
    traj.append(x0, None)
    x = x0
    for _ in range(steps):
        x, meta = full_step(problem, x, opts, want_meta=True)
        traj.append(x, meta)
    return traj


# =============================================================================
# Fractional (epsilon) steps
# =============================================================================
#
# The solution segment at time m*h + eps (0 < eps < h) is assembled from the
# stored representations: jet i of the output is the derivative
# representation of x_m on interval i Taylor-evaluated at eps, the value now
# comes from jet 1 of x_{m+1}, and each output remainder is a hull of
# remainder evaluations of consecutive sets.  Every finite output row is an
# interval-weighted linear combination of finite rows of the inputs, so the
# doubleton structure (against the shared initial deviation box r0) survives
# the step; only the weights are intervals.


def _eps_row(src: FnSet, i: int, k: int, rho: Interval):
    """Weights and additive constant of one output row.

    Returns (groups, weights, const): the output row equals
    sum_l weights[l] * finite_row(groups[l]) + const, where const is the
    remainder contribution (an IArray of dim d).
    """
    n_i = src.eta[i - 1]
    groups = []
    weights = []
    w = Interval(1.0)
    for l in range(0, n_i - k + 1):
        groups.append(src.layout.group_jet(i, l + k))
        weights.append(w * math.comb(l + k, k))
        w = w * rho
    const = src.R[i - 1] * (math.comb(n_i + 1, k) * w)
    return groups, weights, const


def _eps_z_row(src: FnSet, rho: Interval):
    return _eps_row(src, 1, 0, rho)


def _check_eps_compat(sets, n_out):
    base = sets[0]
    for s in sets:
        if s.grid != base.grid or s.d != base.d:
            raise IntervalError("epsilon step inputs on different grids")
        if s.A.r0 is not base.A.r0:
            raise IntervalError(
                "epsilon step inputs must come from one trajectory "
                "(shared r0)"
            )
        if min(s.eta) < n_out:
            raise IntervalError(
                f"orders {min(s.eta)} too low for output order {n_out}"
            )


def _eps_assemble(j_variants, z_variants, xi_variants, n_out: int) -> FnSet:
    """Build the output set from per-row variant lists.

    Each variant is (src_set, rho_interval); j-rows and z-rows are hulled
    over their variants in doubleton form, the remainder rows as plain
    interval hulls.
    """
    base = j_variants[0][0]
    grid, d, p = base.grid, base.d, base.grid.p
    lay_out = Layout(d, [n_out] * p)
    M_out = lay_out.M
    N = base.A.N
    r0 = base.A.r0

    # precompute per set: B_g @ r_g for every group
    br_cache = {}

    def br(src: FnSet, g: int) -> IArray:
        key = (id(src), g)
        out = br_cache.get(key)
        if out is None:
            from .intervals import imatvec

            out = imatvec(src.A.B[g], src.A.r[g * d : (g + 1) * d])
            br_cache[key] = out
        return out

    x_out = np.zeros(M_out)
    C_out = np.zeros((M_out, N))
    r_out = IArray.zeros(M_out)

    def fill_group(g_out: int, rows_per_variant):
        """rows_per_variant: list of (src, groups, weights, const)."""
        sl = lay_out.slice_of(g_out)
        # reference variant (middle) defines the point parts
        ref = rows_per_variant[len(rows_per_variant) // 2]
        src_r, gr_r, w_r, c_r = ref
        S_ref = np.zeros((d, N))
        cen_ref = np.zeros(d)
        for gl, wl in zip(gr_r, w_r):
            wm = wl.mid()
            S_ref += wm * src_r.A.C[src_r.layout.slice_of(gl), :]
            cen_ref += wm * src_r.A.x[src_r.layout.slice_of(gl)]
        cen_ref += c_r.mid()
        x_out[sl] = cen_ref
        C_out[sl, :] = S_ref

        dev = None
        for src, groups, weights, const in rows_per_variant:
            S_v = IArray.from_point(-S_ref)
            cen_v = IArray.from_point(-cen_ref) + const
            for gl, wl in zip(groups, weights):
                ssl = src.layout.slice_of(gl)
                S_v = S_v + IArray.from_point(src.A.C[ssl, :]) * wl
                cen_v = cen_v + (
                    IArray.from_point(src.A.x[ssl]) + br(src, gl)
                ) * wl
            from .intervals import imatvec

            dv = imatvec(S_v, r0) + cen_v
            dev = dv if dev is None else dev.hull_with(dv)
        r_out[sl] = dev

    # z row
    fill_group(
        lay_out.group_z(),
        [(_s,) + _eps_z_row(_s, _rho) for _s, _rho in z_variants],
    )
    # jet rows
    for i in range(1, p + 1):
        for k in range(n_out + 1):
            fill_group(
                lay_out.group_jet(i, k),
                [(_s,) + _eps_row(_s, i, k, _rho) for _s, _rho in j_variants],
            )
    # remainder rows: interval hulls of derivative evaluations at k = n_out+1
    R_rows = []
    for i in range(1, p + 1):
        acc = None
        for src, rho in xi_variants:
            v = src.eval_derivative(i, n_out + 1, rho)
            acc = v if acc is None else acc.hull_with(v)
        R_rows.append(acc)
    R_out = IArray.stack(R_rows, axis=0)

    A_out = DoubletonSet(
        x_out, C_out, r0, [np.eye(d) for _ in range(M_out // d)], r_out, d
    )
    return FnSet(grid, d, [n_out] * p, A_out, R_out)


def epsilon_step(x_m: FnSet, x_m1: FnSet, eps: Interval, n_out: int) -> FnSet:
    """Enclosure of the solution segment at times m*h + eps, eps in (0, h).

    ``x_m1`` must be the full-step image of ``x_m``.  The output lives in
    the uniform space of order ``n_out``, which must not exceed any input
    jet order.  With input orders strictly above ``n_out`` (integrate long
    enough with order expansion first) every output coefficient is
    polynomial-accurate; at equal orders the top output coefficient and
    remainder fall back on the input remainder bound and are much wider.
    """
    h = x_m.grid.h
    if not (0.0 < eps.lo and eps.hi < h):
        raise IntervalError("epsilon must lie strictly inside (0, h)")
    _check_eps_compat([x_m, x_m1], n_out)
    if min(min(x_m.eta), min(x_m1.eta)) < n_out:
        raise IntervalError(
            "input orders must be at least the output order "
            "(integrate longer or lower n_out)"
        )
    full = Interval(0.0, h)
    right = Interval(0.0, eps.hi)
    return _eps_assemble(
        j_variants=[(x_m, eps)],
        z_variants=[(x_m1, eps)],
        xi_variants=[(x_m, full), (x_m1, right)],
        n_out=n_out,
    )


def epsilon_step_long(sets, eps1: float, eps2: float, n_out: int) -> FnSet:
    """Enclosure of all segments for t in [m*h + eps1, (m+mbar)*h + eps2].

    ``sets`` is the list X_m .. X_{m+mbar+1} of consecutive enclosures,
    mbar >= 0; with mbar = 0 this reduces to :func:`epsilon_step`.
    """
    if len(sets) < 2:
        raise IntervalError("need at least two consecutive sets")
    mbar = len(sets) - 2
    h = sets[0].grid.h
    if not (0.0 < eps1 <= h and 0.0 <= eps2 < h):
        raise IntervalError("bracket endpoints outside (0, h)")
    if mbar == 0:
        return epsilon_step(sets[0], sets[1], Interval(eps1, eps2), n_out)
    _check_eps_compat(sets, n_out)
    if min(min(s.eta) for s in sets) < n_out:
        raise IntervalError("input orders too low for the requested output")
    full = Interval(0.0, h)
    left = Interval(eps1, h)
    right = Interval(0.0, eps2)
    j_variants = [(sets[0], left)]
    j_variants += [(sets[j], full) for j in range(1, mbar)]
    j_variants += [(sets[mbar], right)]
    z_variants = [(sets[1], left)]
    z_variants += [(sets[j], full) for j in range(2, mbar + 1)]
    z_variants += [(sets[mbar + 1], right)]
    xi_variants = [(sets[0], full)]
    xi_variants += [(sets[j], full) for j in range(1, mbar + 1)]
    xi_variants += [(sets[mbar + 1], right)]
    return _eps_assemble(j_variants, z_variants, xi_variants, n_out)
