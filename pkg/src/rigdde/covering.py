"""h-sets with tails and covering-relation verification.

An h-set is an affine frame v_ref + C(.) in the finite part of the base
uniform space, with support {0} x W x Ball_inf(0,1) -- coordinate 0 is the
section normal, coordinate 1 the single unstable direction with interval W,
the rest a stable unit ball -- plus a symmetric tail bound on the remainder
rows.  Checks map Poincare images into such frames with a verified inverse
of C (keeping the doubleton structure, so the transported initial box is
not wrapped) and then test strict inequalities on the localized bounds:
containment for trapping regions, stretching across (conditions CC1/CC2/CC3
with one unstable direction) for coverings.  Chains of verified coverings
are summarized in a transition-matrix certificate; the dynamical conclusion
(orbits shadowing admissible symbol sequences) is standard fixed-point-index
theory and is cited by the callers, not re-proved here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .intervals import (
    IArray,
    Interval,
    IntervalError,
    format_float,
    format_interval,
    format_matrix,
    format_vector,
    imatmul,
    imatvec,
    parse_matrix,
    parse_value,
    parse_vector,
    verified_inverse,
)
from .lohner import DoubletonSet
from .space import FnSet, Grid, Layout


@dataclass
class HSetWithTail:
    """Affine h-set with one unstable direction and a tail bound.

    ``tail`` holds the per-interval, per-component remainder scale (shape
    (p, d)); the tail support is tail * [-1, 1] elementwise.
    """

    name: str
    grid: Grid
    d: int
    n: int
    v_ref: np.ndarray
    C: np.ndarray
    W: Interval
    tail: np.ndarray

    _Cinv: IArray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.v_ref = np.asarray(self.v_ref, dtype=np.float64)
        self.C = np.asarray(self.C, dtype=np.float64)
        self.tail = np.asarray(self.tail, dtype=np.float64)
        M = self.layout().M
        if self.v_ref.shape != (M,) or self.C.shape != (M, M):
            raise ValueError("frame dimensions do not match the layout")
        if self.tail.shape != (self.grid.p, self.d):
            raise ValueError("tail must have shape (p, d)")
        if np.any(self.tail < 0.0):
            raise ValueError("tail scale must be nonnegative")

    def layout(self) -> Layout:
        return Layout(self.d, [self.n] * self.grid.p)

    def c_inv(self) -> IArray:
        if self._Cinv is None:
            self._Cinv = verified_inverse(self.C)
        return self._Cinv

    # -- supports -------------------------------------------------------------

    def support(self, edge: str | None = None) -> FnSet:
        """The set X(A, Xi) as a doubleton-backed FnSet.

        ``edge='left'``/``'right'`` gives the zero-width slice of the
        support at the corresponding endpoint of W (the edges whose images
        witness the stretching conditions).
        """
        M = self.layout().M
        if edge is None:
            u = self.W
        elif edge == "left":
            u = Interval(self.W.lo)
        elif edge == "right":
            u = Interval(self.W.hi)
        else:
            raise ValueError("edge must be None, 'left' or 'right'")
        lo = np.full(M, -1.0)
        hi = np.full(M, 1.0)
        lo[0] = hi[0] = 0.0
        lo[1], hi[1] = u.lo, u.hi
        return self.support_box(IArray(lo, hi))

    def support_box(self, coords: IArray, tail: np.ndarray | None = None) -> FnSet:
        """v_ref + C * coords with the given (possibly asymmetric) local box.

        The box is re-centered so the stored center is a member; the
        rounding slack of the center shift is absorbed into the local-error
        part.
        """
        M = self.layout().M
        m = coords.mid()
        shift = imatvec(IArray.from_point(self.C), IArray.from_point(m))
        x = self.v_ref + shift.mid()
        slack = shift - shift.mid()
        r0 = coords - IArray.from_point(m)
        w = np.maximum(np.abs(r0.lo), np.abs(r0.hi))
        r0 = IArray(-w, w)
        A = DoubletonSet(
            x,
            self.C.copy(),
            r0,
            [np.eye(self.d) for _ in range(M // self.d)],
            slack,
            self.d,
        )
        t = self.tail if tail is None else tail
        R = IArray(-t, t.copy())
        return FnSet(self.grid, self.d, [self.n] * self.grid.p, A, R)

    # -- serialization --------------------------------------------------------

    def dump_lines(self, hexfloats: bool = True):
        yield "hset v1"
        yield f"name {self.name}"
        yield f"d {self.d}"
        yield f"p {self.grid.p}"
        yield f"n {self.n}"
        yield f"tau {format_float(self.grid.tau, hexfloats)}"
        yield "W " + format_interval(self.W, hexfloats)
        yield "v_ref " + format_vector(IArray.from_point(self.v_ref), hexfloats)
        yield "C " + format_matrix(IArray.from_point(self.C), hexfloats)
        yield "tail " + format_matrix(IArray.from_point(self.tail), hexfloats)

    @staticmethod
    def load_lines(lines) -> "HSetWithTail":
        it = iter(lines)
        if next(it).strip() != "hset v1":
            raise IntervalError("not an hset v1 stream")
        fields = {}
        for line in it:
            line = line.strip()
            if not line:
                continue
            key, _, rest = line.partition(" ")
            fields[key] = rest
        grid = Grid(float(parse_value(fields["tau"]).lo), int(fields["p"]))
        d, n = int(fields["d"]), int(fields["n"])
        W = parse_value(fields["W"])
        v_ref = parse_vector(fields["v_ref"]).mid()
        C = parse_matrix(fields["C"]).mid()
        tail = parse_matrix(fields["tail"]).mid()
        return HSetWithTail(fields["name"], grid, d, n, v_ref, C, W, tail)


@dataclass
class LocalBounds:
    """A set expressed in an h-set frame, reduced to what the checks read."""

    first: Interval  # section-normal coordinate (diagnostic only)
    u: Interval  # unstable coordinate, frame scale
    stable: float  # max |coordinate| over the stable directions
    tail: float  # max remainder magnitude relative to the tail scale
    coords: IArray | None = None  # full localized vector, for region growing

    def hull_with(self, other: "LocalBounds") -> "LocalBounds":
        return LocalBounds(
            self.first.hull(other.first),
            self.u.hull(other.u),
            max(self.stable, other.stable),
            max(self.tail, other.tail),
            self.coords.hull_with(other.coords)
            if self.coords is not None and other.coords is not None
            else None,
        )


def _project_rows(h: HSetWithTail, y: FnSet) -> np.ndarray:
    """Row indices of y's layout realizing the base finite part."""
    lay0 = h.layout()
    lay = y.layout
    idx = np.empty(lay0.M, dtype=np.intp)
    idx[0 : h.d] = np.arange(h.d)
    for i in range(1, h.grid.p + 1):
        for k in range(h.n + 1):
            src = lay.slice_of(lay.group_jet(i, k))
            dst = lay0.slice_of(lay0.group_jet(i, k))
            idx[dst] = np.arange(src.start, src.stop)
    return idx


def to_local(h: HSetWithTail, y: FnSet, keep_coords: bool = False) -> LocalBounds:
    """Bounds of C^-1 (a(y) - v_ref) plus the relative tail magnitude.

    The doubleton structure of y is pushed through the verified inverse:
    matrix products are formed before anything is applied to a box.
    """
    if y.grid != h.grid or y.d != h.d or min(y.eta) < h.n:
        raise IntervalError("image does not fit the h-set's space")
    Cinv = h.c_inv()
    idx = _project_rows(h, y)
    d = h.d
    # pointwise part and the local-error boxes, folded row-wise first
    v = IArray.from_point(y.A.x[idx] - h.v_ref)
    lay = y.layout
    n_groups = y.A.M // d
    br = [imatvec(y.A.B[g], y.A.r[g * d : (g + 1) * d]) for g in range(n_groups)]
    br_full = IArray.concatenate(br)
    v = v + _take(br_full, idx)
    loc = imatvec(Cinv, v)
    S = imatmul(Cinv, IArray.from_point(y.A.C[idx, :]))
    loc = loc + imatvec(S, y.A.r0)

    first = loc[0]
    u = loc[1]
    mags = np.maximum(np.abs(loc.lo), np.abs(loc.hi))
    stable = float(np.max(mags[2:])) if loc.lo.size > 2 else 0.0
    rmag = np.maximum(np.abs(y.R.lo), np.abs(y.R.hi))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(
            h.tail > 0.0, rmag / h.tail, np.where(rmag > 0.0, np.inf, 0.0)
        )
    tail = float(np.max(rel)) if rel.size else 0.0
    return LocalBounds(first, u, stable, tail, loc if keep_coords else None)


def _take(arr: IArray, idx) -> IArray:
    return IArray(arr.lo[idx], arr.hi[idx], _unsafe=True)


def localize_pieces(h: HSetWithTail, pieces, keep_coords: bool = False) -> LocalBounds:
    """Hull of to_local over sub-piece images (tighter than localizing the
    hulled image, since each piece keeps its own doubleton)."""
    out = None
    for y in pieces:
        b = to_local(h, y, keep_coords)
        out = b if out is None else out.hull_with(b)
    return out


@dataclass
class CoveringReport:
    relation: str
    source: str
    target: str
    kind: str  # 'trapping' or 'covering'
    conditions: dict  # name -> (witness: str, passed: bool)
    passed: bool
    orientation: str = ""

    def lines(self):
        verdict = "VERIFIED" if self.passed else "FAILED"
        yield f"{self.kind} {self.relation}: {verdict}" + (
            f" (orientation {self.orientation})" if self.orientation else ""
        )
        for name, (witness, ok) in self.conditions.items():
            yield f"  {name}: {witness} -> {'ok' if ok else 'VIOLATED'}"


def _norm_u(m: HSetWithTail, u: Interval) -> Interval:
    """Map the target frame's W affinely onto [-1, 1]."""
    span = Interval(m.W.hi) - Interval(m.W.lo)
    centered = (u - Interval(m.W.lo)) + (u - Interval(m.W.hi))
    return centered / span


def check_trapping(h: HSetWithTail, pieces) -> CoveringReport:
    """P(X) inside X: u strictly interior to W, stable and tail bounds < 1."""
    b = localize_pieces(h, pieces)
    conds = {
        "u_in_interior_W": (
            f"{b.u} inside {h.W}",
            h.W.lo < b.u.lo and b.u.hi < h.W.hi,
        ),
        "stable_bound": (format_float(b.stable, False) + " < 1", b.stable < 1.0),
        "tail_bound": (format_float(b.tail, False) + " < 1", b.tail < 1.0),
    }
    passed = all(ok for _, ok in conds.values())
    return CoveringReport(
        f"{h.name} => {h.name}", h.name, h.name, "trapping", conds, passed
    )


def check_covering(
    src: HSetWithTail,
    dst: HSetWithTail,
    left: LocalBounds,
    right: LocalBounds,
    full: LocalBounds,
) -> CoveringReport:
    """One-unstable-direction covering: edge images strictly beyond the
    target's unstable interval in opposite directions (either orientation),
    full image inside the stable ball and tail of the target; all strict."""
    ul = _norm_u(dst, left.u)
    ur = _norm_u(dst, right.u)
    cc2a = ul.hi < -1.0 and ur.lo > 1.0
    cc2b = ul.lo > 1.0 and ur.hi < -1.0
    conds = {
        "CC2_left_edge": (f"pi_u(left) = {ul} (scaled)", cc2a or cc2b),
        "CC2_right_edge": (f"pi_u(right) = {ur} (scaled)", cc2a or cc2b),
        "CC1_CC3_stable": (
            format_float(full.stable, False) + " < 1",
            full.stable < 1.0,
        ),
        "CC1_CC3_tail": (
            format_float(full.tail, False) + " < 1",
            full.tail < 1.0,
        ),
    }
    passed = all(ok for _, ok in conds.values())
    return CoveringReport(
        f"{src.name} => {dst.name}",
        src.name,
        dst.name,
        "covering",
        conds,
        passed,
        orientation="A" if cc2a else ("B" if cc2b else ""),
    )


@dataclass
class ChainCertificate:
    nodes: list
    matrix: np.ndarray
    reports: list
    loop: bool

    def lines(self):
        yield "covering chain certificate"
        yield "nodes " + " ".join(self.nodes)
        yield "transition_matrix " + format_matrix(IArray.from_point(self.matrix), False)
        if self.loop:
            yield "loop verified"
        for r in self.reports:
            yield from r.lines()


def verify_chain(reports, loop: bool = False) -> ChainCertificate:
    """Certify a family of verified coverings as a transition matrix.

    With ``loop=True`` the reports must form a closed chain in order
    (target of each = source of the next, last closing to the first).
    """
    for r in reports:
        if not r.passed:
            raise IntervalError(f"relation {r.relation} not verified")
    if loop:
        for a, b in zip(reports, reports[1:] + reports[:1]):
            if a.target != b.source:
                raise IntervalError(
                    f"chain break: {a.relation} then {b.relation}"
                )
    nodes = []
    for r in reports:
        for nm in (r.source, r.target):
            if nm not in nodes:
                nodes.append(nm)
    B = np.zeros((len(nodes), len(nodes)))
    for r in reports:
        B[nodes.index(r.source), nodes.index(r.target)] = 1.0
    return ChainCertificate(nodes, B, list(reports), loop)
