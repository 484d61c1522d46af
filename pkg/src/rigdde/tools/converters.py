"""File-format and interval-vector utilities.

Usage: ``python -m rigdde.tools.converters <command> [args]``

Commands operate on the shared text formats (interval / vector / matrix
literals, one value per file).  Inputs may be file paths or inline
literals; results go to stdout or ``--out FILE``.

  convmatrix    re-serialize a matrix (``--hex`` for exact hex floats)
  convvector    re-serialize a vector
  growvector    inflate a vector about its midpoint by a factor r
  splitvector   split one coordinate into N equal pieces
  crmatrix      column-scale C by the magnitudes of a box r, so that
                C*r is contained in C_r*[-1,1]^M
  rmatrix       diagonal enclosures Diag(r) and Diag(1/r) of a vector r
  invmatrixtest verified inverse; checks Id is inside A*inv(A)
  midmatrix     midpoint (point) matrix of an interval matrix
  vectorcmp     compare two vectors (bit-equality, containment, distance)
  vectorhull    componentwise interval hull of two or more vectors

Exit status is 0 on success; invmatrixtest and vectorcmp use it as the
check verdict.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ..intervals import (
    IArray,
    Interval,
    IntervalError,
    format_matrix,
    format_vector,
    imatmul,
    imatvec,
    parse_matrix,
    parse_vector,
    verified_inverse,
)


def _read_text(src: str) -> str:
    if os.path.exists(src):
        with open(src) as f:
            return f.read()
    return src


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def _load_vector(src: str) -> IArray:
    return parse_vector(_read_text(src).strip())


def _load_matrix(src: str) -> IArray:
    return parse_matrix(_read_text(src).strip())


def cmd_convmatrix(args) -> int:
    _emit(format_matrix(_load_matrix(args.src), hex_form=args.hex), args.out)
    return 0


def cmd_convvector(args) -> int:
    _emit(format_vector(_load_vector(args.src), hex_form=args.hex), args.out)
    return 0


def cmd_growvector(args) -> int:
    v = _load_vector(args.src)
    m = IArray.from_point(v.mid())
    grown = m + (v - m) * Interval(args.r)
    _emit(format_vector(grown, hex_form=args.hex), args.out)
    return 0


def cmd_splitvector(args) -> int:
    v = _load_vector(args.src)
    i = args.index
    if not 0 <= i < v.shape[0]:
        raise SystemExit(f"index {i} out of range for size {v.shape[0]}")
    lo, hi = v.lo[i], v.hi[i]
    edges = np.linspace(lo, hi, args.pieces + 1)
    lines = []
    for k in range(args.pieces):
        piece = IArray(v.lo.copy(), v.hi.copy())
        piece.lo[i] = edges[k]
        piece.hi[i] = edges[k + 1]
        lines.append(format_vector(piece, hex_form=args.hex))
    _emit("\n".join(lines), args.out)
    return 0


def cmd_crmatrix(args) -> int:
    C = _load_matrix(args.mat)
    r = _load_vector(args.vec)
    if C.shape[1] != r.shape[0]:
        raise SystemExit("matrix/vector size mismatch")
    mag = np.maximum(np.abs(r.lo), np.abs(r.hi))
    # outward-rounded column scaling; C*r is inside C_r*[-1,1]^M because
    # every x in r satisfies |x_i| <= mag_i
    Cr = imatmul(C, IArray.from_point(np.diag(mag)))
    _emit(format_matrix(Cr, hex_form=args.hex), args.out)
    return 0


def cmd_rmatrix(args) -> int:
    r = _load_vector(args.src)
    if np.any((r.lo <= 0.0) & (r.hi >= 0.0)):
        raise SystemExit("rmatrix input must not contain zero")
    n = r.shape[0]
    diag = IArray(np.diag(r.lo), np.diag(r.hi))
    inv_entries = [Interval(1.0) / r[i] for i in range(n)]
    inv_lo = np.zeros((n, n))
    inv_hi = np.zeros((n, n))
    for i, iv in enumerate(inv_entries):
        inv_lo[i, i] = iv.lo
        inv_hi[i, i] = iv.hi
    lines = [
        format_matrix(diag, hex_form=args.hex),
        format_matrix(IArray(inv_lo, inv_hi), hex_form=args.hex),
    ]
    _emit("\n".join(lines), args.out)
    return 0


def cmd_invmatrixtest(args) -> int:
    A = _load_matrix(args.src)
    try:
        inv = verified_inverse(A)
    except IntervalError as e:
        print(f"FAIL: no verified inverse: {e}")
        return 1
    prod = imatmul(A, inv)
    width = float(np.max(prod.hi - prod.lo))
    n = A.shape[0]
    eye = np.eye(n)
    ok = bool(np.all(prod.lo <= eye) and np.all(prod.hi >= eye))
    verdict = "PASS" if ok else "FAIL"
    _emit(
        f"{verdict}: Id {'inside' if ok else 'NOT inside'} A*inv(A), "
        f"max product width {width:.17g}",
        args.out,
    )
    return 0 if ok else 1


def cmd_midmatrix(args) -> int:
    A = _load_matrix(args.src)
    _emit(format_matrix(IArray.from_point(A.mid()), hex_form=args.hex), args.out)
    return 0


def cmd_vectorcmp(args) -> int:
    a = _load_vector(args.a)
    b = _load_vector(args.b)
    if a.shape != b.shape:
        print(f"DIFFER: sizes {a.shape[0]} vs {b.shape[0]}")
        return 1
    equal = bool(np.all(a.lo == b.lo) and np.all(a.hi == b.hi))
    a_in_b = bool(np.all(b.lo <= a.lo) and np.all(a.hi <= b.hi))
    b_in_a = bool(np.all(a.lo <= b.lo) and np.all(b.hi <= a.hi))
    dist = float(
        np.max(np.maximum(np.abs(a.lo - b.lo), np.abs(a.hi - b.hi)))
    )
    rel = (
        "equal" if equal
        else "first inside second" if a_in_b
        else "second inside first" if b_in_a
        else "overlap/disjoint"
    )
    _emit(f"{rel}; max endpoint distance {dist:.17g}", args.out)
    return 0 if equal else 1


def cmd_vectorhull(args) -> int:
    vs = [_load_vector(s) for s in args.srcs]
    acc = vs[0]
    for v in vs[1:]:
        if v.shape != acc.shape:
            raise SystemExit("vector size mismatch")
        acc = IArray(np.minimum(acc.lo, v.lo), np.maximum(acc.hi, v.hi))
    _emit(format_vector(acc, hex_form=args.hex), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="python -m rigdde.tools.converters",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default=None, help="output file")
        sp.add_argument("--hex", action="store_true",
                        help="serialize floats in exact hexadecimal")

    sp = sub.add_parser("convmatrix")
    sp.add_argument("src"); common(sp); sp.set_defaults(fn=cmd_convmatrix)
    sp = sub.add_parser("convvector")
    sp.add_argument("src"); common(sp); sp.set_defaults(fn=cmd_convvector)
    sp = sub.add_parser("growvector")
    sp.add_argument("src"); sp.add_argument("r", type=float)
    common(sp); sp.set_defaults(fn=cmd_growvector)
    sp = sub.add_parser("splitvector")
    sp.add_argument("src"); sp.add_argument("index", type=int)
    sp.add_argument("pieces", type=int)
    common(sp); sp.set_defaults(fn=cmd_splitvector)
    sp = sub.add_parser("crmatrix")
    sp.add_argument("mat"); sp.add_argument("vec")
    common(sp); sp.set_defaults(fn=cmd_crmatrix)
    sp = sub.add_parser("rmatrix")
    sp.add_argument("src"); common(sp); sp.set_defaults(fn=cmd_rmatrix)
    sp = sub.add_parser("invmatrixtest")
    sp.add_argument("src"); common(sp); sp.set_defaults(fn=cmd_invmatrixtest)
    sp = sub.add_parser("midmatrix")
    sp.add_argument("src"); common(sp); sp.set_defaults(fn=cmd_midmatrix)
    sp = sub.add_parser("vectorcmp")
    sp.add_argument("a"); sp.add_argument("b")
    common(sp); sp.set_defaults(fn=cmd_vectorcmp)
    sp = sub.add_parser("vectorhull")
    sp.add_argument("srcs", nargs="+")
    common(sp); sp.set_defaults(fn=cmd_vectorhull)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
