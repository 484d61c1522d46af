"""Shared command-line configuration for the tools.

All tools accept the same core flag set; each tool documents which flags it
actually consumes.  ``--epsi`` accepts either a percentage of the full step
(``50%``) or an explicit interval literal (``[0.001,0.002]``); ``--diam``
and ``--xi`` accept an interval literal (added to every finite coefficient
/ remainder bound respectively) or a plain number w, shorthand for the
symmetric ``[-w/2, w/2]``.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

from ..intervals import Interval, parse_interval


@dataclass
class RunConfig:
    initial: str = "1.1"
    dirpath: str = "."
    prefix: str = "run"
    n: int = 4
    p: int = 128
    epsi: str = "50%"
    diam: str = "[0,0]"
    xi: str = "[0,0]"
    pieces: int = 1
    full: bool = False
    regen: bool = False


def add_common_flags(parser: argparse.ArgumentParser) -> None:
    d = RunConfig()
    parser.add_argument("--initial", default=d.initial,
                        help="constant initial value or a vector file path")
    parser.add_argument("--dirpath", default=d.dirpath,
                        help="output (and data) directory")
    parser.add_argument("--prefix", default=d.prefix,
                        help="output file name prefix")
    parser.add_argument("--n", type=int, default=d.n,
                        help="jet order of the representation")
    parser.add_argument("--p", type=int, default=d.p,
                        help="grid subintervals per delay")
    parser.add_argument("--epsi", default=d.epsi,
                        help="fractional step: percentage of h ('50%%') "
                             "or an interval literal")
    parser.add_argument("--diam", default=d.diam,
                        help="initial finite-coefficient box: interval "
                             "literal or symmetric width")
    parser.add_argument("--xi", default=d.xi,
                        help="initial remainder box: interval literal or "
                             "symmetric width")
    parser.add_argument("--pieces", type=int, default=d.pieces,
                        help="subdivision count for Poincare images")
    parser.add_argument("--full", action="store_true",
                        help="run the full paper-scale configuration")
    parser.add_argument("--regen", action="store_true",
                        help="regenerate shipped candidate data first")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        initial=args.initial, dirpath=args.dirpath, prefix=args.prefix,
        n=args.n, p=args.p, epsi=args.epsi, diam=args.diam, xi=args.xi,
        pieces=args.pieces, full=getattr(args, "full", False),
        regen=getattr(args, "regen", False),
    )


def epsi_interval(spec: str, h: float) -> Interval:
    """'<frac>%' of the step h, or an explicit interval literal."""
    spec = spec.strip()
    if spec.endswith("%"):
        frac = float(spec[:-1]) / 100.0
        if not 0.0 < frac < 1.0:
            raise ValueError(f"epsi percentage outside (0, 100): {spec!r}")
        return Interval(frac * h, frac * h)
    iv = parse_interval(spec)
    if not (0.0 < iv.lo and iv.hi < h):
        raise ValueError(f"epsi interval {spec!r} outside (0, h={h})")
    return iv


def box_interval(spec: str) -> Interval:
    """Interval literal, or a bare width w meaning [-w/2, w/2]."""
    spec = spec.strip()
    if spec.startswith("["):
        return parse_interval(spec)
    w = float(spec)
    return Interval(-0.5 * w, 0.5 * w)
