"""rigdde: validated-numerics integration of delay differential equations.

The package provides outward-rounded interval arithmetic, truncated Taylor-jet
machinery, a piecewise-Taylor phase space of function sets, a Lohner-style
doubleton propagator that controls the wrapping effect, a rigorous integrator
with full steps and fractional (epsilon) steps, Poincare-map image enclosures,
and covering-relation checks that certify periodic orbits and symbolic
dynamics, together with a nonrigorous candidate-finding toolkit.
"""

from .intervals import (
    IArray,
    Interval,
    IntervalError,
    hull,
    idot,
    imatmul,
    mid_split,
    rigorous_qr,
    verified_inverse,
)

__all__ = [
    "IArray",
    "Interval",
    "IntervalError",
    "hull",
    "idot",
    "imatmul",
    "mid_split",
    "rigorous_qr",
    "verified_inverse",
]

__version__ = "0.1.0"
