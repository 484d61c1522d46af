"""Right-hand-side expression trees and their evaluation.

A :class:`Rhs` describes the vector field of a delay equation

    x'(t) = f( x(t), x(t - tau_1), ..., x(t - tau_m) )

as ``d`` scalar expression trees over ``(m+1) * d`` scalar inputs, built from
+, -, *, /, power, sin, cos, exp, log and constants.  Input ``a*d + c`` is
component ``c`` of delayed argument ``a`` (``a = 0`` is the current value).

The same tree evaluates on plain numbers, numpy arrays (batched), Intervals
and :class:`~rigdde.series.Grad` scalars, and -- one coefficient at a time --
on truncated Taylor series of any of those scalar types.

Text format (for configs and data files) is a tiny prefix notation::

    (add (neg (mul 2.0 x0)) (div x1 (add 1 (pow x1 9.65))))

Tokens: ``x<k>`` is input k; bare numbers are constants; other bare names are
parameters resolved from a dictionary at parse time.  Operators: add, sub,
mul, div (binary), neg, sin, cos, exp, log, sqrt (unary), pow (expression and
constant real exponent).
"""

from __future__ import annotations

import math
import re

from .intervals import Interval, IntervalError, ipower
from .series import (
    conv_coeff,
    div_coeff,
    exp_coeff,
    log_coeff,
    sc_cos,
    sc_exp,
    sc_log,
    sc_sin,
    sc_sqrt,
    sincos_coeff,
)


class Expr:
    """Base expression node.  Nodes are immutable and shareable."""

    def ev(self, env):
        """Evaluate on scalars; env is a sequence of input scalars."""
        raise NotImplementedError

    def make_state(self, env):
        """Create an incremental series-evaluation state over input series.

        env is a list of coefficient lists (which may still grow); the
        returned state's ``extend(k)`` computes coefficient k, valid once all
        input series have at least k+1 coefficients.  The state's ``out`` is
        the list of computed coefficients.
        """
        raise NotImplementedError

    def children(self):
        return ()

    def __add__(self, o):
        return Add(self, _as_expr(o))

    def __radd__(self, o):
        return Add(_as_expr(o), self)

    def __sub__(self, o):
        return Sub(self, _as_expr(o))

    def __rsub__(self, o):
        return Sub(_as_expr(o), self)

    def __neg__(self):
        return Neg(self)

    def __mul__(self, o):
        return Mul(self, _as_expr(o))

    def __rmul__(self, o):
        return Mul(_as_expr(o), self)

    def __truediv__(self, o):
        return Div(self, _as_expr(o))

    def __rtruediv__(self, o):
        return Div(_as_expr(o), self)

    def __pow__(self, e):
        return Pow(self, e)


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        return Const(float(x))
    if isinstance(x, Interval):
        return Const(x)
    raise TypeError(f"cannot use {type(x)!r} in an expression")


class Var(Expr):
    def __init__(self, index: int):
        self.index = index

    def ev(self, env):
        return env[self.index]

    def make_state(self, env):
        return _VarState(env[self.index])

    def __repr__(self):
        return f"x{self.index}"


class Const(Expr):
    def __init__(self, value):
        self.value = value

    def ev(self, env):
        return self.value

    def make_state(self, env):
        return _ConstState(self.value)

    def __repr__(self):
        return repr(self.value)


class _Unary(Expr):
    def __init__(self, a: Expr):
        self.a = a

    def children(self):
        return (self.a,)


class _Binary(Expr):
    def __init__(self, a: Expr, b: Expr):
        self.a = a
        self.b = b

    def children(self):
        return (self.a, self.b)


class Add(_Binary):
    def ev(self, env):
        return self.a.ev(env) + self.b.ev(env)

    def make_state(self, env):
        return _MapState(
            self.a.make_state(env), self.b.make_state(env), lambda x, y: x + y
        )


class Sub(_Binary):
    def ev(self, env):
        return self.a.ev(env) - self.b.ev(env)

    def make_state(self, env):
        return _MapState(
            self.a.make_state(env), self.b.make_state(env), lambda x, y: x - y
        )


class Neg(_Unary):
    def ev(self, env):
        return -self.a.ev(env)

    def make_state(self, env):
        return _NegState(self.a.make_state(env))


class Mul(_Binary):
    def ev(self, env):
        return self.a.ev(env) * self.b.ev(env)

    def make_state(self, env):
        return _MulState(self.a.make_state(env), self.b.make_state(env))


class Div(_Binary):
    def ev(self, env):
        return self.a.ev(env) / self.b.ev(env)

    def make_state(self, env):
        return _DivState(self.a.make_state(env), self.b.make_state(env))


class Pow(_Unary):
    """Power with a constant real exponent.

    Integer exponents are evaluated by repeated multiplication (any sign of
    the base); non-integer exponents via exp(e*log(base)), which requires the
    base to stay strictly positive.
    """

    def __init__(self, a: Expr, exponent):
        super().__init__(a)
        self.exponent = float(exponent)
        self.is_int = float(exponent).is_integer()

    def ev(self, env):
        base = self.a.ev(env)
        if isinstance(base, Interval):
            return ipower(base, self.exponent)
        if self.is_int:
            return base ** int(self.exponent)
        from .series import Grad

        if isinstance(base, Grad):
            return sc_exp(sc_log(base) * self.exponent)
        return base ** self.exponent

    def make_state(self, env):
        st = self.a.make_state(env)
        if self.is_int:
            return _IntPowState(st, int(self.exponent))
        return _ExpState(_ScaleState(_LogState(st), self.exponent))


class Sin(_Unary):
    def ev(self, env):
        return sc_sin(self.a.ev(env))

    def make_state(self, env):
        return _SinCosState(self.a.make_state(env), want_sin=True)


class Cos(_Unary):
    def ev(self, env):
        return sc_cos(self.a.ev(env))

    def make_state(self, env):
        return _SinCosState(self.a.make_state(env), want_sin=False)


class ExpF(_Unary):
    def ev(self, env):
        return sc_exp(self.a.ev(env))

    def make_state(self, env):
        return _ExpState(self.a.make_state(env))


class LogF(_Unary):
    def ev(self, env):
        return sc_log(self.a.ev(env))

    def make_state(self, env):
        return _LogState(self.a.make_state(env))


class SqrtF(_Unary):
    def ev(self, env):
        return sc_sqrt(self.a.ev(env))

    def make_state(self, env):
        return _ExpState(_ScaleState(_LogState(self.a.make_state(env)), 0.5))


# -- incremental series-evaluation states -------------------------------------


class _VarState:
    __slots__ = ("out",)

    def __init__(self, series):
        self.out = series  # alias: the input list may grow externally

    def extend(self, k):
        if len(self.out) <= k:
            raise IntervalError("input series shorter than requested order")


class _ConstState:
    __slots__ = ("out", "value")

    def __init__(self, value):
        self.value = value
        self.out = []

    def extend(self, k):
        while len(self.out) <= k:
            self.out.append(self.value if not self.out else 0.0)


class _MapState:
    __slots__ = ("sa", "sb", "fn", "out")

    def __init__(self, sa, sb, fn):
        self.sa = sa
        self.sb = sb
        self.fn = fn
        self.out = []

    def extend(self, k):
        self.sa.extend(k)
        self.sb.extend(k)
        while len(self.out) <= k:
            i = len(self.out)
            self.out.append(self.fn(self.sa.out[i], self.sb.out[i]))


class _NegState:
    __slots__ = ("sa", "out")

    def __init__(self, sa):
        self.sa = sa
        self.out = []

    def extend(self, k):
        self.sa.extend(k)
        while len(self.out) <= k:
            self.out.append(-self.sa.out[len(self.out)])


class _MulState:
    __slots__ = ("sa", "sb", "out")

    def __init__(self, sa, sb):
        self.sa = sa
        self.sb = sb
        self.out = []

    def extend(self, k):
        self.sa.extend(k)
        self.sb.extend(k)
        while len(self.out) <= k:
            i = len(self.out)
            self.out.append(conv_coeff(self.sa.out, self.sb.out, i))


class _DivState:
    __slots__ = ("sa", "sb", "out")

    def __init__(self, sa, sb):
        self.sa = sa
        self.sb = sb
        self.out = []

    def extend(self, k):
        self.sa.extend(k)
        self.sb.extend(k)
        while len(self.out) <= k:
            i = len(self.out)
            self.out.append(div_coeff(self.sa.out, self.sb.out, self.out, i))


class _ExpState:
    __slots__ = ("sa", "out")

    def __init__(self, sa):
        self.sa = sa
        self.out = []

    def extend(self, k):
        self.sa.extend(k)
        while len(self.out) <= k:
            self.out.append(exp_coeff(self.sa.out, self.out, len(self.out)))


class _LogState:
    __slots__ = ("sa", "out")

    def __init__(self, sa):
        self.sa = sa
        self.out = []

    def extend(self, k):
        self.sa.extend(k)
        while len(self.out) <= k:
            self.out.append(log_coeff(self.sa.out, self.out, len(self.out)))


class _ScaleState:
    __slots__ = ("sa", "c", "out")

    def __init__(self, sa, c):
        self.sa = sa
        self.c = c
        self.out = []

    def extend(self, k):
        self.sa.extend(k)
        while len(self.out) <= k:
            self.out.append(self.sa.out[len(self.out)] * self.c)


class _SinCosState:
    __slots__ = ("sa", "souts", "couts", "want_sin", "out")

    def __init__(self, sa, want_sin):
        self.sa = sa
        self.souts = []
        self.couts = []
        self.want_sin = want_sin
        self.out = self.souts if want_sin else self.couts

    def extend(self, k):
        self.sa.extend(k)
        while len(self.souts) <= k:
            s, c = sincos_coeff(self.sa.out, self.souts, self.couts, len(self.souts))
            self.souts.append(s)
            self.couts.append(c)


class _IntPowState:
    """Integer power by repeated squaring on series states."""

    __slots__ = ("inner", "out")

    def __init__(self, sa, k):
        if k < 0:
            st = _IntPowState(sa, -k)
            self.inner = _DivState(_ConstState(1.0), st)
        elif k == 0:
            self.inner = _ConstState(1.0)
        elif k == 1:
            self.inner = sa
        else:
            half = _IntPowState(sa, k // 2)
            sq = _MulState(half, half)
            self.inner = _MulState(sq, sa) if k % 2 else sq
        self.out = self.inner.out

    def extend(self, k):
        self.inner.extend(k)


# -- the vector field ---------------------------------------------------------


class Rhs:
    """A d-dimensional vector field over the current value and m delayed
    values; ``delays`` holds the tau_i in the same order as the variable
    blocks."""

    def __init__(self, exprs, d: int, delays):
        exprs = list(exprs)
        if len(exprs) != d:
            raise ValueError("need one expression per component")
        self.exprs = exprs
        self.d = d
        self.delays = [float(t) for t in delays]
        self.m = len(self.delays)

    @property
    def ninputs(self) -> int:
        return (self.m + 1) * self.d

    def var(self, arg: int, comp: int = 0) -> Var:
        return Var(arg * self.d + comp)

    def ev(self, env):
        """Evaluate component-wise on a flat list of scalar inputs."""
        return [e.ev(env) for e in self.exprs]

    def make_states(self, env_series):
        return [e.make_state(env_series) for e in self.exprs]


def jet_compose(f, args_series, order: int):
    """Evaluate expression(s) in truncated-series arithmetic.

    ``f`` is an Expr or a list of Expr; ``args_series`` a list of coefficient
    lists (one per scalar input), each of length > order.  Returns the
    composed series (or list of series), semantically the order-`order` jet
    of f along the given jets.
    """
    single = isinstance(f, Expr)
    exprs = [f] if single else list(f)
    states = [e.make_state(args_series) for e in exprs]
    for st in states:
        st.extend(order)
    outs = [st.out[: order + 1] for st in states]
    return outs[0] if single else outs


# -- text format --------------------------------------------------------------

_OPS1 = {"neg": Neg, "sin": Sin, "cos": Cos, "exp": ExpF, "log": LogF, "sqrt": SqrtF}
_OPS2 = {"add": Add, "sub": Sub, "mul": Mul, "div": Div}

_TOK = re.compile(r"\s*(\(|\)|[^()\s]+)")


def parse_expr(text: str, params=None) -> Expr:
    """Parse the prefix text form of an expression."""
    params = params or {}
    tokens = []
    pos = 0
    while pos < len(text):
        mt = _TOK.match(text, pos)
        if not mt:
            break
        tokens.append(mt.group(1))
        pos = mt.end()

    def atom(tok):
        if re.fullmatch(r"x\d+", tok):
            return Var(int(tok[1:]))
        if tok in params:
            return _as_expr(params[tok])
        try:
            return Const(float(tok))
        except ValueError:
            raise ValueError(f"unknown token {tok!r}") from None

    def parse(i):
        tok = tokens[i]
        if tok != "(":
            return atom(tok), i + 1
        op = tokens[i + 1]
        args = []
        i += 2
        while tokens[i] != ")":
            node, i = parse(i)
            args.append(node)
        i += 1
        if op == "pow":
            if len(args) != 2 or not isinstance(args[1], Const):
                raise ValueError("pow needs (pow <expr> <constant-exponent>)")
            expo = args[1].value
            expo = expo.mid() if isinstance(expo, Interval) else expo
            return Pow(args[0], expo), i
        if op in _OPS1:
            if len(args) != 1:
                raise ValueError(f"{op} is unary")
            return _OPS1[op](args[0]), i
        if op in _OPS2:
            if len(args) < 2:
                raise ValueError(f"{op} needs two operands")
            node = args[0]
            for extra in args[1:]:
                node = _OPS2[op](node, extra)
            return node, i
        raise ValueError(f"unknown operator {op!r}")

    node, i = parse(0)
    if i != len(tokens):
        raise ValueError("trailing tokens in expression")
    return node
