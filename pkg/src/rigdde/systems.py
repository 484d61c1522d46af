"""The delay equations used throughout the examples, tests and proofs.

Mackey-Glass: x'(t) = -gamma*x(t) + beta*x(t-tau) / (1 + x(t-tau)^q).
A time rescaling y(t) = x(tau*t) turns any delay into 1 while multiplying
both coefficients by tau, so proofs can run on a unit-delay grid.

Delayed Rossler: the classic three-dimensional system x' = -y - z,
y' = x + a*y, z' = b + z*(x - c) with a small delayed forcing
eps * g(v(t-1)), where g is zero, the vector field itself, or a bounded
trigonometric coupling (sin(x*y), sin(y*z), sin(x*z)).
"""

from __future__ import annotations

from .expr import Rhs, parse_expr


def mackey_glass(
    beta: float = 2.0, gamma: float = 1.0, q: float = 8.0, tau: float = 2.0
) -> Rhs:
    """x' = -gamma*x + beta*x_tau/(1 + x_tau^q); q may be non-integer
    (positive delayed state required in that case)."""
    expr = parse_expr(
        "(add (neg (mul gamma x0)) (div (mul beta x1) (add 1 (pow x1 q))))",
        {"beta": beta, "gamma": gamma, "q": q},
    )
    return Rhs([expr], d=1, delays=[tau])


def mackey_glass_unit_delay(
    beta: float = 2.0, gamma: float = 1.0, q: float = 8.0, tau: float = 2.0
) -> Rhs:
    """The same dynamics after rescaling time by tau: delay 1, coefficients
    tau*beta and tau*gamma."""
    return mackey_glass(tau * beta, tau * gamma, q, 1.0)


ROSSLER_PERTURBATIONS = ("zero", "f", "sin")


def rossler_delayed(
    perturbation: str = "zero",
    eps: float = 1e-3,
    a: float = 0.2,
    b: float = 0.2,
    c: float = 5.7,
) -> Rhs:
    """Rossler system with a delayed perturbation eps*g(v(t-1)).

    perturbation: 'zero' (plain ODE on the delay grid), 'f' (the vector
    field evaluated at the delayed state), or 'sin' (bounded coupling).
    """
    params = {"a": a, "b": b, "c": c, "eps": eps}
    base = [
        "(add (neg x1) (neg x2))",
        "(add x0 (mul a x1))",
        "(add b (mul x2 (sub x0 c)))",
    ]
    if perturbation == "zero":
        g = ["0", "0", "0"]
    elif perturbation == "f":
        g = [
            "(add (neg x4) (neg x5))",
            "(add x3 (mul a x4))",
            "(add b (mul x5 (sub x3 c)))",
        ]
    elif perturbation == "sin":
        g = [
            "(sin (mul x3 x4))",
            "(sin (mul x4 x5))",
            "(sin (mul x3 x5))",
        ]
    else:
        raise ValueError(f"unknown perturbation {perturbation!r}")
    exprs = [
        parse_expr(f"(add {bexpr} (mul eps {gexpr}))", params)
        for bexpr, gexpr in zip(base, g)
    ]
    return Rhs(exprs, d=3, delays=[1.0])
