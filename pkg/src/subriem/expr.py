"""Small analytic expression trees and exact Taylor truncation to Poly.

Expressions are built from variables, rational constants, sums, products,
integer powers, rational quotients, and sin/cos/exp applied to polynomial
arguments.  Taylor expansion is exact (rational coefficients), which requires
the argument of any sin/cos/exp to vanish at the expansion point; this covers
every trigonometric input used in practice (unicycle-style frames expanded at
a configuration point).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Sequence, Union

from .poly import Poly, Rational


class ExprError(ValueError):
    """Raised for malformed or unsupported analytic expressions."""


@dataclass(frozen=True)
class Expr:
    """Node of an analytic expression tree."""

    kind: str  # "const" | "var" | "add" | "mul" | "pow" | "neg" | "sin" | "cos" | "exp"
    value: Fraction | int | None = None
    children: tuple["Expr", ...] = ()

    # Convenience algebra so fixture definitions stay readable.
    def __add__(self, other: "ExprLike") -> "Expr":
        return Expr("add", children=(self, as_expr(other)))

    __radd__ = __add__

    def __mul__(self, other: "ExprLike") -> "Expr":
        return Expr("mul", children=(self, as_expr(other)))

    __rmul__ = __mul__

    def __neg__(self) -> "Expr":
        return Expr("neg", children=(self,))

    def __sub__(self, other: "ExprLike") -> "Expr":
        return self + (-as_expr(other))

    def __rsub__(self, other: "ExprLike") -> "Expr":
        return as_expr(other) + (-self)

    def __pow__(self, n: int) -> "Expr":
        if not isinstance(n, int) or n < 0:
            raise ExprError("powers must be nonnegative integers")
        return Expr("pow", value=n, children=(self,))


ExprLike = Union[Expr, int, Fraction]


def as_expr(value: ExprLike) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return const(value)
    raise ExprError(f"cannot interpret {value!r} as an expression")


def const(value: Rational) -> Expr:
    return Expr("const", value=Fraction(value))


def var(index: int) -> Expr:
    return Expr("var", value=index)


def sin(arg: ExprLike) -> Expr:
    return Expr("sin", children=(as_expr(arg),))


def cos(arg: ExprLike) -> Expr:
    return Expr("cos", children=(as_expr(arg),))


def exp(arg: ExprLike) -> Expr:
    return Expr("exp", children=(as_expr(arg),))


def _series(kind: str, arg: Poly, degree: int) -> Poly:
    """Exact truncated series of sin/cos/exp of a polynomial vanishing at 0."""
    if arg.constant_term() != 0:
        raise ExprError(
            f"{kind} argument must vanish at the expansion point; exact rational "
            "Taylor coefficients are otherwise unavailable"
        )
    n = arg.nvars
    out = Poly.zero(n)
    power = Poly.const(n, 1)
    for k in range(degree + 1):
        if kind == "exp":
            coeff: Fraction | int = Fraction(1, factorial(k))
        elif kind == "sin":
            coeff = Fraction((-1) ** ((k - 1) // 2), factorial(k)) if k % 2 == 1 else 0
        else:  # cos
            coeff = Fraction((-1) ** (k // 2), factorial(k)) if k % 2 == 0 else 0
        if coeff:
            out = out + power * coeff
        if k < degree:
            power = (power * arg).truncate(degree)
            if power.is_zero():
                break
    return out


def taylor_truncate(expr: Expr, base: Sequence[Rational], degree: int) -> Poly:
    """Taylor expansion of expr around base, truncated at total degree.

    The result is a polynomial in variables shifted so that the expansion
    point is the origin.  It is exact (no floating point) and equals the
    input whenever the input is already a polynomial of degree <= degree.
    """
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    n = len(base)
    shift = [Fraction(b) for b in base]

    def rec(node: Expr) -> Poly:
        if node.kind == "const":
            return Poly.const(n, node.value)
        if node.kind == "var":
            i = node.value
            if not 0 <= i < n:
                raise ExprError(f"variable index {i} out of range for base of length {n}")
            # Original variable expressed in shifted coordinates.
            return Poly.variable(n, i) + Poly.const(n, shift[i])
        if node.kind == "add":
            return rec(node.children[0]) + rec(node.children[1])
        if node.kind == "mul":
            a = rec(node.children[0])
            b = rec(node.children[1])
            return (a * b).truncate(degree)
        if node.kind == "neg":
            return -rec(node.children[0])
        if node.kind == "pow":
            base_poly = rec(node.children[0])
            out = Poly.const(n, 1)
            for _ in range(node.value):
                out = (out * base_poly).truncate(degree)
            return out
        if node.kind in ("sin", "cos", "exp"):
            arg = rec(node.children[0])
            return _series(node.kind, arg.truncate(degree), degree)
        raise ExprError(f"unsupported expression node kind {node.kind!r}")

    return rec(expr).truncate(degree)


def taylor_truncate_unshifted(expr: Expr, base: Sequence[Rational], degree: int) -> Poly:
    """Like taylor_truncate but returns a polynomial in the original variables."""
    shifted = taylor_truncate(expr, base, degree)
    n = shifted.nvars
    subs = [Poly.variable(n, i) - Poly.const(n, Fraction(base[i])) for i in range(n)]
    return shifted.compose(subs)
