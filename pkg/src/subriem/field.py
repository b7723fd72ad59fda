"""Polynomial vector fields and control-system frames."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .poly import Poly, Rational


class SymField:
    """A vector field whose components are exact polynomials.

    components[j] is the coefficient of d/dx_j.
    """

    __slots__ = ("nvars", "components")

    def __init__(self, components: Sequence[Poly]):
        comps = tuple(components)
        if not comps:
            raise ValueError("a vector field needs at least one component")
        nvars = comps[0].nvars
        if len(comps) != nvars:
            raise ValueError(
                f"field has {len(comps)} components but polynomials use {nvars} variables"
            )
        for c in comps:
            if c.nvars != nvars:
                raise ValueError("components disagree on the variable count")
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "components", comps)

    def __setattr__(self, name, value):  # pragma: no cover - guard rail
        raise AttributeError("SymField is immutable")

    @staticmethod
    def zero(nvars: int) -> "SymField":
        return SymField([Poly.zero(nvars)] * nvars)

    @staticmethod
    def coordinate(nvars: int, index: int) -> "SymField":
        """The constant field d/dx_index."""
        comps = [Poly.zero(nvars)] * nvars
        comps[index] = Poly.const(nvars, 1)
        return SymField(comps)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymField):
            return NotImplemented
        return self.components == other.components

    def __hash__(self) -> int:
        return hash(self.components)

    def __add__(self, other: "SymField") -> "SymField":
        if self.nvars != other.nvars:
            raise ValueError("variable count mismatch")
        return SymField([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "SymField") -> "SymField":
        if self.nvars != other.nvars:
            raise ValueError("variable count mismatch")
        return SymField([a - b for a, b in zip(self.components, other.components)])

    def __neg__(self) -> "SymField":
        return SymField([-a for a in self.components])

    def scale(self, factor: Rational) -> "SymField":
        return SymField([c * factor for c in self.components])

    def evaluate(self, point: Sequence[Rational]) -> tuple[Fraction, ...]:
        return tuple(c.evaluate(point) for c in self.components)

    def evaluate_float(self, point: Sequence[float]) -> tuple[float, ...]:
        return tuple(c.evaluate_float(point) for c in self.components)

    def apply_to(self, f: Poly) -> Poly:
        """Lie derivative of the function f along this field."""
        if f.nvars != self.nvars:
            raise ValueError("variable count mismatch")
        out = Poly.zero(self.nvars)
        for j, comp in enumerate(self.components):
            if not comp.is_zero():
                out = out + comp * f.partial_derivative(j)
        return out

    def truncate(self, max_total_degree: int) -> "SymField":
        return SymField([c.truncate(max_total_degree) for c in self.components])

    def max_total_degree(self) -> int:
        return max(c.total_degree() for c in self.components)

    def format(self, var_names: Sequence[str] | None = None) -> str:
        names = var_names or [f"x{i + 1}" for i in range(self.nvars)]
        parts = [
            f"({c.format(names)}) d/d{names[j]}"
            for j, c in enumerate(self.components)
            if not c.is_zero()
        ]
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"SymField({self.format()})"


def lie_bracket(x: SymField, y: SymField) -> SymField:
    """Exact Lie bracket [x, y], componentwise (dY)x - (dX)y."""
    if x.nvars != y.nvars:
        raise ValueError("variable count mismatch")
    n = x.nvars
    comps = []
    for j in range(n):
        acc = Poly.zero(n)
        yj = y.components[j]
        xj = x.components[j]
        for k in range(n):
            xk = x.components[k]
            yk = y.components[k]
            if not xk.is_zero():
                acc = acc + xk * yj.partial_derivative(k)
            if not yk.is_zero():
                acc = acc - yk * xj.partial_derivative(k)
        comps.append(acc)
    return SymField(comps)


@dataclass(frozen=True)
class SystemDef:
    """A nonholonomic control system: m polynomial vector fields on R^n."""

    name: str
    dim: int
    fields: tuple[SymField, ...]
    var_names: tuple[str, ...] = ()
    base_point_default: tuple[Fraction, ...] = ()
    taylor_degree: int = 12
    source_exprs: tuple[tuple[str, tuple[str, ...]], ...] = field(
        default=(), compare=False
    )

    def __post_init__(self):
        if self.nfields < 1:
            raise ValueError("a system needs at least one field")
        for f in self.fields:
            if f.nvars != self.dim:
                raise ValueError("field dimension does not match the system dimension")
        if not self.var_names:
            object.__setattr__(
                self, "var_names", tuple(f"x{i + 1}" for i in range(self.dim))
            )
        if not self.base_point_default:
            object.__setattr__(
                self, "base_point_default", (Fraction(0),) * self.dim
            )
        if len(self.var_names) != self.dim or len(self.base_point_default) != self.dim:
            raise ValueError("variable names and base point must match the dimension")

    @property
    def nfields(self) -> int:
        return len(self.fields)
