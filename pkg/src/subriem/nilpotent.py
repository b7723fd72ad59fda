"""Homogeneous decomposition, nilpotent approximation, exact triangular integration.

In privileged coordinates every frame field splits into homogeneous parts of
weighted degree -1, 0, 1, ...; keeping only the degree -1 parts yields a
triangular polynomial system whose trajectories are computed coordinate by
coordinate with closed-form polynomial antiderivatives, with no integration
truncation error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Sequence

import numpy as np

from .charts import PrivilegedChart, pushforward
from .control import ControlSignal, Trajectory
from .field import SymField, SystemDef, lie_bracket
from .liealgebra import BracketTable, flag_at, iter_bracket_indices
from .poly import Poly, Rational


class NotPrivileged(Exception):
    """A frame field has a term of weighted degree below -1 in the chart."""


@dataclass(frozen=True)
class HomogeneousField:
    """A field all of whose monomials share one weighted degree."""

    degree: int
    field: SymField


def homogeneous_components(
    field: SymField, chart: PrivilegedChart, max_degree: int | None = None
) -> list[HomogeneousField]:
    """Split a chart-coordinates field by weighted degree, ascending.

    The parts sum back to the field (up to the optional degree cutoff).
    """
    weights = chart.weights
    buckets: dict[int, dict] = {}
    for j, comp in enumerate(field.components):
        wj = weights[j]
        for exps, coeff in comp.terms():
            deg = sum(w * e for w, e in zip(weights, exps)) - wj
            if max_degree is not None and deg > max_degree:
                continue
            buckets.setdefault(deg, {}).setdefault(j, {})[exps] = coeff
    out = []
    n = field.nvars
    for deg in sorted(buckets):
        comps = [
            Poly(n, buckets[deg].get(j, {})) for j in range(n)
        ]
        out.append(HomogeneousField(degree=deg, field=SymField(comps)))
    return out


@dataclass(frozen=True)
class NilpotentSystem:
    """Degree -1 truncations of the frame in a privileged chart."""

    fields: tuple[SymField, ...]
    weights: tuple[int, ...]
    step: int
    chart: PrivilegedChart

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def nfields(self) -> int:
        return len(self.fields)

    def expected_growth(self) -> tuple[int, ...]:
        return tuple(
            sum(1 for w in self.weights if w <= s) for s in range(1, self.step + 1)
        )

    def to_system(self, name: str = "nilpotent") -> SystemDef:
        """Expose the truncated frame as a standalone control system at 0."""
        return SystemDef(
            name=name,
            dim=self.dim,
            fields=self.fields,
            var_names=tuple(f"z{i + 1}" for i in range(self.dim)),
            taylor_degree=self.chart.taylor_degree,
        )


def nilpotent_approximation(sys: SystemDef, chart: PrivilegedChart) -> NilpotentSystem:
    """Keep the weighted-degree -1 part of each frame field in the chart.

    Raises NotPrivileged when any field has a term of degree below -1, which
    signals a chart that is merely adapted.
    """
    weights = chart.weights
    truncated = []
    for i, field in enumerate(sys.fields):
        in_chart = pushforward(field, chart)
        parts = homogeneous_components(in_chart, chart)
        for part in parts:
            if part.degree < -1 and not part.field.is_zero():
                raise NotPrivileged(
                    f"field {i + 1} has a component of weighted degree {part.degree}"
                )
        minus_one = next(
            (p.field for p in parts if p.degree == -1), SymField.zero(sys.dim)
        )
        _assert_triangular(minus_one, weights, i)
        truncated.append(minus_one)
    return NilpotentSystem(
        fields=tuple(truncated),
        weights=weights,
        step=max(weights),
        chart=chart,
    )


def _assert_triangular(field: SymField, weights: Sequence[int], field_index: int):
    for j, comp in enumerate(field.components):
        for exps, _ in comp.terms():
            wd = sum(w * e for w, e in zip(weights, exps))
            if wd != weights[j] - 1:
                raise NotPrivileged(
                    f"field {field_index + 1}, component {j + 1}: monomial {exps} "
                    f"has weighted degree {wd}, expected {weights[j] - 1}"
                )
            if any(e > 0 and weights[k] >= weights[j] for k, e in enumerate(exps)):
                raise NotPrivileged(
                    f"field {field_index + 1}, component {j + 1} depends on a "
                    "variable of equal or higher weight"
                )


@dataclass(frozen=True)
class NilpotencyReport:
    step: int
    checked_up_to: int
    vanishing_ok: bool
    offending_bracket: tuple[int, ...] | None
    growth_at_zero: tuple[int, ...]
    growth_expected: tuple[int, ...]

    @property
    def passed(self) -> bool:
        return self.vanishing_ok and self.growth_at_zero == self.growth_expected

    def describe(self) -> str:
        if self.passed:
            return (
                f"nilpotent of step {self.step}: brackets of length "
                f"{self.step + 1}..{self.checked_up_to} vanish, growth at 0 "
                f"{self.growth_at_zero} matches"
            )
        if not self.vanishing_ok:
            return f"bracket {self.offending_bracket} of length > step is nonzero"
        return (
            f"growth at 0 {self.growth_at_zero} != expected {self.growth_expected}"
        )


def verify_nilpotency(
    nil: NilpotentSystem, length_cap: int | None = None
) -> NilpotencyReport:
    """Exact check that long brackets vanish and the flag at 0 is preserved."""
    cap = length_cap if length_cap is not None else nil.step + 2
    table = BracketTable(nil.fields)
    offending = None
    ok = True
    for index in iter_bracket_indices(nil.nfields, cap):
        if len(index) <= nil.step:
            continue
        if not table.get(index).is_zero():
            ok = False
            offending = index
            break
    zero = (Fraction(0),) * nil.dim
    growth = flag_at(nil.to_system(), zero, depth_cap=nil.step).growth_vector
    return NilpotencyReport(
        step=nil.step,
        checked_up_to=cap,
        vanishing_ok=ok,
        offending_bracket=offending,
        growth_at_zero=growth,
        growth_expected=nil.expected_growth(),
    )


# -- exact triangular integration --------------------------------------------
#
# Univariate polynomials in the segment time are plain coefficient lists
# (index = power).  Coefficients are Fractions when the inputs are exact and
# floats otherwise; the algebra is identical.


def _uni_add(a: list, b: list) -> list:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = out[i] + c
    return out


def _uni_mul(a: list, b: list) -> list:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca == 0:
            continue
        for j, cb in enumerate(b):
            if cb != 0:
                out[i + j] = out[i + j] + ca * cb
    return out


def _uni_eval(a: list, t):
    acc = 0
    for c in reversed(a):
        acc = acc * t + c
    return acc


def _uni_integrate(a: list) -> list:
    return [0] + [c / (k + 1) if isinstance(c, float) else Fraction(c, 1) / (k + 1)
                  for k, c in enumerate(a)]


def _compose_poly_univariate(p: Poly, coords: list[list]) -> list:
    """Evaluate a multivariate Poly at univariate-polynomial coordinates."""
    out: list = []
    for exps, coeff in p.terms():
        term = [coeff]
        for i, e in enumerate(exps):
            for _ in range(e):
                term = _uni_mul(term, coords[i])
        out = _uni_add(out, term)
    return out


def _integrate_triangular_generic(
    nil: NilpotentSystem,
    durations: Sequence,
    values: Sequence[Sequence],
    x0: Sequence,
    samples_per_segment: int,
):
    n = nil.dim
    order = sorted(range(n), key=lambda j: nil.weights[j])
    state = list(x0)
    times = [0.0]
    states = [list(state)]
    t0 = 0.0
    for dur, u in zip(durations, values):
        coords: list[list] = [[state[j]] for j in range(n)]
        for j in order:
            rhs: list = []
            for i in range(nil.nfields):
                ui = u[i]
                if ui == 0:
                    continue
                fij = nil.fields[i].components[j]
                if fij.is_zero():
                    continue
                contrib = _compose_poly_univariate(fij, coords)
                rhs = _uni_add(rhs, [ui * c for c in contrib])
            zj = _uni_integrate(rhs)
            zj = _uni_add(zj, [state[j]])
            coords[j] = zj
        for k in range(1, samples_per_segment + 1):
            s = dur * Fraction(k, samples_per_segment) if isinstance(
                dur, Fraction
            ) else dur * (k / samples_per_segment)
            times.append(float(t0) + float(s))
            states.append([_uni_eval(coords[j], s) for j in range(n)])
        state = [_uni_eval(coords[j], dur) for j in range(n)]
        states[-1] = list(state)
        t0 = float(t0) + float(dur)
    return times, states, state


def integrate_triangular(
    nil: NilpotentSystem,
    control: ControlSignal,
    x0: Sequence[float],
    samples_per_segment: int = 8,
) -> Trajectory:
    """Sequential closed-form integration of the triangular system.

    Each coordinate is obtained by polynomial quadrature in the segment time;
    the only numerical error is float rounding in the coefficients.
    """
    if control.nsegments == 0:
        x = np.asarray(x0, dtype=float)
        return Trajectory(np.array([0.0]), x[None, :].copy(), control, 0.0)
    times, states, _ = _integrate_triangular_generic(
        nil,
        [float(d) for d in control.durations],
        [tuple(float(v) for v in row) for row in control.values],
        [float(v) for v in x0],
        samples_per_segment,
    )
    return Trajectory(
        times=np.array(times),
        states=np.array(states, dtype=float),
        control=control,
        length=control.l1_cost(),
    )


def integrate_triangular_exact(
    nil: NilpotentSystem,
    durations: Sequence[Rational],
    values: Sequence[Sequence[Rational]],
    x0: Sequence[Rational],
) -> tuple[Fraction, ...]:
    """Exact rational endpoint for rational controls and start point."""
    _, _, state = _integrate_triangular_generic(
        nil,
        [Fraction(d) for d in durations],
        [tuple(Fraction(v) for v in row) for row in values],
        [Fraction(v) for v in x0],
        samples_per_segment=1,
    )
    return tuple(Fraction(v) for v in state)


# -- dilations ----------------------------------------------------------------


def dilate(z: Sequence[float], t: float, weights: Sequence[int]) -> tuple:
    """Anisotropic dilation (z_j) -> (t^{w_j} z_j); exact on rational input."""
    if t < 0:
        raise ValueError("point dilations require t >= 0")
    if isinstance(t, (int, Fraction)) and all(
        isinstance(v, (int, Fraction)) for v in z
    ):
        return tuple(Fraction(v) * Fraction(t) ** w for v, w in zip(z, weights))
    return tuple(float(v) * float(t) ** w for v, w in zip(z, weights))


def dilate_field(field: SymField, t: Rational, weights: Sequence[int]) -> SymField:
    """Pull-back of a field under the dilation, exactly.

    The result has components t^{-w_j} X_j(t^{w_1} z_1, ..., t^{w_n} z_n);
    a field is homogeneous of degree s exactly when this equals t^s X.
    """
    tq = Fraction(t)
    if tq == 0:
        raise ValueError("field dilations require t != 0")
    n = field.nvars
    subs = [Poly.variable(n, i) * tq ** weights[i] for i in range(n)]
    return SymField(
        [
            comp.compose(subs) * tq ** (-weights[j])
            for j, comp in enumerate(field.components)
        ]
    )
