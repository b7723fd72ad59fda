"""Privileged coordinates: construction, verification and order calculus.

Two constructors are provided.  The algebraic one (triangular polynomial
correction of linearly adapted coordinates) is exact over the rationals and
is the default everywhere downstream.  The canonical-second-kind one composes
numeric flows of the adapted frame and exists to cross-validate the algebraic
pipeline.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .field import SymField, SystemDef
from .integrate import flow_point
from .liealgebra import BracketIndex, BracketTable, Flag
from .linalg import rational_matrix_inverse, rational_matvec
from .poly import Poly, Rational, iter_multi_indices


def pseudo_norm(z: Sequence[float], weights: Sequence[int]) -> float:
    """Anisotropic gauge |z_1|^(1/w_1) + ... + |z_n|^(1/w_n)."""
    return float(sum(abs(float(x)) ** (1.0 / w) for x, w in zip(z, weights)))


@dataclass(frozen=True)
class AffineChange:
    """Exact affine coordinate change y = A^{-1} (x - center)."""

    center: tuple[Fraction, ...]
    matrix: tuple[tuple[Fraction, ...], ...]  # columns are frame values at center
    inverse: tuple[tuple[Fraction, ...], ...]

    def to_y(self, x: Sequence[Rational]) -> tuple[Fraction, ...]:
        delta = [Fraction(a) - c for a, c in zip(x, self.center)]
        return tuple(rational_matvec(self.inverse, delta))

    def from_y(self, y: Sequence[Rational]) -> tuple[Fraction, ...]:
        ay = rational_matvec(self.matrix, [Fraction(v) for v in y])
        return tuple(c + v for c, v in zip(self.center, ay))

    def is_identity(self) -> bool:
        n = len(self.center)
        eye = all(
            self.matrix[i][j] == (1 if i == j else 0)
            for i in range(n)
            for j in range(n)
        )
        return eye and all(c == 0 for c in self.center)


def linear_adapted_change(sys: SystemDef, flag: Flag) -> AffineChange:
    """Affine map sending the center to 0 with d/dy_i|_0 = frame value i."""
    table = BracketTable(sys.fields)
    cols = [table.get(i).evaluate(flag.point) for i in flag.adapted_frame]
    n = sys.dim
    matrix = tuple(tuple(cols[j][i] for j in range(n)) for i in range(n))
    inverse = tuple(tuple(r) for r in rational_matrix_inverse(matrix))
    return AffineChange(center=flag.point, matrix=matrix, inverse=inverse)


def _field_through_affine(field: SymField, change: AffineChange) -> SymField:
    """Field components rewritten in y coordinates (exact)."""
    n = field.nvars
    subs = [
        Poly.const(n, change.center[i])
        + sum(
            (Poly.variable(n, j) * change.matrix[i][j] for j in range(n)),
            Poly.zero(n),
        )
        for i in range(n)
    ]
    composed = [c.compose(subs) for c in field.components]
    comps = []
    for i in range(n):
        acc = Poly.zero(n)
        for j in range(n):
            if change.inverse[i][j] != 0:
                acc = acc + composed[j] * change.inverse[i][j]
        comps.append(acc)
    return SymField(comps)


@dataclass(frozen=True)
class PrivilegedChart:
    """Polynomial triangular coordinate change centered at a point.

    The full map is x -> y = A^{-1}(x - center) -> z = forward(y), where
    forward is triangular with identity linear part.  backward is its
    polynomial inverse, exact up to taylor_degree.
    """

    center: tuple[Fraction, ...]
    weights: tuple[int, ...]
    frame_used: tuple[BracketIndex, ...]
    affine: AffineChange
    forward: tuple[Poly, ...]  # z as polynomials in y
    backward: tuple[Poly, ...]  # y as polynomials in z
    taylor_degree: int

    @property
    def dim(self) -> int:
        return len(self.weights)

    # -- point transport ---------------------------------------------------

    def to_chart(self, x: Sequence[Rational]) -> tuple[Fraction, ...]:
        y = self.affine.to_y(x)
        return tuple(f.evaluate(y) for f in self.forward)

    def from_chart(self, z: Sequence[Rational]) -> tuple[Fraction, ...]:
        y = tuple(f.evaluate(z) for f in self.backward)
        return self.affine.from_y(y)

    def to_chart_float(self, x: Sequence[float]) -> np.ndarray:
        inv = np.array([[float(v) for v in row] for row in self.affine.inverse])
        c = np.array([float(v) for v in self.center])
        y = inv @ (np.asarray(x, dtype=float) - c)
        return np.array([f.evaluate_float(y) for f in self.forward])

    def from_chart_float(self, z: Sequence[float]) -> np.ndarray:
        mat = np.array([[float(v) for v in row] for row in self.affine.matrix])
        c = np.array([float(v) for v in self.center])
        y = np.array([f.evaluate_float(np.asarray(z, dtype=float)) for f in self.backward])
        return c + mat @ y

    # -- function and field transport ---------------------------------------

    def z_in_original(self, j: int) -> Poly:
        """Coordinate z_j as a polynomial in the original variables."""
        n = self.dim
        subs = [
            sum(
                (
                    (Poly.variable(n, k) - Poly.const(n, self.center[k]))
                    * self.affine.inverse[i][k]
                    for k in range(n)
                ),
                Poly.zero(n),
            )
            for i in range(n)
        ]
        return self.forward[j].compose(subs, max_degree=self.taylor_degree)

    def function_to_chart(self, f: Poly) -> Poly:
        """f given in original coordinates, rewritten as a polynomial in z."""
        n = self.dim
        # x = center + A * backward(z)
        x_of_z = []
        for i in range(n):
            acc = Poly.const(n, self.center[i])
            for j in range(n):
                if self.affine.matrix[i][j] != 0:
                    acc = acc + self.backward[j] * self.affine.matrix[i][j]
            x_of_z.append(acc)
        return f.compose(x_of_z, max_degree=self.taylor_degree)

    def pseudo_norm_at(self, x: Sequence[float]) -> float:
        return pseudo_norm(self.to_chart_float(x), self.weights)


def identity_chart(
    center: Sequence[Rational],
    weights: Sequence[int],
    taylor_degree: int = 12,
    frame_used: tuple[BracketIndex, ...] | None = None,
) -> PrivilegedChart:
    """Chart that keeps the given coordinates (shifted to the center)."""
    n = len(weights)
    eye = tuple(
        tuple(Fraction(1) if i == j else Fraction(0) for j in range(n))
        for i in range(n)
    )
    coords = tuple(Poly.variable(n, i) for i in range(n))
    return PrivilegedChart(
        center=tuple(Fraction(c) for c in center),
        weights=tuple(weights),
        frame_used=frame_used or tuple((i + 1,) for i in range(n)),
        affine=AffineChange(tuple(Fraction(c) for c in center), eye, eye),
        forward=coords,
        backward=coords,
        taylor_degree=taylor_degree,
    )


def _apply_multi(fields: Sequence[SymField], alpha: Sequence[int], f: Poly) -> Poly:
    """Ordered Lie-derivative monomial Y_1^a1 ... Y_k^ak applied to f."""
    out = f
    for i in range(len(alpha) - 1, -1, -1):
        for _ in range(alpha[i]):
            out = fields[i].apply_to(out)
    return out


def algebraic_privileged_coords(sys: SystemDef, flag: Flag) -> PrivilegedChart:
    """Triangular polynomial privileged coordinates from the adapted frame.

    Starting from linearly adapted coordinates y, each z_j subtracts the
    polynomial correction whose coefficients are ordered frame derivatives of
    the partially corrected coordinate, evaluated at the center.  The
    correction for z_j only involves y_1..y_{j-1}, so the change and its
    inverse are triangular.
    """
    n = sys.dim
    change = linear_adapted_change(sys, flag)
    table = BracketTable(sys.fields)
    frame_fields = [
        _field_through_affine(table.get(i), change) for i in flag.adapted_frame
    ]
    weights = flag.weights
    origin = (Fraction(0),) * n

    forward: list[Poly] = []
    for j in range(n):
        corrected = Poly.variable(n, j)
        for k in range(2, weights[j]):
            h_k = Poly.zero(n)
            for alpha in _alphas_fixed_degree(j, weights, k, weights[j]):
                coeff = _apply_multi(frame_fields[:j], alpha, corrected).evaluate(
                    origin
                )
                if coeff == 0:
                    continue
                denom = 1
                mono = [0] * n
                for i, a in enumerate(alpha):
                    mono[i] = a
                    denom *= math.factorial(a)
                h_k = h_k + Poly.monomial(mono, Fraction(coeff, denom))
            corrected = corrected - h_k
        forward.append(corrected)

    backward = _invert_triangular(forward, sys.taylor_degree)
    return PrivilegedChart(
        center=flag.point,
        weights=weights,
        frame_used=flag.adapted_frame,
        affine=change,
        forward=tuple(forward),
        backward=tuple(backward),
        taylor_degree=sys.taylor_degree,
    )


def _alphas_fixed_degree(
    nvars_used: int, weights: Sequence[int], total: int, wbound: int
):
    """Multi-indices over the first nvars_used variables with |a| = total, w(a) < wbound."""
    if nvars_used == 0:
        return
    for combo in itertools.product(range(total + 1), repeat=nvars_used):
        if sum(combo) != total:
            continue
        if sum(w * a for w, a in zip(weights, combo)) < wbound:
            yield combo


def _invert_triangular(forward: Sequence[Poly], max_degree: int) -> list[Poly]:
    """Invert z_j = y_j + pol(y_1..y_{j-1}) by forward substitution."""
    n = len(forward)
    y_of_z: list[Poly] = []
    for j in range(n):
        correction = forward[j] - Poly.variable(n, j)  # -pol(y_1..y_{j-1})
        subs = y_of_z + [Poly.variable(n, i) for i in range(j, n)]
        y_of_z.append(
            Poly.variable(n, j) - correction.compose(subs, max_degree=max_degree)
        )
    return y_of_z


def pullback(field: SymField, chart: PrivilegedChart) -> SymField:
    """Express a chart-coordinates field in the original coordinates."""
    n = chart.dim
    cap = chart.taylor_degree
    # x(z) = center + A * backward(z); differentiate, then substitute z(x).
    x_of_z = []
    for i in range(n):
        acc = Poly.const(n, chart.center[i])
        for j in range(n):
            if chart.affine.matrix[i][j] != 0:
                acc = acc + chart.backward[j] * chart.affine.matrix[i][j]
        x_of_z.append(acc)
    z_in_x = [chart.z_in_original(j) for j in range(n)]
    comps_at = [c.compose(z_in_x, max_degree=cap) for c in field.components]
    out = []
    for i in range(n):
        acc = Poly.zero(n)
        for j in range(n):
            dx = x_of_z[i].partial_derivative(j)
            if dx.is_zero() or comps_at[j].is_zero():
                continue
            acc = acc + (
                dx.compose(z_in_x, max_degree=cap) * comps_at[j]
            ).truncate(cap)
        out.append(acc)
    return SymField(out)


def pushforward(field: SymField, chart: PrivilegedChart) -> SymField:
    """Exact polynomial change of variables of a field into chart coordinates."""
    n = chart.dim
    cap = chart.taylor_degree
    in_y = _field_through_affine(field, chart.affine)
    # (dZ/dy at y(z)) applied to the field components at y(z).
    comps_at = [c.compose(chart.backward, max_degree=cap) for c in in_y.components]
    out = []
    for i in range(n):
        acc = Poly.zero(n)
        zi = chart.forward[i]
        for j in range(n):
            dz = zi.partial_derivative(j)
            if dz.is_zero() or comps_at[j].is_zero():
                continue
            acc = acc + (
                dz.compose(chart.backward, max_degree=cap) * comps_at[j]
            ).truncate(cap)
        out.append(acc)
    return SymField(out)


# -- nonholonomic orders ---------------------------------------------------


def weighted_degree(f: Poly, weights: Sequence[int]) -> int | float:
    """Least weighted degree of the monomials of f; +inf for zero."""
    return f.weighted_min_degree(weights)


def ord_function(f: Poly, chart: PrivilegedChart) -> int | float:
    """Order of a function already expressed in chart coordinates."""
    return f.weighted_min_degree(chart.weights)


class ExceedsCap(Exception):
    """All derivative strings up to the cap vanish at the point."""


def ord_function_by_derivatives(
    sys: SystemDef, f: Poly, point: Sequence[Rational], cap: int
) -> int:
    """Least s with a nonzero s-fold derivative of f along the frame at the point.

    Uses derivatives along the control fields themselves, so it is an oracle
    independent of any coordinate chart.
    """
    p = tuple(Fraction(x) for x in point)
    if f.evaluate(p) != 0:
        return 0
    layer = [f]
    for s in range(1, cap + 1):
        nxt = []
        for g in layer:
            for x in sys.fields:
                d = x.apply_to(g)
                if d.evaluate(p) != 0:
                    return s
                nxt.append(d)
        layer = nxt
    raise ExceedsCap(f"all derivatives of order <= {cap} vanish at {p}")


def ord_field(field: SymField, chart: PrivilegedChart) -> int | float:
    """Order of a field already expressed in chart coordinates."""
    best: int | float = math.inf
    for j, comp in enumerate(field.components):
        wd = comp.weighted_min_degree(chart.weights)
        best = min(best, wd - chart.weights[j])
    return best


# -- verification -----------------------------------------------------------


@dataclass(frozen=True)
class CoordinateVerdict:
    index: int
    weight: int
    passed: bool
    failing_alpha: tuple[int, ...] | None
    failing_value: Fraction | None
    witness_alpha: tuple[int, ...] | None
    witness_value: Fraction | None


@dataclass(frozen=True)
class PrivilegedReport:
    verdicts: tuple[CoordinateVerdict, ...]

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def describe(self) -> str:
        lines = []
        for v in self.verdicts:
            if v.passed:
                lines.append(
                    f"z{v.index + 1}: ord = w = {v.weight}"
                    f" (witness derivative {v.witness_alpha} -> {v.witness_value})"
                )
            else:
                lines.append(
                    f"z{v.index + 1}: FAIL, derivative {v.failing_alpha} of weighted "
                    f"degree < {v.weight} equals {v.failing_value} != 0"
                )
        return "\n".join(lines)


def verify_privileged(
    sys: SystemDef, chart: PrivilegedChart, flag: Flag
) -> PrivilegedReport:
    """Check ord(z_j) = w_j by the ordered-derivative criterion, exactly.

    For each coordinate: every ordered frame derivative with weighted degree
    below w_j must vanish at the center, and some derivative of weighted
    degree exactly w_j must not.
    """
    table = BracketTable(sys.fields)
    frame_fields = [table.get(i) for i in flag.adapted_frame]
    weights = flag.weights
    p = flag.point
    verdicts = []
    for j in range(chart.dim):
        zj = chart.z_in_original(j)
        wj = chart.weights[j]
        failing = None
        failing_value = None
        witness = None
        witness_value = None
        for alpha in iter_multi_indices(chart.dim, weights, wj):
            wd = sum(w * a for w, a in zip(weights, alpha))
            value = _apply_multi(frame_fields, alpha, zj).evaluate(p)
            if wd < wj:
                if value != 0:
                    failing = alpha
                    failing_value = value
                    break
            elif wd == wj and value != 0 and witness is None:
                witness = alpha
                witness_value = value
        verdicts.append(
            CoordinateVerdict(
                index=j,
                weight=wj,
                passed=failing is None and witness is not None,
                failing_alpha=failing,
                failing_value=failing_value,
                witness_alpha=witness,
                witness_value=witness_value,
            )
        )
    return PrivilegedReport(tuple(verdicts))


# -- canonical coordinates of the second kind --------------------------------


class NewtonDiverged(Exception):
    """Chart inversion did not converge inside the chart radius."""


@dataclass(frozen=True)
class FlowChartConfig:
    h_max: float = 1e-4
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    fd_step: float = 1e-6


@dataclass(frozen=True)
class FlowChart:
    """Numeric chart from composed flows of the adapted frame.

    forward maps chart coordinates to the manifold by flowing along each
    frame field in turn; backward inverts it by damped Newton.
    """

    center: tuple[Fraction, ...]
    weights: tuple[int, ...]
    frame_used: tuple[BracketIndex, ...]
    frame_fields: tuple[SymField, ...]
    config: FlowChartConfig

    @property
    def dim(self) -> int:
        return len(self.weights)

    def forward(self, z: Sequence[float]) -> np.ndarray:
        x = np.array([float(c) for c in self.center])
        for field, zi in zip(self.frame_fields, z):
            if zi != 0.0:
                x = flow_point(field, x, float(zi), h_max=self.config.h_max)
        return x

    def backward(self, x: Sequence[float]) -> np.ndarray:
        target = np.asarray(x, dtype=float)
        n = self.dim
        z = np.zeros(n)
        cfg = self.config
        residual = self.forward(z) - target
        err = float(np.linalg.norm(residual))
        for _ in range(cfg.newton_max_iter):
            if err <= cfg.newton_tol:
                return z
            jac = np.zeros((n, n))
            for k in range(n):
                dz = z.copy()
                dz[k] += cfg.fd_step
                jac[:, k] = (self.forward(dz) - (residual + target)) / cfg.fd_step
            try:
                step = np.linalg.solve(jac, residual)
            except np.linalg.LinAlgError as exc:
                raise NewtonDiverged(f"singular Jacobian at z={z}") from exc
            scale = 1.0
            while scale >= 1.0 / 1024.0:
                trial = z - scale * step
                trial_res = self.forward(trial) - target
                trial_err = float(np.linalg.norm(trial_res))
                if trial_err < err:
                    z, residual, err = trial, trial_res, trial_err
                    break
                scale *= 0.5
            else:
                raise NewtonDiverged(
                    f"no damped step reduced the residual (err={err:.3e})"
                )
        if err <= cfg.newton_tol:
            return z
        raise NewtonDiverged(f"residual {err:.3e} after {cfg.newton_max_iter} iterations")


def canonical_coords_second_kind(
    sys: SystemDef, flag: Flag, config: FlowChartConfig | None = None
) -> FlowChart:
    """Numeric privileged chart by composing flows of the adapted frame."""
    table = BracketTable(sys.fields)
    return FlowChart(
        center=flag.point,
        weights=flag.weights,
        frame_used=flag.adapted_frame,
        frame_fields=tuple(table.get(i) for i in flag.adapted_frame),
        config=config or FlowChartConfig(),
    )
