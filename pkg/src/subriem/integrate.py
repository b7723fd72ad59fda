"""Fast fixed-step RK4 integration of control-affine polynomial systems.

Fields are compiled once into flat (exponent, coefficient, slot) arrays that a
numba kernel consumes; a single simulation then costs microseconds, which is
what makes the derivative-free distance optimizer affordable.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numba import njit

from .control import ControlSignal, Trajectory
from .field import SymField


class BlowUp(Exception):
    """State norm exceeded the configured bound during integration."""


class CompiledFields:
    """Flattened float representation of m polynomial fields on R^n."""

    __slots__ = ("n", "m", "exps", "coeffs", "state_idx", "field_idx")

    def __init__(self, fields: Sequence[SymField]):
        self.m = len(fields)
        self.n = fields[0].nvars
        exps: list[tuple[int, ...]] = []
        coeffs: list[float] = []
        state_idx: list[int] = []
        field_idx: list[int] = []
        for i, f in enumerate(fields):
            if f.nvars != self.n:
                raise ValueError("fields disagree on dimension")
            for j, comp in enumerate(f.components):
                for e, c in comp.terms():
                    exps.append(e)
                    coeffs.append(float(c))
                    state_idx.append(j)
                    field_idx.append(i)
        if exps:
            self.exps = np.array(exps, dtype=np.int64)
        else:
            self.exps = np.zeros((0, self.n), dtype=np.int64)
        self.coeffs = np.array(coeffs, dtype=np.float64)
        self.state_idx = np.array(state_idx, dtype=np.int64)
        self.field_idx = np.array(field_idx, dtype=np.int64)

    def matrix(self, x: np.ndarray) -> np.ndarray:
        """G(x): n x m matrix with columns X_i(x)."""
        return _eval_matrix(
            self.exps, self.coeffs, self.state_idx, self.field_idx, self.n, self.m,
            np.asarray(x, dtype=np.float64),
        )


_compile_cache: dict[int, CompiledFields] = {}


def compiled(fields: Sequence[SymField]) -> CompiledFields:
    key = hash(tuple(fields))
    hit = _compile_cache.get(key)
    if hit is None:
        hit = CompiledFields(fields)
        _compile_cache[key] = hit
    return hit


@njit(cache=True)
def _eval_matrix(exps, coeffs, state_idx, field_idx, n, m, x):  # pragma: no cover
    out = np.zeros((n, m))
    nterms = exps.shape[0]
    for t in range(nterms):
        v = coeffs[t]
        for k in range(n):
            e = exps[t, k]
            xk = x[k]
            for _ in range(e):
                v *= xk
        out[state_idx[t], field_idx[t]] += v
    return out


@njit(cache=True)
def _rhs(exps, coeffs, state_idx, field_idx, n, x, u, out):  # pragma: no cover
    for k in range(n):
        out[k] = 0.0
    nterms = exps.shape[0]
    for t in range(nterms):
        ui = u[field_idx[t]]
        if ui == 0.0:
            continue
        v = coeffs[t] * ui
        for k in range(n):
            e = exps[t, k]
            xk = x[k]
            for _ in range(e):
                v *= xk
        out[state_idx[t]] += v
    return out


@njit(cache=True)
def _rk4_segments(
    exps, coeffs, state_idx, field_idx, n,
    x0, seg_values, seg_steps, seg_h, bound, record,
):  # pragma: no cover
    nseg = seg_values.shape[0]
    total = 0
    for s in range(nseg):
        total += seg_steps[s]
    if record:
        path = np.zeros((total + 1, n))
    else:
        path = np.zeros((1, n))
    x = x0.copy()
    if record:
        path[0] = x
    k1 = np.zeros(n)
    k2 = np.zeros(n)
    k3 = np.zeros(n)
    k4 = np.zeros(n)
    tmp = np.zeros(n)
    row = 1
    ok = True
    for s in range(nseg):
        u = seg_values[s]
        h = seg_h[s]
        for _ in range(seg_steps[s]):
            _rhs(exps, coeffs, state_idx, field_idx, n, x, u, k1)
            for k in range(n):
                tmp[k] = x[k] + 0.5 * h * k1[k]
            _rhs(exps, coeffs, state_idx, field_idx, n, tmp, u, k2)
            for k in range(n):
                tmp[k] = x[k] + 0.5 * h * k2[k]
            _rhs(exps, coeffs, state_idx, field_idx, n, tmp, u, k3)
            for k in range(n):
                tmp[k] = x[k] + h * k3[k]
            _rhs(exps, coeffs, state_idx, field_idx, n, tmp, u, k4)
            for k in range(n):
                x[k] = x[k] + (h / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
            norm = 0.0
            for k in range(n):
                norm += x[k] * x[k]
            if norm > bound * bound:
                ok = False
                break
            if record:
                path[row] = x
                row += 1
        if not ok:
            break
    if not record:
        path[0] = x
    return path, row, ok


def _segment_plan(
    durations: np.ndarray, h_max: float
) -> tuple[np.ndarray, np.ndarray]:
    steps = np.maximum(1, np.ceil(durations / h_max).astype(np.int64))
    hs = durations / steps
    return steps, hs


def endpoint(
    fields: Sequence[SymField] | CompiledFields,
    control: ControlSignal,
    x0: Sequence[float],
    h_max: float = 1e-3,
    bound: float = 1e6,
) -> np.ndarray:
    """Endpoint of the trajectory; raises BlowUp past the state bound."""
    comp = fields if isinstance(fields, CompiledFields) else compiled(fields)
    x = np.asarray(x0, dtype=np.float64)
    if control.nsegments == 0:
        return x.copy()
    durs, vals = control.as_arrays()
    steps, hs = _segment_plan(durs, h_max)
    path, _, ok = _rk4_segments(
        comp.exps, comp.coeffs, comp.state_idx, comp.field_idx, comp.n,
        x, vals, steps, hs, bound, False,
    )
    if not ok:
        raise BlowUp(f"state norm exceeded {bound}")
    return path[0]


def simulate(
    fields: Sequence[SymField] | CompiledFields,
    control: ControlSignal,
    x0: Sequence[float],
    h_max: float = 1e-3,
    bound: float = 1e6,
) -> Trajectory:
    """RK4 with fixed substep h = duration/ceil(duration/h_max), full sample path."""
    comp = fields if isinstance(fields, CompiledFields) else compiled(fields)
    x = np.asarray(x0, dtype=np.float64)
    if control.nsegments == 0:
        return Trajectory(
            times=np.array([0.0]),
            states=x[None, :].copy(),
            control=control,
            length=0.0,
        )
    durs, vals = control.as_arrays()
    steps, hs = _segment_plan(durs, h_max)
    path, rows, ok = _rk4_segments(
        comp.exps, comp.coeffs, comp.state_idx, comp.field_idx, comp.n,
        x, vals, steps, hs, bound, True,
    )
    if not ok:
        raise BlowUp(f"state norm exceeded {bound}")
    times = np.concatenate(
        [
            np.array([0.0]),
            np.concatenate(
                [
                    start + hs[s] * np.arange(1, steps[s] + 1)
                    for s, start in enumerate(
                        np.concatenate([[0.0], np.cumsum(durs)[:-1]])
                    )
                ]
            ),
        ]
    )
    return Trajectory(
        times=times, states=path[:rows], control=control, length=control.l1_cost()
    )


def flow_point(
    field: SymField,
    x0: Sequence[float],
    t: float,
    h_max: float = 1e-3,
) -> np.ndarray:
    """exp(t X)(x0) by RK4 on the single field."""
    if t == 0.0:
        return np.asarray(x0, dtype=float).copy()
    sign = 1.0 if t > 0 else -1.0
    control = ControlSignal.single((sign,), abs(t))
    return endpoint([field], control, x0, h_max=h_max)
