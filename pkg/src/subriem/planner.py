"""Approximate motion planning through the nilpotent approximation.

One planning iteration steers the truncated triangular system exactly to the
goal, applies the same control to the true system, and repeats from wherever
that lands.  Near the goal the residual contracts geometrically; the cost of
every emitted control is logged against the residual it was asked to close,
which is the admissibility hypothesis that convergence rests on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .charts import PrivilegedChart, algebraic_privileged_coords, pseudo_norm
from .control import ControlSignal
from .field import SystemDef
from .integrate import endpoint as _endpoint
from .liealgebra import flag_at
from .nilpotent import NilpotentSystem, integrate_triangular, nilpotent_approximation
from .optimize import DistanceConfig, NoTrajectoryFound, estimate_distance


class SteeringFailed(Exception):
    """Newton steering did not converge within the restart budget."""


class Diverged(Exception):
    """Planner residual increased twice in a row."""


class OutOfRadius(Exception):
    """Start point is outside the configured chart validity radius."""


@dataclass(frozen=True)
class SteeringConfig:
    segments: int | None = None  # defaults to 2n
    newton_tol: float = 1e-9
    max_newton: int = 60
    fd_step: float = 1e-7
    restarts: int = 8
    cost_slack: float = 20.0  # admissible-cost constant K
    cost_shrink_rounds: int = 3
    seed: int = 0
    total_time: float = 1.0


def _endpoint_map(nil: NilpotentSystem, x0: np.ndarray, durs, values: np.ndarray):
    traj = integrate_triangular(
        nil,
        ControlSignal(tuple(durs), tuple(tuple(v) for v in values)),
        x0,
        samples_per_segment=1,
    )
    return traj.endpoint


def nilpotent_distance_surrogate(
    nil: NilpotentSystem, x0: Sequence[float], goal: Sequence[float]
) -> float:
    """Cheap stand-in for the truncated-system distance between two points.

    Pseudo-norm of the coordinate displacement; comparable to the homogeneous
    distance up to constants when one endpoint is near the chart origin,
    which is how the planner uses it (it always steers to the origin).
    """
    delta = np.asarray(goal, dtype=float) - np.asarray(x0, dtype=float)
    return pseudo_norm(delta, nil.weights)


def steer_nilpotent(
    nil: NilpotentSystem,
    x0: Sequence[float],
    goal: Sequence[float],
    config: SteeringConfig | None = None,
) -> ControlSignal:
    """Control steering the triangular system from x0 to goal, unit-normalized.

    Damped Gauss-Newton on the polynomial endpoint map over piecewise-constant
    segment values, followed by null-space rounds that shrink the control norm
    at fixed endpoint; solutions whose cost exceeds the admissibility cap are
    rejected and the search restarts from a new seed.
    """
    cfg = config or SteeringConfig()
    x0 = np.asarray(x0, dtype=float)
    goal = np.asarray(goal, dtype=float)
    n, m = nil.dim, nil.nfields
    segments = cfg.segments or 2 * n
    durs = np.full(segments, cfg.total_time / segments)
    d_hat = nilpotent_distance_surrogate(nil, x0, goal)
    if d_hat <= 0.0 or np.allclose(x0, goal, atol=1e-15):
        return ControlSignal.empty(m)
    scale = np.array([max(d_hat, 1e-9) ** w for w in nil.weights])
    rng = np.random.default_rng(cfg.seed)

    def solve(v0: np.ndarray) -> tuple[np.ndarray, float] | None:
        v = v0.copy()
        res = (_endpoint_map(nil, x0, durs, v) - goal) / scale
        err = float(np.linalg.norm(res))
        for _ in range(cfg.max_newton):
            if err <= cfg.newton_tol:
                return v, err
            jac = np.zeros((n, v.size))
            flat = v.reshape(-1)
            h = cfg.fd_step * max(1.0, float(np.abs(flat).max()))
            for k in range(flat.size):
                bumped = flat.copy()
                bumped[k] += h
                jac[:, k] = (
                    (_endpoint_map(nil, x0, durs, bumped.reshape(-1, m)) - goal)
                    / scale
                    - res
                ) / h
            step, *_ = np.linalg.lstsq(jac, res, rcond=None)
            lam = 1.0
            while lam >= 1.0 / 256.0:
                trial = (flat - lam * step).reshape(-1, m)
                trial_res = (_endpoint_map(nil, x0, durs, trial) - goal) / scale
                trial_err = float(np.linalg.norm(trial_res))
                if trial_err < err:
                    v, res, err = trial, trial_res, trial_err
                    break
                lam *= 0.5
            else:
                return None
        return (v, err) if err <= cfg.newton_tol else None

    u_mag = d_hat * segments / cfg.total_time / segments
    best: tuple[float, np.ndarray] | None = None
    for attempt in range(cfg.restarts):
        if attempt == 0:
            v0 = np.full((segments, m), 0.0)
            v0 += rng.normal(0.0, 0.2 * u_mag, size=v0.shape)
        else:
            v0 = rng.normal(0.0, u_mag * (1.0 + 0.5 * attempt), size=(segments, m))
        solved = solve(v0)
        if solved is None:
            continue
        v, err = solved
        # Null-space cost reduction: shrink toward the minimum-norm solution,
        # then re-close the endpoint.
        for _ in range(cfg.cost_shrink_rounds):
            shrunk = solve(0.5 * v)
            if shrunk is None:
                break
            v, err = shrunk
        cost = float(np.dot(durs, np.sqrt((v**2).sum(axis=1))))
        if best is None or cost < best[0]:
            best = (cost, v)
        if cost <= cfg.cost_slack * d_hat:
            break
    if best is None:
        raise SteeringFailed(
            f"no Newton solve converged in {cfg.restarts} restarts "
            f"(target displacement {goal - x0})"
        )
    cost, v = best
    if cost > cfg.cost_slack * d_hat:
        raise SteeringFailed(
            f"steering cost {cost:.3g} violates the admissible cap "
            f"{cfg.cost_slack:g} * {d_hat:.3g}"
        )
    control = ControlSignal(
        tuple(float(d) for d in durs),
        tuple(tuple(float(x) for x in row) for row in v),
    )
    return control.normalized()


@dataclass(frozen=True)
class PlanStep:
    state: tuple[float, ...]
    residual: float
    control_cost: float | None  # cost of the control emitted FROM this state
    cost_ratio: float | None  # cost / residual, the admissibility log


@dataclass(frozen=True)
class PlanResult:
    steps: tuple[PlanStep, ...]
    controls: tuple[ControlSignal, ...]
    converged: bool
    iterations: int
    tolerance: float
    residual_kind: str  # "pseudo-norm surrogate" or "optimized estimate"
    chart: PrivilegedChart

    @property
    def waypoints(self) -> np.ndarray:
        return np.array([s.state for s in self.steps])

    @property
    def residuals(self) -> tuple[float, ...]:
        return tuple(s.residual for s in self.steps)

    @property
    def contractions(self) -> tuple[float, ...]:
        res = self.residuals
        return tuple(res[i + 1] / res[i] for i in range(len(res) - 1) if res[i] > 0)

    @property
    def cost_constant(self) -> float:
        """Largest observed cost / residual over emitted controls."""
        ratios = [s.cost_ratio for s in self.steps if s.cost_ratio is not None]
        return max(ratios) if ratios else 0.0

    def concatenated_control(self) -> ControlSignal:
        out = ControlSignal.empty(0)
        for c in self.controls:
            out = out.concat(c)
        return out

    def describe(self) -> str:
        lines = [
            f"iter {i}: state {np.round(np.array(s.state), 6).tolist()} "
            f"residual {s.residual:.3e}"
            + (f" cost {s.control_cost:.3e}" if s.control_cost is not None else "")
            for i, s in enumerate(self.steps)
        ]
        lines.append(
            ("converged" if self.converged else "NOT converged")
            + f" in {self.iterations} iterations (residual {self.residuals[-1]:.2e}, "
            f"tol {self.tolerance:g}, K={self.cost_constant:.2f}, "
            f"residual = {self.residual_kind})"
        )
        return "\n".join(lines)


@dataclass(frozen=True)
class PlanConfig:
    max_iter: int = 30
    tol: float = 1e-5
    radius: float = 1.0
    steering: SteeringConfig = field(default_factory=SteeringConfig)
    h_max: float = 1e-3
    residual_estimate: bool = False  # True: optimized estimate, else surrogate
    residual_budget: int = 4


def plan(
    sys: SystemDef,
    a: Sequence[float],
    b: Sequence[Fraction],
    config: PlanConfig | None = None,
) -> PlanResult:
    """Iterate steer-the-truncation / replay-on-the-true-system until b.

    The truncated system is built at b, so the goal is the chart origin; the
    residual is the homogeneous distance from the current state to b, by
    surrogate or by optimized estimate per config.
    """
    cfg = config or PlanConfig()
    b_exact = tuple(Fraction(v) for v in b)
    flag = flag_at(sys, b_exact)
    chart = algebraic_privileged_coords(sys, flag)
    nil = nilpotent_approximation(sys, chart)
    nil_sys = nil.to_system()
    residual_kind = (
        "optimized estimate" if cfg.residual_estimate else "pseudo-norm surrogate"
    )

    def residual_of(z: np.ndarray) -> float:
        if cfg.residual_estimate:
            try:
                est = estimate_distance(
                    nil_sys,
                    z,
                    np.zeros(nil.dim),
                    budget=cfg.residual_budget,
                    chart=None,
                )
                return est.upper
            except NoTrajectoryFound:
                pass
        return pseudo_norm(z, nil.weights)

    x = np.asarray(a, dtype=float)
    z = chart.to_chart_float(x)
    if pseudo_norm(z, nil.weights) > cfg.radius:
        raise OutOfRadius(
            f"start at chart pseudo-distance {pseudo_norm(z, nil.weights):.3g} "
            f"> radius {cfg.radius:g}"
        )
    steps: list[PlanStep] = []
    controls: list[ControlSignal] = []
    res = residual_of(z)
    increases = 0
    converged = res <= cfg.tol
    it = 0
    while not converged and it < cfg.max_iter:
        control = steer_nilpotent(nil, z, np.zeros(nil.dim), cfg.steering)
        if control.nsegments == 0:
            converged = True
            steps.append(PlanStep(tuple(x), res, None, None))
            break
        cost = control.l1_cost()
        steps.append(
            PlanStep(tuple(x), res, cost, cost / res if res > 0 else None)
        )
        controls.append(control)
        x = _endpoint(sys.fields, control, x, h_max=cfg.h_max)
        z = chart.to_chart_float(x)
        new_res = residual_of(z)
        if new_res >= res:
            increases += 1
            if increases >= 2:
                steps.append(PlanStep(tuple(x), new_res, None, None))
                raise Diverged(
                    f"residual increased twice (last {res:.3e} -> {new_res:.3e})"
                )
        else:
            increases = 0
        res = new_res
        converged = res <= cfg.tol
        it += 1
    if not steps or steps[-1].residual != res:
        steps.append(PlanStep(tuple(x), res, None, None))
    return PlanResult(
        steps=tuple(steps),
        controls=tuple(controls),
        converged=converged,
        iterations=it,
        tolerance=cfg.tol,
        residual_kind=residual_kind,
        chart=chart,
    )


@dataclass(frozen=True)
class GlobalPlanResult:
    waypoints: tuple[tuple[float, ...], ...]
    legs: tuple[PlanResult, ...]
    converged: bool

    def concatenated_control(self) -> ControlSignal:
        out = ControlSignal.empty(0)
        for leg in self.legs:
            out = out.concat(leg.concatenated_control())
        return out


def plan_global(
    sys: SystemDef,
    a: Sequence[float],
    b: Sequence[Fraction],
    spacing: float = 0.2,
    config: PlanConfig | None = None,
    regularity_seed: int = 0,
) -> GlobalPlanResult:
    """Chain local plans along a straight chart segment toward b.

    Only valid for systems whose points are all regular along the route; the
    waypoints are equally spaced samples of the straight segment from a to b
    in the chart at b.
    """
    from .liealgebra import is_regular

    cfg = config or PlanConfig()
    b_exact = tuple(Fraction(v) for v in b)
    flag = flag_at(sys, b_exact)
    chart = algebraic_privileged_coords(sys, flag)
    evidence = is_regular(sys, b_exact, seed=regularity_seed)
    if not evidence.regular:
        raise ValueError(
            "global planning by waypoint chaining requires regular points; "
            + evidence.describe()
        )
    z_a = chart.to_chart_float(np.asarray(a, dtype=float))
    total = pseudo_norm(z_a, chart.weights)
    nlegs = max(1, int(math.ceil(total / spacing)))
    waypoints = []
    for k in range(1, nlegs + 1):
        frac = 1.0 - k / nlegs
        waypoints.append(chart.from_chart_float(z_a * frac))
    legs = []
    x = np.asarray(a, dtype=float)
    for w in waypoints:
        w_exact = tuple(Fraction(float(v)).limit_denominator(10**9) for v in w)
        leg = plan(sys, x, w_exact, cfg)
        legs.append(leg)
        if not leg.converged:
            raise Diverged(
                f"leg toward {np.round(w, 6).tolist()} failed to contract"
            )
        x = np.array(leg.steps[-1].state)
    return GlobalPlanResult(
        waypoints=tuple(tuple(float(v) for v in w) for w in waypoints),
        legs=tuple(legs),
        converged=all(leg.converged for leg in legs),
    )
