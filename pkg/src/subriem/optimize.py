"""Distance estimation by penalty-method derivative-free control optimization.

Distances are upper bounds: the optimizer searches piecewise-constant
controls minimizing L1 cost plus a penalty on the endpoint mismatch, with
penalty continuation until the endpoint snaps to the target.  Structured
restarts (constant least-squares controls and commutator-loop moves along the
chart frame) make the search reliable; everything is deterministic given the
seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .charts import PrivilegedChart, pseudo_norm
from .control import ControlSignal
from .field import SymField, SystemDef
from .flows import frame_move_control
from .integrate import CompiledFields, _rk4_segments, compiled, simulate


class NoTrajectoryFound(Exception):
    """The optimizer could not reach the target within the budget."""

    def __init__(self, message: str, best: "DistanceEstimate | None" = None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SolverStats:
    evaluations: int
    restarts: int
    best_start: str
    endpoint_error: float
    converged: bool


@dataclass(frozen=True)
class DistanceEstimate:
    """Two-sided distance evidence: optimized upper bound, cheap lower bound."""

    upper: float
    witness: ControlSignal
    lower: float
    stats: SolverStats

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise ValueError("lower bound exceeds upper bound")


@dataclass(frozen=True)
class DistanceConfig:
    segments: int | None = None  # defaults to 4n
    restarts: int = 16
    steps_per_segment: int = 8
    h_max: float = 1e-3
    snap_tol: float = 1e-6
    penalty0: float = 1e2
    penalty_growth: float = 10.0
    penalty_rounds: int = 8
    nm_maxiter: int = 450
    seed: int = 0
    state_bound: float = 1e6
    total_time: float = 1.0

    def scaled_by_budget(self, budget: int | None) -> "DistanceConfig":
        """Interpret the budget as a cap on optimizer restarts and iterations."""
        if budget is None:
            return self
        restarts = max(2, min(self.restarts, budget))
        maxiter = max(150, min(self.nm_maxiter, 60 * budget))
        return replace(self, restarts=restarts, nm_maxiter=maxiter)


class _Objective:
    """Penalty objective over segment values on a fixed duration grid."""

    def __init__(
        self,
        comp: CompiledFields,
        durations: np.ndarray,
        x0: np.ndarray,
        target: np.ndarray,
        err_map,
        h_search: float,
        state_bound: float,
    ):
        self.comp = comp
        self.durations = durations
        self.m = comp.m
        self.x0 = x0
        self.target = target
        self.err_map = err_map
        self.steps = np.maximum(1, np.ceil(durations / h_search)).astype(np.int64)
        self.hs = durations / self.steps
        self.state_bound = state_bound
        self.lam = 1.0
        self.evals = 0

    def endpoint(self, values: np.ndarray) -> np.ndarray | None:
        path, _, ok = _rk4_segments(
            self.comp.exps,
            self.comp.coeffs,
            self.comp.state_idx,
            self.comp.field_idx,
            self.comp.n,
            self.x0,
            values,
            self.steps,
            self.hs,
            self.state_bound,
            False,
        )
        return path[0] if ok else None

    def cost(self, values: np.ndarray) -> float:
        return float(np.dot(self.durations, np.sqrt((values**2).sum(axis=1))))

    def scaled_error(self, values: np.ndarray) -> float:
        end = self.endpoint(values)
        if end is None:
            return math.inf
        return float(np.linalg.norm(self.err_map(end, self.target)))

    def __call__(self, flat: np.ndarray) -> float:
        self.evals += 1
        values = flat.reshape(-1, self.m)
        end = self.endpoint(values)
        if end is None:
            return 1e12
        err = float(np.linalg.norm(self.err_map(end, self.target)))
        return self.cost(values) + self.lam * err * err


def _chart_error_map(chart: PrivilegedChart, err_scale: np.ndarray):
    zmap = compiled([SymField([chart.z_in_original(j) for j in range(chart.dim)])])

    def err(end: np.ndarray, target_z: np.ndarray) -> np.ndarray:
        z = zmap.matrix(end)[:, 0]
        return (z - target_z) / err_scale

    return zmap, err


def _control_to_grid(control: ControlSignal, total_time: float) -> tuple[np.ndarray, np.ndarray]:
    """Time-reparametrize a control onto total_time, preserving the path and cost."""
    durs = np.array(control.durations, dtype=float)
    vals = np.array(control.values, dtype=float)
    t = durs.sum()
    if t <= 0:
        raise ValueError("empty control")
    factor = t / total_time
    return durs / factor, vals * factor


def estimate_distance(
    sys: SystemDef,
    p: Sequence[float],
    q: Sequence[float],
    budget: int | None = None,
    config: DistanceConfig | None = None,
    chart: PrivilegedChart | None = None,
    warm_starts: Sequence[ControlSignal] = (),
) -> DistanceEstimate:
    """Upper-bound estimate of the control distance from p to q.

    Multi-start Nelder-Mead over piecewise-constant controls with penalty
    continuation; the returned witness, re-simulated at the configured step,
    reaches the target within the snap tolerance and its L1 cost equals the
    reported upper bound.  When a privileged chart at p is supplied, endpoint
    errors are measured in weight-scaled chart coordinates, which keeps the
    search scale-covariant, and commutator-loop moves along the chart frame
    are used as structured starts.
    """
    cfg = (config or DistanceConfig()).scaled_by_budget(budget)
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    n, m = sys.dim, sys.nfields
    comp = compiled(sys.fields)

    if float(np.linalg.norm(q_arr - p_arr)) <= cfg.snap_tol:
        return DistanceEstimate(
            upper=0.0,
            witness=ControlSignal.empty(m),
            lower=0.0,
            stats=SolverStats(0, 0, "identical endpoints", 0.0, True),
        )

    # Characteristic scale and error map.
    if chart is not None:
        z_target = chart.to_chart_float(q_arr)
        z_start = chart.to_chart_float(p_arr)
        eps_char = max(
            pseudo_norm(z_target, chart.weights),
            pseudo_norm(z_start, chart.weights),
            1e-9,
        )
        err_scale = np.array(
            [max(eps_char**w, 1e-12) for w in chart.weights]
        )
        _, err_map = _chart_error_map(chart, err_scale)
        target_for_err = z_target
        snap_scaled = cfg.snap_tol / float(err_scale.min())
    else:
        eps_char = max(float(np.linalg.norm(q_arr - p_arr)), 1e-9)
        scale = eps_char

        def err_map(end, target):
            return (end - target) / scale

        target_for_err = q_arr
        snap_scaled = cfg.snap_tol / scale

    segments = cfg.segments or 4 * n
    base_durs = np.full(segments, cfg.total_time / segments)
    h_search = cfg.total_time / (segments * cfg.steps_per_segment)

    # -- structured and random starts ----------------------------------------
    starts: list[tuple[str, np.ndarray, np.ndarray]] = []

    gp = comp.matrix(p_arr)
    u_const, *_ = np.linalg.lstsq(gp, (q_arr - p_arr) / cfg.total_time, rcond=None)
    starts.append(("constant", base_durs, np.tile(u_const, (segments, 1))))

    if chart is not None:
        amounts = [float(z) for z in z_target]
        try:
            loop = frame_move_control(chart.frame_used, amounts, m)
            if loop.nsegments:
                durs, vals = _control_to_grid(loop, cfg.total_time)
                starts.append(("frame loops", durs, vals))
        except (ValueError, IndexError):
            pass

    for idx, warm in enumerate(warm_starts):
        if warm.nsegments:
            durs, vals = _control_to_grid(warm, cfg.total_time)
            starts.append((f"warm {idx}", durs, vals))

    rng = np.random.default_rng(cfg.seed)
    u_scale = max(eps_char * segments / cfg.total_time / segments, 1e-9)
    while len(starts) < cfg.restarts:
        vals = rng.normal(0.0, u_scale, size=(segments, m))
        starts.append((f"random {len(starts)}", base_durs, vals))
    starts = starts[: max(cfg.restarts, 3)]

    # -- optimize each start ---------------------------------------------------
    best = None  # (cost, name, durations, values, err_scaled, evals)
    total_evals = 0
    for name, durs, vals in starts:
        obj = _Objective(
            comp, durs, p_arr, target_for_err, err_map, h_search, cfg.state_bound
        )
        v = np.asarray(vals, dtype=float).reshape(-1)
        dim = v.size
        step = max(0.5 * u_scale, 0.1 * float(np.abs(v).max(initial=0.0)))
        lam = cfg.penalty0
        err_target = max(0.3 * snap_scaled, 1e-9)
        err = obj.scaled_error(v.reshape(-1, m))
        for round_idx in range(cfg.penalty_rounds):
            obj.lam = lam
            simplex = np.vstack([v, v + step * np.eye(dim)])
            res = minimize(
                obj,
                v,
                method="Nelder-Mead",
                options={
                    "initial_simplex": simplex,
                    "maxiter": cfg.nm_maxiter,
                    "xatol": 1e-5 * max(u_scale, 1e-9),
                    "fatol": 1e-7 * max(eps_char, 1e-9),
                    "disp": False,
                },
            )
            v = res.x
            err = obj.scaled_error(v.reshape(-1, m))
            step = max(0.05 * u_scale, 0.25 * step)
            if err <= err_target and round_idx >= 1:
                break
            lam *= cfg.penalty_growth
        total_evals += obj.evals
        values = v.reshape(-1, m)
        cost = obj.cost(values)
        if err <= max(snap_scaled, 1e-8):
            if best is None or cost < best[0]:
                best = (cost, name, durs, values, err)

    if best is None:
        raise NoTrajectoryFound(
            f"no control reached the target within {cfg.restarts} restarts"
        )

    cost, name, durs, values, err = best
    witness = ControlSignal(
        durations=tuple(float(d) for d in durs),
        values=tuple(tuple(float(x) for x in row) for row in values),
    )
    # Certify on the reference grid.
    final = simulate(comp, witness, p_arr, h_max=cfg.h_max, bound=cfg.state_bound)
    raw_err = float(np.linalg.norm(final.endpoint - q_arr))
    converged = raw_err <= cfg.snap_tol
    lower = lower_bound_constant_rows(sys, p_arr, q_arr)
    upper = witness.l1_cost()
    stats = SolverStats(
        evaluations=total_evals,
        restarts=len(starts),
        best_start=name,
        endpoint_error=raw_err,
        converged=converged,
    )
    if not converged and raw_err > 10 * cfg.snap_tol:
        raise NoTrajectoryFound(
            f"best endpoint error {raw_err:.3e} exceeds snap tolerance",
            best=DistanceEstimate(upper, witness, min(lower, upper), stats),
        )
    return DistanceEstimate(
        upper=upper, witness=witness, lower=min(lower, upper), stats=stats
    )


def lower_bound_constant_rows(
    sys: SystemDef, p: np.ndarray, q: np.ndarray
) -> float:
    """Valid lower bound from coordinates whose velocity row is constant.

    If row j of the control matrix G(x) is constant in x with norm c_j, then
    |q_j - p_j| <= c_j * length for every trajectory, hence d >= |dq_j| / c_j.
    Returns 0 when no row qualifies.
    """
    best = 0.0
    for j in range(sys.dim):
        row = [f.components[j] for f in sys.fields]
        if any(r.total_degree() > 0 for r in row):
            continue
        norm = math.sqrt(sum(float(r.constant_term()) ** 2 for r in row))
        if norm == 0.0:
            continue
        best = max(best, abs(float(q[j] - p[j])) / norm)
    return best
