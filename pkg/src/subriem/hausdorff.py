"""Ball-packing estimation of the Hausdorff dimension of small balls.

Packing counts N_eps of disjoint eps-balls inside B(p, r) scale like
eps^(-Q); the fitted slope estimates the dimension and a logarithmic excess
over the power law is detected separately (it distinguishes singular centers
whose top-dimensional measure is infinite).

Pairwise distances inside the greedy packing use a frame-box gauge: the
displacement is written in the best bracket frames at the accepted center and
measured anisotropically.  The gauge is calibrated once against the
optimizer, and borderline pairs may be re-examined with it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .charts import algebraic_privileged_coords
from .control import ControlSignal
from .field import SystemDef
from .flows import frame_move_control
from .integrate import compiled, simulate
from .liealgebra import BracketTable, flag_at, iter_bracket_indices
from .optimize import NoTrajectoryFound, estimate_distance


@dataclass(frozen=True)
class PackingCount:
    eps: float
    count: int
    budget_exhausted: bool  # count is only a lower bound when True
    refinements_used: int


@dataclass(frozen=True)
class HausdorffEstimate:
    eps_list: tuple[float, ...]
    packing_counts: tuple[int, ...]
    fitted_dimension: float
    log_correction_detected: bool
    residuals: tuple[float, ...]
    raw_slope: float
    log_model_gain: float  # variance-ratio statistic of the log term

    def describe(self) -> str:
        pts = ", ".join(
            f"({e:g}: {n})" for e, n in zip(self.eps_list, self.packing_counts)
        )
        return (
            f"packing counts [{pts}], dimension {self.fitted_dimension:.2f} "
            f"(raw slope {self.raw_slope:.2f}), log correction "
            + ("DETECTED" if self.log_correction_detected else "not detected")
            + f" (gain {self.log_model_gain:.1f})"
        )


class _FrameGauge:
    """Per-center anisotropic gauges from the best bracket frames.

    For each accepted center the candidate brackets are ranked by frame
    volume within each total length; a displacement's gauge is the smallest
    box scale containing it over those frames, linearized at the center.
    Arrays are preallocated so the greedy packing loop stays linear-time per
    candidate.
    """

    def __init__(self, sys: SystemDef, r_max: int, capacity: int):
        self.table = BracketTable(sys.fields)
        self.n = sys.dim
        self.indices = []
        for index in iter_bracket_indices(sys.nfields, r_max):
            if not self.table.get(index).is_zero():
                self.indices.append(index)
        self.combos = list(itertools.combinations(range(len(self.indices)), self.n))
        self.max_frames_per_center = len(
            {sum(len(self.indices[k]) for k in combo) for combo in self.combos}
        )
        cap = capacity * self.max_frames_per_center
        self.inv = np.zeros((cap, self.n, self.n))
        self.inv_exp = np.zeros((cap, self.n))
        self.owner = np.zeros(cap, dtype=np.int64)
        self.frame_center = np.zeros((cap, self.n))
        self.nframes = 0
        self.ncenters = 0
        self.centers = np.zeros((capacity, self.n))

    def add_center(self, point: np.ndarray):
        values = np.column_stack(
            [
                np.array(
                    [float(c.evaluate_float(point)) for c in self.table.get(i).components]
                )
                for i in self.indices
            ]
        )
        best_by_length: dict[int, tuple[float, tuple[int, ...]]] = {}
        for combo in self.combos:
            det = abs(float(np.linalg.det(values[:, combo])))
            if det < 1e-12:
                continue
            total = sum(len(self.indices[k]) for k in combo)
            held = best_by_length.get(total)
            if held is None or det > held[0]:
                best_by_length[total] = (det, combo)
        owner = self.ncenters
        self.centers[owner] = point
        self.ncenters += 1
        for det, combo in best_by_length.values():
            k = self.nframes
            self.inv[k] = np.linalg.inv(values[:, combo])
            self.inv_exp[k] = [len(self.indices[c]) for c in combo]
            self.owner[k] = owner
            self.frame_center[k] = point
            self.nframes += 1

    def min_gauge_to_centers(self, point: np.ndarray) -> float:
        """Smallest gauge distance from the point to any accepted center."""
        if self.ncenters == 0:
            return math.inf
        k = self.nframes
        diffs = point[None, :] - self.frame_center[:k]
        coords = np.einsum("kij,kj->ki", self.inv[:k], diffs)
        gauges = np.max(np.abs(coords) ** (1.0 / self.inv_exp[:k]), axis=1)
        per_owner = np.full(self.ncenters, math.inf)
        np.minimum.at(per_owner, self.owner[:k], gauges)
        return float(per_owner.min())

    def closest_center(self, point: np.ndarray) -> tuple[int, float]:
        k = self.nframes
        diffs = point[None, :] - self.frame_center[:k]
        coords = np.einsum("kij,kj->ki", self.inv[:k], diffs)
        gauges = np.max(np.abs(coords) ** (1.0 / self.inv_exp[:k]), axis=1)
        per_owner = np.full(self.ncenters, math.inf)
        np.minimum.at(per_owner, self.owner[:k], gauges)
        idx = int(np.argmin(per_owner))
        return idx, float(per_owner[idx])


def candidate_cloud(
    sys: SystemDef,
    p: Sequence[Fraction],
    r: float,
    budget: int,
    seed: int,
    loop_fraction: float = 0.85,
    segments: int = 3,
) -> tuple[np.ndarray, float]:
    """Endpoints of random admissible controls of cost at most r.

    The bulk are frame-loop moves with amounts uniform in the anisotropic box
    Box(R), R = r / (worst-case loop cost): that distribution is uniform with
    respect to volume, which plain short random controls are badly not
    (they almost never reach the high-weight extremes of the ball).  The rest
    are generic random piecewise-constant controls.  Returns the cloud and R.
    """
    rng = np.random.default_rng(seed)
    p_exact = tuple(Fraction(v) for v in p)
    p_arr = np.array([float(v) for v in p_exact])
    flag = flag_at(sys, p_exact)
    comp = compiled(sys.fields)
    m = sys.nfields
    # Worst-case cost of a unit box move: sum of loop segment counts.
    probe = frame_move_control(flag.adapted_frame, [1.0] * sys.dim, m)
    cost_factor = probe.l1_cost()
    box_r = r / cost_factor
    out = np.empty((budget, sys.dim))
    nloops = int(budget * loop_fraction)
    for k in range(budget):
        if k < nloops:
            v = rng.uniform(-1.0, 1.0, size=sys.dim)
            amounts = [
                float(vj) * box_r**w for vj, w in zip(v, flag.weights)
            ]
            control = frame_move_control(flag.adapted_frame, amounts, m)
            if control.nsegments == 0:
                out[k] = p_arr
                continue
        else:
            cost = r * rng.uniform(0.1, 1.0)
            dirs = rng.normal(size=(segments, m))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            control = ControlSignal(
                tuple([cost / segments] * segments),
                tuple(tuple(row) for row in dirs),
            )
        cost = control.l1_cost()
        out[k] = simulate(
            comp, control, p_arr, h_max=max(cost / 24, 1e-3)
        ).endpoint
    return out, box_r


class _BoxSampler:
    """Fast batch generator of box-uniform frame-loop endpoints.

    The loop control pattern along each frame bracket is precomputed once per
    sign; a sample only rescales segment durations and runs the RK4 kernel.
    """

    def __init__(self, sys: SystemDef, p: Sequence[Fraction], r: float):
        from .flows import psi_control

        self.p_exact = tuple(Fraction(v) for v in p)
        self.p_arr = np.array([float(v) for v in self.p_exact])
        self.flag = flag_at(sys, self.p_exact)
        self.comp = compiled(sys.fields)
        m = sys.nfields
        self.weights = self.flag.weights
        self.patterns = []  # per frame direction: {sign: (durs, vals)}
        cost_factor = 0.0
        for index in self.flag.adapted_frame:
            per_sign = {}
            for sign in (1.0, -1.0):
                c = psi_control(index, sign, m)
                per_sign[sign] = (
                    np.array(c.durations),
                    np.array(c.values),
                )
            self.patterns.append(per_sign)
            cost_factor += per_sign[1.0][0].sum()
        self.box_r = r / cost_factor

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        from .integrate import _rk4_segments

        n = len(self.weights)
        out = np.empty((count, n))
        for k in range(count):
            v = rng.uniform(-1.0, 1.0, size=n)
            durs_parts = []
            vals_parts = []
            for j, vj in enumerate(v):
                if vj == 0.0:
                    continue
                s = (abs(vj) * self.box_r ** self.weights[j]) ** (
                    1.0 / self.weights[j]
                )
                base_durs, base_vals = self.patterns[j][1.0 if vj > 0 else -1.0]
                durs_parts.append(base_durs * s)
                vals_parts.append(base_vals)
            if not durs_parts:
                out[k] = self.p_arr
                continue
            durs = np.concatenate(durs_parts)
            vals = np.vstack(vals_parts)
            h = max(float(durs.sum()) / 24, 1e-3)
            steps = np.maximum(1, np.ceil(durs / h)).astype(np.int64)
            path, _, ok = _rk4_segments(
                self.comp.exps, self.comp.coeffs, self.comp.state_idx,
                self.comp.field_idx, self.comp.n,
                self.p_arr, vals, steps, durs / steps, 1e6, False,
            )
            out[k] = path[0] if ok else self.p_arr
        return out


def calibrate_gauge(
    sys: SystemDef,
    p: Sequence[Fraction],
    cloud: np.ndarray,
    gauge_factory,
    seed: int = 0,
    pairs: int = 8,
    budget: int = 6,
) -> float:
    """Median optimizer-distance to gauge ratio, probed from the ball center.

    Center-based probes keep the optimizer reliable (it can seed itself from
    the privileged chart at the center).
    """
    rng = np.random.default_rng(seed)
    p_exact = tuple(Fraction(v) for v in p)
    p_arr = np.array([float(v) for v in p_exact])
    chart = algebraic_privileged_coords(sys, flag_at(sys, p_exact))
    gauge = gauge_factory(1)
    gauge.add_center(p_arr)
    ratios = []
    idx = rng.choice(len(cloud), size=min(3 * pairs, len(cloud)), replace=False)
    for k in idx:
        b = cloud[k]
        _, g = gauge.closest_center(b)
        if not np.isfinite(g) or g <= 1e-6:
            continue
        try:
            est = estimate_distance(sys, p_arr, b, budget=budget, chart=chart)
        except NoTrajectoryFound:
            continue
        ratios.append(est.upper / g)
        if len(ratios) >= pairs:
            break
    return float(np.median(ratios)) if ratios else 1.0


@dataclass(frozen=True)
class PackingProfile:
    counts: tuple[PackingCount, ...]
    calibration: float
    covering_bounds: tuple[tuple[float, int], ...]  # (eps, bound) via half-scale packing
    box_radius: float = 0.0  # scale of the box-uniform candidate family

    @property
    def eps_list(self) -> tuple[float, ...]:
        return tuple(c.eps for c in self.counts)

    @property
    def n_eps(self) -> tuple[int, ...]:
        return tuple(c.count for c in self.counts)


def packing_profile(
    sys: SystemDef,
    p: Sequence[Fraction],
    r: float,
    eps_list: Sequence[float],
    budget: int = 10_000,
    seed: int = 0,
    r_max: int | None = None,
    refine_limit: int = 0,
    refine_budget: int = 4,
    calibration: float | None = None,
    jam_patience: int = 1500,
    batch: int = 1500,
) -> PackingProfile:
    """Greedy maximal packings of B(p, r), run to jamming per scale.

    Candidates stream from random admissible controls; a candidate is
    accepted when its calibrated gauge distance to every accepted center
    exceeds 2 eps.  A scale stops when jam_patience consecutive candidates
    were rejected (the packing is jammed, so the count tracks the true
    maximal packing up to a scale-independent filling factor) or when the
    per-scale candidate budget is exhausted, which flags the count as a lower
    bound.  Near-threshold pairs can be re-decided by the optimizer, up to
    refine_limit per scale.
    """
    p_exact = tuple(Fraction(v) for v in p)
    p_arr = np.array([float(v) for v in p_exact])
    if r_max is None:
        r_max = flag_at(sys, p_exact).degree_of_nonholonomy
    factory = lambda cap: _FrameGauge(sys, r_max, cap)
    sampler = _BoxSampler(sys, p_exact, r)
    box_r = sampler.box_r
    cal_rng = np.random.default_rng(seed)
    kappa = (
        calibration
        if calibration is not None
        else calibrate_gauge(
            sys, p_exact, sampler.sample(200, cal_rng), factory, seed=seed + 1
        )
    )
    counts = []
    for scale_idx, eps in enumerate(sorted(eps_list, reverse=True)):
        if eps >= r:
            counts.append(PackingCount(eps, 1, False, 0))
            continue
        rng = np.random.default_rng(seed + 7919 * (scale_idx + 1))
        gauge = factory(budget + 2)
        gauge.add_center(p_arr)
        accepted = 1
        refinements = 0
        rejected_streak = 0
        examined = 0
        threshold = 2.0 * eps / kappa
        done = False
        exhausted = False
        while not done:
            for cand in sampler.sample(min(batch, budget), rng):
                examined += 1
                g = gauge.min_gauge_to_centers(cand)
                decision = g > threshold
                if (
                    refinements < refine_limit
                    and threshold * 0.9 <= g <= threshold * 1.1
                ):
                    # Borderline: ask the optimizer about the closest center.
                    refinements += 1
                    closest, _ = gauge.closest_center(cand)
                    try:
                        est = estimate_distance(
                            sys, gauge.centers[closest], cand, budget=refine_budget
                        )
                        decision = est.upper > 2.0 * eps
                    except NoTrajectoryFound:
                        pass
                if decision:
                    gauge.add_center(cand)
                    accepted += 1
                    rejected_streak = 0
                else:
                    rejected_streak += 1
                # Constant trials per accepted center across scales keeps the
                # greedy filling factor scale-independent.
                if rejected_streak >= jam_patience:
                    done = True
                    break
                if examined >= budget:
                    done = True
                    exhausted = True
                    break
                if (
                    examined >= min(4 * jam_patience, budget)
                    and examined >= trials_per_accept * accepted
                ):
                    done = True
                    break
        counts.append(
            PackingCount(
                eps=eps,
                count=accepted,
                budget_exhausted=exhausted,
                refinements_used=refinements,
            )
        )
    counts = sorted(counts, key=lambda c: -c.eps)
    by_eps = {c.eps: c.count for c in counts}
    covering = tuple(
        (c.eps, by_eps[c.eps / 2.0]) for c in counts if c.eps / 2.0 in by_eps
    )
    return PackingProfile(
        counts=tuple(counts),
        calibration=kappa,
        covering_bounds=covering,
        box_radius=box_r,
    )


def packing_count(
    sys: SystemDef,
    p: Sequence[Fraction],
    r: float,
    eps: float,
    budget: int = 10_000,
    seed: int = 0,
    **kwargs,
) -> PackingCount:
    """Greedy maximal number of disjoint eps-balls centered in B(p, r)."""
    profile = packing_profile(sys, p, r, [eps], budget=budget, seed=seed, **kwargs)
    return profile.counts[0]


def dimension_fit(
    counts: Sequence[PackingCount | tuple[float, int]],
    min_scales: int = 4,
    gain_threshold: float = 12.0,
    coeff_threshold: float = 0.4,
) -> HausdorffEstimate:
    """Least-squares dimension from log N vs log(1/eps), with log-term test.

    After the raw power-law fit, the residual profile N * eps^Q (Q = rounded
    slope) is regressed on log log(1/eps); a significant positive coefficient
    flags a logarithmic correction, and the dimension is then refit with a
    unit log term removed.
    """
    normalized = [
        (c.eps, c.count) if isinstance(c, PackingCount) else (float(c[0]), int(c[1]))
        for c in counts
    ]
    usable = [(e, n) for e, n in normalized if n > 0]
    if len(usable) < min_scales:
        raise ValueError(f"need at least {min_scales} scales, got {len(usable)}")
    eps = np.array([e for e, _ in usable])
    n_eps = np.array([n for _, n in usable], dtype=float)
    x = np.log(1.0 / eps)
    y = np.log(n_eps)
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    raw_slope = float(coef[1])
    resid_power = y - A @ coef

    # Log-correction test on w = log(N eps^Q): constant vs linear in loglog.
    q_round = max(1, round(raw_slope))
    w = y - q_round * x
    u = np.log(np.maximum(x, 1e-9))
    sse_const = float(((w - w.mean()) ** 2).sum())
    B = np.vstack([np.ones_like(u), u]).T
    coef_log, *_ = np.linalg.lstsq(B, w, rcond=None)
    resid_log = w - B @ coef_log
    sse_log = float((resid_log**2).sum())
    dof = max(len(usable) - 2, 1)
    gain = (
        (sse_const - sse_log) / (sse_log / dof)
        if sse_log > 1e-12
        else (math.inf if sse_const > 1e-10 else 0.0)
    )
    detected = bool(gain > gain_threshold and coef_log[1] > coeff_threshold)

    if detected:
        # Refit the power law with the unit logarithmic factor removed.
        y_adj = y - u
        coef_adj, *_ = np.linalg.lstsq(A, y_adj, rcond=None)
        fitted = float(coef_adj[1])
        residuals = tuple(float(v) for v in (y_adj - A @ coef_adj))
    else:
        fitted = raw_slope
        residuals = tuple(float(v) for v in resid_power)
    return HausdorffEstimate(
        eps_list=tuple(float(e) for e in eps),
        packing_counts=tuple(int(n) for n in n_eps),
        fitted_dimension=fitted,
        log_correction_detected=detected,
        residuals=residuals,
        raw_slope=raw_slope,
        log_model_gain=float(gain),
    )
