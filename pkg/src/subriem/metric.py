"""Numerical verification of the metric estimates: Ball-Box, first-order
distance expansion, Riemannian comparison, trajectory comparison, scale
frames, uniform boxes and ball volumes.

Distances have no closed form here, so every check is built from optimized
upper bounds plus whatever independent lower bounds exist; reports state
ratio and slope statistics against the predicted scalings.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .charts import (
    FlowChart,
    FlowChartConfig,
    PrivilegedChart,
    algebraic_privileged_coords,
    identity_chart,
    pseudo_norm,
)
from .control import ControlSignal, Trajectory
from .field import SymField, SystemDef
from .flows import commutator_control
from .integrate import compiled, flow_point, simulate as _simulate_fields
from .liealgebra import BracketIndex, BracketTable, Flag, flag_at, iter_bracket_indices
from .nilpotent import NilpotentSystem, integrate_triangular
from .optimize import (
    DistanceConfig,
    DistanceEstimate,
    NoTrajectoryFound,
    estimate_distance,
)

__all__ = [
    "simulate",
    "estimate_distance",
    "DistanceConfig",
    "DistanceEstimate",
    "NoTrajectoryFound",
    "ballbox_check",
    "BallBoxReport",
    "compare_to_nilpotent",
    "DefectCurve",
    "distance_expansion_check",
    "ExpansionReport",
    "riemannian_comparison_check",
    "RiemannianReport",
    "scale_adapted_frame",
    "ScaleFrame",
    "uniform_ballbox_check",
    "UniformBallBoxReport",
    "volume_profile",
    "VolumeReport",
    "sphere_samples",
    "loglog_slope",
]


def simulate(
    sys: SystemDef,
    control: ControlSignal,
    x0: Sequence[float],
    h_max: float = 1e-3,
    bound: float = 1e6,
) -> Trajectory:
    """RK4 trajectory of the control system from x0."""
    return _simulate_fields(sys.fields, control, x0, h_max=h_max, bound=bound)


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log y against log x."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.asarray(ys, dtype=float))
    lx = lx - lx.mean()
    return float((lx * (ly - ly.mean())).sum() / (lx * lx).sum())


def sphere_samples(
    weights: Sequence[int],
    eps: float,
    count: int,
    rng: np.random.Generator,
    include_axes: bool = True,
) -> list[np.ndarray]:
    """Chart points with pseudo-norm exactly eps.

    Axis-aligned points come first, then box-uniform directions rescaled by
    the dilation; the distribution is not uniform, it is a probe set.
    """
    return [
        dilate_sample(d, eps, weights)
        for d in sphere_directions(weights, count, rng, include_axes)
    ]


def sphere_directions(
    weights: Sequence[int],
    count: int,
    rng: np.random.Generator,
    include_axes: bool = True,
) -> list[np.ndarray]:
    """Directions of pseudo-norm 1; dilate to probe one direction at all scales."""
    n = len(weights)
    out: list[np.ndarray] = []
    if include_axes:
        for j in range(n):
            for sign in (1.0, -1.0):
                z = np.zeros(n)
                z[j] = sign
                out.append(z)
    while len(out) < count:
        v = rng.uniform(-1.0, 1.0, size=n)
        if np.all(np.abs(v) < 1e-3):
            continue
        s = pseudo_norm(v, weights)
        out.append(
            np.array([v[j] * (1.0 / s) ** weights[j] for j in range(n)])
        )
    return out[:count]


def dilate_sample(direction: np.ndarray, eps: float, weights: Sequence[int]) -> np.ndarray:
    return np.array([d * eps**w for d, w in zip(direction, weights)])


def _solver_chart(sys: SystemDef, center: Sequence[Fraction]) -> PrivilegedChart:
    """A privileged chart used internally to seed and scale the optimizer."""
    return algebraic_privileged_coords(sys, flag_at(sys, center))


# -- Ball-Box ------------------------------------------------------------------


@dataclass(frozen=True)
class BallBoxScale:
    eps: float
    ratios: tuple[float, ...]
    failures: int

    @property
    def median(self) -> float:
        return float(np.median(self.ratios))

    @property
    def min(self) -> float:
        return float(np.min(self.ratios))

    @property
    def max(self) -> float:
        return float(np.max(self.ratios))


@dataclass(frozen=True)
class BallBoxReport:
    scales: tuple[BallBoxScale, ...]
    slope_median: float
    slope_min: float
    slope_max: float
    spread_factor: float  # max over eps of median ratio / min over eps
    slope_tol: float
    spread_tol: float

    @property
    def passed(self) -> bool:
        # The max-ratio slope is reported but not gated: the most expensive
        # sample of a scale is the least reliable optimizer output.
        return (
            abs(self.slope_median - 1.0) <= self.slope_tol
            and abs(self.slope_min - 1.0) <= 2 * self.slope_tol
            and self.spread_factor <= self.spread_tol
        )

    @property
    def ratio_growth_detected(self) -> bool:
        return not self.passed

    def describe(self) -> str:
        lines = [
            f"eps={s.eps:g}: ratio d/|z| min={s.min:.3f} median={s.median:.3f} "
            f"max={s.max:.3f} failures={s.failures}"
            for s in self.scales
        ]
        lines.append(
            f"log-log slopes: median {self.slope_median:.3f}, min {self.slope_min:.3f}, "
            f"max {self.slope_max:.3f} (target 1); median spread x{self.spread_factor:.2f}"
        )
        lines.append("ball-box check: " + ("PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def ballbox_check(
    sys: SystemDef,
    chart: PrivilegedChart,
    eps_list: Sequence[float] = (0.4, 0.2, 0.1, 0.05),
    samples_per_eps: int = 12,
    seed: int = 0,
    config: DistanceConfig | None = None,
    budget: int | None = 8,
    slope_tol: float = 0.15,
    spread_tol: float = 3.0,
) -> BallBoxReport:
    """Compare optimized distances against the chart pseudo-norm on spheres.

    Sampling and normalization use the chart under test; the optimizer itself
    is seeded from an internally built verified chart, so a merely adapted
    chart fails the check instead of starving the solver.
    """
    rng = np.random.default_rng(seed)
    if config is None:
        # Sphere targets are small moves; a lean grid converges more reliably
        # per optimizer iteration than the general-purpose default.
        config = DistanceConfig(segments=6)
    solver_chart = _solver_chart(sys, chart.center)
    p = np.array([float(c) for c in chart.center])
    directions = sphere_directions(chart.weights, samples_per_eps, rng)
    scales = []
    for eps in eps_list:
        ratios = []
        failures = 0
        for direction in directions:
            z = dilate_sample(direction, eps, chart.weights)
            target = chart.from_chart_float(z)
            try:
                est = estimate_distance(
                    sys, p, target, budget=budget, config=config, chart=solver_chart
                )
            except NoTrajectoryFound:
                failures += 1
                continue
            ratios.append(est.upper / eps)
        scales.append(BallBoxScale(eps=eps, ratios=tuple(ratios), failures=failures))
    eps_arr = [s.eps for s in scales]
    med = [s.median * s.eps for s in scales]
    mn = [s.min * s.eps for s in scales]
    mx = [s.max * s.eps for s in scales]
    medians = [s.median for s in scales]
    return BallBoxReport(
        scales=tuple(scales),
        slope_median=loglog_slope(eps_arr, med),
        slope_min=loglog_slope(eps_arr, mn),
        slope_max=loglog_slope(eps_arr, mx),
        spread_factor=float(max(medians) / min(medians)),
        slope_tol=slope_tol,
        spread_tol=spread_tol,
    )


# -- trajectory comparison ------------------------------------------------------


@dataclass(frozen=True)
class DefectCurve:
    t_list: tuple[float, ...]
    defects: tuple[float, ...]
    fitted_exponent: float | None
    noise_floor: float

    def describe(self) -> str:
        pts = ", ".join(
            f"({t:g}, {d:.3e})" for t, d in zip(self.t_list, self.defects)
        )
        fit = (
            f"slope {self.fitted_exponent:.3f}"
            if self.fitted_exponent is not None
            else "at noise floor"
        )
        return f"defect curve [{pts}], {fit}"


def _truncate_control(control: ControlSignal, t: float) -> ControlSignal:
    durs: list[float] = []
    vals: list[tuple[float, ...]] = []
    remaining = t
    for d, v in zip(control.durations, control.values):
        if remaining <= 0:
            break
        use = min(d, remaining)
        durs.append(use)
        vals.append(v)
        remaining -= use
    if remaining > 1e-12:
        raise ValueError("control shorter than requested time")
    return ControlSignal(tuple(durs), tuple(vals))


def compare_to_nilpotent(
    sys: SystemDef,
    nil: NilpotentSystem,
    chart: PrivilegedChart,
    x0: Sequence[float],
    control: ControlSignal,
    t_list: Sequence[float],
    h_max: float = 1e-4,
    noise_floor: float = 1e-11,
) -> DefectCurve:
    """Pseudo-norm defect between true and truncated trajectories, same control.

    x0 is in chart coordinates; the control is normalized to unit norm first.
    """
    control = control.normalized()
    if control.total_time < max(t_list):
        raise ValueError("control does not cover the largest requested time")
    x0_chart = np.asarray(x0, dtype=float)
    x0_orig = chart.from_chart_float(x0_chart)
    defects = []
    for t in t_list:
        cut = _truncate_control(control, float(t))
        end_sys = simulate(sys, cut, x0_orig, h_max=h_max).endpoint
        end_sys_chart = chart.to_chart_float(end_sys)
        end_nil = integrate_triangular(nil, cut, x0_chart).endpoint
        defects.append(pseudo_norm(end_sys_chart - end_nil, chart.weights))
    usable = [
        (t, d) for t, d in zip(t_list, defects) if d > noise_floor
    ]
    exponent = (
        loglog_slope([t for t, _ in usable], [d for _, d in usable])
        if len(usable) >= 3
        else None
    )
    return DefectCurve(
        t_list=tuple(float(t) for t in t_list),
        defects=tuple(defects),
        fitted_exponent=exponent,
        noise_floor=noise_floor,
    )


# -- first-order distance expansion ---------------------------------------------


@dataclass(frozen=True)
class ExpansionScale:
    eps: float
    max_defect: float  # max |d/d_hat - 1|
    ratios: tuple[float, ...]
    failures: int


@dataclass(frozen=True)
class ExpansionReport:
    scales: tuple[ExpansionScale, ...]
    defect_slope: float | None

    def describe(self) -> str:
        lines = [
            f"eps={s.eps:g}: max|d/d_hat - 1| = {s.max_defect:.4f} "
            f"(n={len(s.ratios)}, failures={s.failures})"
            for s in self.scales
        ]
        if self.defect_slope is not None:
            lines.append(f"defect slope vs eps: {self.defect_slope:.3f} (target ~1)")
        return "\n".join(lines)


def distance_expansion_check(
    sys: SystemDef,
    nil: NilpotentSystem,
    chart: PrivilegedChart,
    eps_list: Sequence[float] = (0.4, 0.2, 0.1),
    samples: int = 8,
    seed: int = 0,
    config: DistanceConfig | None = None,
    budget: int | None = 8,
) -> ExpansionReport:
    """Ratio of true to nilpotent distance on shrinking pseudo-norm spheres.

    Both distances are estimated with the same optimizer and shared warm
    starts (the witness for one system seeds the other) so solver bias cancels
    in the ratio.
    """
    rng = np.random.default_rng(seed)
    if config is None:
        config = DistanceConfig(segments=6)
    nil_sys = nil.to_system()
    nil_chart = identity_chart(
        (Fraction(0),) * nil.dim,
        nil.weights,
        taylor_degree=chart.taylor_degree,
        frame_used=chart.frame_used,
    )
    p = np.array([float(c) for c in chart.center])
    zero = np.zeros(nil.dim)
    directions = sphere_directions(chart.weights, samples, rng)
    scales = []
    for eps in eps_list:
        ratios = []
        failures = 0
        for direction in directions:
            z = dilate_sample(direction, eps, chart.weights)
            try:
                est_nil = estimate_distance(
                    nil_sys, zero, z, budget=budget, config=config, chart=nil_chart
                )
                target = chart.from_chart_float(z)
                est_sys = estimate_distance(
                    sys,
                    p,
                    target,
                    budget=budget,
                    config=config,
                    chart=chart,
                    warm_starts=(est_nil.witness,),
                )
            except NoTrajectoryFound:
                failures += 1
                continue
            ratios.append(est_sys.upper / est_nil.upper)
        max_defect = max(abs(r - 1.0) for r in ratios) if ratios else math.nan
        scales.append(
            ExpansionScale(
                eps=eps, max_defect=max_defect, ratios=tuple(ratios), failures=failures
            )
        )
    defects = [s.max_defect for s in scales if s.max_defect > 1e-9]
    eps_used = [s.eps for s in scales if s.max_defect > 1e-9]
    slope = loglog_slope(eps_used, defects) if len(eps_used) >= 3 else None
    return ExpansionReport(scales=tuple(scales), defect_slope=slope)


# -- Riemannian comparison --------------------------------------------------------


@dataclass(frozen=True)
class RiemannianReport:
    r: int
    c_lower: float
    c_upper: float
    axis_exponent: float
    axis_samples: tuple[tuple[float, float], ...]  # (euclidean, estimated d)

    def describe(self) -> str:
        return (
            f"c d_R <= d <= C d_R^(1/{self.r}) with c={self.c_lower:.3g}, "
            f"C={self.c_upper:.3g}; hardest-direction exponent "
            f"{self.axis_exponent:.3f} (target {1.0 / self.r:.3f})"
        )


def riemannian_comparison_check(
    sys: SystemDef,
    p: Sequence[Fraction],
    samples: int = 6,
    s_list: Sequence[float] | None = None,
    seed: int = 0,
    config: DistanceConfig | None = None,
    budget: int | None = 10,
) -> RiemannianReport:
    """Fit the two-sided Euclidean comparison and the hardest-direction exponent.

    The hardest direction is the top-weight chart axis; targets along it are
    estimated from the largest scale down, each warm-started with the scaled
    witness of the previous one, so the fitted exponent is not polluted by
    uneven solver quality across scales.
    """
    flag = flag_at(sys, p)
    chart = algebraic_privileged_coords(sys, flag)
    r = flag.degree_of_nonholonomy
    n = sys.dim
    p_arr = np.array([float(x) for x in flag.point])
    if s_list is None:
        s_list = [0.4, 0.3, 0.22, 0.16, 0.12, 0.09][: max(samples, 4)]
    pairs = []
    ratios_low = []
    ratios_high = []
    prev: DistanceEstimate | None = None
    prev_eps = None
    for eps in s_list:
        z = np.zeros(n)
        z[n - 1] = eps ** chart.weights[n - 1]
        target = chart.from_chart_float(z)
        warm = ()
        if prev is not None and prev.witness.nsegments:
            warm = (prev.witness.scaled(eps / prev_eps),)
        est = estimate_distance(
            sys, p_arr, target, budget=budget, config=config, chart=chart,
            warm_starts=warm,
        )
        d_r = float(np.linalg.norm(target - p_arr))
        pairs.append((d_r, est.upper))
        ratios_low.append(est.upper / d_r)
        ratios_high.append(est.upper / d_r ** (1.0 / r))
        prev, prev_eps = est, eps
    exponent = loglog_slope([a for a, _ in pairs], [b for _, b in pairs])
    return RiemannianReport(
        r=r,
        c_lower=min(ratios_low),
        c_upper=max(ratios_high),
        axis_exponent=exponent,
        axis_samples=tuple(pairs),
    )


# -- scale-adapted frames (uniform Ball-Box machinery) ---------------------------


@dataclass(frozen=True)
class ScaleFrame:
    point: tuple[Fraction, ...]
    scale: float
    frame: tuple[BracketIndex, ...]
    score: float
    box_chart: FlowChart  # forward = box map, backward = box coordinates

    def box_map(self, x: Sequence[float]) -> np.ndarray:
        return self.box_chart.forward(x)

    def box_coords(self, y: Sequence[float]) -> np.ndarray:
        return self.box_chart.backward(y)

    def box_gauge(self, y: Sequence[float]) -> float:
        """Smallest eps with y inside the closed box of that scale."""
        coords = self.box_coords(y)
        lengths = [len(i) for i in self.frame]
        return max(
            abs(float(c)) ** (1.0 / k) for c, k in zip(coords, lengths)
        )


class DegenerateFrames(Exception):
    """Every candidate frame has zero volume at the point."""


def scale_adapted_frame(
    sys: SystemDef,
    q: Sequence[Fraction],
    eps: float,
    r_max: int | None = None,
    volume_form: Callable[[np.ndarray], float] | None = None,
    flow_h_max: float = 1e-3,
) -> ScaleFrame:
    """Maximize |omega(X_I1 eps^|I1|, ..., X_In eps^|In|)| over bracket tuples.

    Candidates are all n-tuples of brackets of length <= r_max; ties are
    broken lexicographically on the index tuples.  Also returns the box map
    that composes the frame flows, for sampling the associated box.
    """
    qf = tuple(Fraction(v) for v in q)
    if r_max is None:
        r_max = flag_at(sys, qf).degree_of_nonholonomy
    table = BracketTable(sys.fields)
    n = sys.dim
    candidates = []
    for index in iter_bracket_indices(sys.nfields, r_max):
        fieldv = table.get(index)
        if fieldv.is_zero():
            continue
        value = np.array([float(v) for v in fieldv.evaluate(qf)])
        if float(np.max(np.abs(value))) == 0.0:
            continue
        candidates.append((index, value))
    best = None
    for combo in itertools.combinations(range(len(candidates)), n):
        idxs = [candidates[k][0] for k in combo]
        mat = np.column_stack([candidates[k][1] for k in combo])
        if volume_form is None:
            vol = abs(float(np.linalg.det(mat)))
        else:
            vol = abs(float(volume_form(mat)))
        score = vol * eps ** sum(len(i) for i in idxs)
        # Candidates are enumerated in (length, lexicographic) order, so a
        # strict comparison resolves ties toward the lexicographically first.
        if best is None or score > best[0]:
            best = (score, tuple(idxs))
    if best is None or best[0] <= 0.0:
        raise DegenerateFrames(f"all candidate frames degenerate at {qf}")
    score, frame = best
    box_chart = FlowChart(
        center=qf,
        weights=tuple(len(i) for i in frame),
        frame_used=frame,
        frame_fields=tuple(table.get(i) for i in frame),
        config=FlowChartConfig(h_max=flow_h_max, newton_tol=1e-10),
    )
    return ScaleFrame(
        point=qf, scale=eps, frame=frame, score=score, box_chart=box_chart
    )


# -- uniform Ball-Box evidence ---------------------------------------------------


@dataclass(frozen=True)
class UniformBallBoxReport:
    points: tuple[tuple[float, ...], ...]
    eps_list: tuple[float, ...]
    K_box_in_ball: float  # max over corners of d(q, corner)/eps
    K_ball_in_box: float  # max over cost-eps endpoints of box gauge/eps
    per_point_K: tuple[float, ...]

    @property
    def K(self) -> float:
        return max(self.K_box_in_ball, self.K_ball_in_box)

    def describe(self) -> str:
        return (
            f"uniform ball-box: single constant K={self.K:.2f} fits all "
            f"{len(self.points)} base points (box->ball {self.K_box_in_ball:.2f}, "
            f"ball->box {self.K_ball_in_box:.2f}; per-point "
            + ", ".join(f"{k:.2f}" for k in self.per_point_K)
            + ")"
        )


def uniform_ballbox_check(
    sys: SystemDef,
    points: Sequence[Sequence[Fraction]],
    eps_list: Sequence[float] = (0.3, 0.15),
    corner_samples: int = 4,
    ball_samples: int = 6,
    r_max: int | None = None,
    seed: int = 0,
    config: DistanceConfig | None = None,
    budget: int | None = 6,
) -> UniformBallBoxReport:
    """Fit one constant K for Box(q, eps/K) within B(q, eps) within Box(q, K eps).

    Evidence form: corners of the eps-box are at distance <= K eps, and
    endpoints of cost-eps controls have box gauge <= K eps, with the same K
    across all sampled base points and scales.
    """
    rng = np.random.default_rng(seed)
    m = sys.nfields
    per_point = []
    k_box = 0.0
    k_ball = 0.0
    for q in points:
        qf = tuple(Fraction(v) for v in q)
        q_arr = np.array([float(v) for v in qf])
        solver_chart = _solver_chart(sys, qf)
        k_here = 0.0
        for eps in eps_list:
            frame = scale_adapted_frame(sys, qf, eps, r_max=r_max)
            lengths = [len(i) for i in frame.frame]
            # Box corners at parameter eps must be at distance O(eps).
            corners = list(itertools.product((-1.0, 1.0), repeat=sys.dim))
            rng.shuffle(corners)
            for signs in corners[:corner_samples]:
                x = [s * eps**k for s, k in zip(signs, lengths)]
                corner = frame.box_map(x)
                est = estimate_distance(
                    sys, q_arr, corner, budget=budget, config=config,
                    chart=solver_chart,
                )
                ratio = est.upper / eps
                k_box = max(k_box, ratio)
                k_here = max(k_here, ratio)
            # Endpoints of cost-eps controls must sit inside Box(K eps).
            for _ in range(ball_samples):
                nseg = 3
                dirs = rng.normal(size=(nseg, m))
                dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
                control = ControlSignal(
                    tuple([eps / nseg] * nseg),
                    tuple(tuple(row) for row in dirs),
                )
                end = simulate(sys, control, q_arr, h_max=1e-3).endpoint
                gauge = frame.box_gauge(end)
                ratio = gauge / eps
                k_ball = max(k_ball, ratio)
                k_here = max(k_here, ratio)
        per_point.append(k_here)
    return UniformBallBoxReport(
        points=tuple(tuple(float(v) for v in q) for q in points),
        eps_list=tuple(eps_list),
        K_box_in_ball=k_box,
        K_ball_in_box=k_ball,
        per_point_K=tuple(per_point),
    )


# -- ball volumes ------------------------------------------------------------------


@dataclass(frozen=True)
class VolumeReport:
    point: tuple[float, ...]
    eps_list: tuple[float, ...]
    volumes: tuple[float, ...]
    frame_scores: tuple[float, ...]
    ratio_spread: float  # max/min of volume / frame score
    exponent: float

    def describe(self) -> str:
        return (
            f"volume exponent {self.exponent:.3f}; volume/max-frame-score spread "
            f"x{self.ratio_spread:.2f} across scales"
        )


def volume_profile(
    sys: SystemDef,
    q: Sequence[Fraction],
    eps_list: Sequence[float],
    nsamples: int = 3000,
    seed: int = 0,
    r_max: int | None = None,
    voxels_per_axis: int = 8,
) -> VolumeReport:
    """Monte-Carlo volume of the cost-eps reachable set, against the frame score.

    Endpoint clouds of random cost-eps controls are voxelized in the
    scale-adapted frame axes; the count times the cell volume estimates
    vol(B(q, eps)) up to a sampling factor that the ratio statistics absorb.
    """
    rng = np.random.default_rng(seed)
    qf = tuple(Fraction(v) for v in q)
    q_arr = np.array([float(v) for v in qf])
    comp = compiled(sys.fields)
    m = sys.nfields
    vols = []
    scores = []
    for eps in eps_list:
        frame = scale_adapted_frame(sys, qf, eps, r_max=r_max)
        lengths = np.array([len(i) for i in frame.frame], dtype=float)
        mat = np.column_stack(
            [
                np.array([float(v) for v in f.evaluate(qf)])
                for f in frame.box_chart.frame_fields
            ]
        )
        inv = np.linalg.inv(mat)
        cell = (2.0 * eps**lengths) / voxels_per_axis
        seen = set()
        for _ in range(nsamples):
            nseg = 3
            dirs = rng.normal(size=(nseg, m))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            control = ControlSignal(
                tuple([eps / nseg] * nseg), tuple(tuple(row) for row in dirs)
            )
            end = _simulate_fields(comp, control, q_arr, h_max=eps / 8).endpoint
            coords = inv @ (end - q_arr)
            voxel = tuple(np.floor(coords / cell).astype(int))
            seen.add(voxel)
        vols.append(len(seen) * float(np.prod(cell)))
        scores.append(frame.score)
    ratios = [v / s for v, s in zip(vols, scores)]
    return VolumeReport(
        point=tuple(float(v) for v in qf),
        eps_list=tuple(eps_list),
        volumes=tuple(vols),
        frame_scores=tuple(scores),
        ratio_spread=float(max(ratios) / min(ratios)),
        exponent=loglog_slope(eps_list, vols),
    )
