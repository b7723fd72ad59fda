"""Iterated brackets, bracket flags, growth vectors and adapted frames.

Everything structural here is exact: bracket coefficients are rational
polynomials and ranks come from rational Gaussian elimination, so growth
vectors and weights carry no floating-point error.  Only the controllability
certificate at the end is numeric (it differentiates composed flows).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .field import SymField, SystemDef, lie_bracket
from .linalg import RationalEchelon
from .poly import Rational

BracketIndex = tuple[int, ...]  # indices into the frame, 1-based


class ChowFails(Exception):
    """The bracket flag stalled below full rank up to the depth cap."""

    def __init__(self, point, rank: int, depth_cap: int):
        self.point = tuple(point)
        self.rank = rank
        self.depth_cap = depth_cap
        super().__init__(
            f"bracket flag stalls at rank {rank} up to length {depth_cap} at {self.point}"
        )


def bracket_str(index: BracketIndex) -> str:
    """Render a multi-index as a nested bracket, e.g. (1,1,2) -> [1,[1,2]]."""
    if len(index) == 1:
        return str(index[0])
    return f"[{index[0]},{bracket_str(index[1:])}]"


def iter_bracket_indices(m: int, max_length: int) -> Iterator[BracketIndex]:
    """All multi-indices over {1..m}, by increasing length then lexicographic."""
    for length in range(1, max_length + 1):
        yield from itertools.product(range(1, m + 1), repeat=length)


class BracketTable:
    """Cache of iterated right-nested brackets of a frame of fields."""

    def __init__(self, fields: Sequence[SymField]):
        self.fields = tuple(fields)
        self.m = len(fields)
        self._cache: dict[BracketIndex, SymField] = {
            (i + 1,): f for i, f in enumerate(fields)
        }

    def get(self, index: BracketIndex) -> SymField:
        if not index:
            raise ValueError("empty bracket index")
        cached = self._cache.get(index)
        if cached is not None:
            return cached
        head = index[0]
        if not 1 <= head <= self.m:
            raise IndexError(f"field index {head} out of range 1..{self.m}")
        inner = self.get(index[1:])
        value = lie_bracket(self.fields[head - 1], inner)
        self._cache[index] = value
        return value


def iterated_bracket(sys: SystemDef, index: BracketIndex) -> SymField:
    """Right-nested bracket X_I = [X_i1, [..., [X_ik-1, X_ik]...]."""
    return BracketTable(sys.fields).get(tuple(index))


@dataclass(frozen=True)
class Flag:
    """Per-point bracket-flag data."""

    point: tuple[Fraction, ...]
    growth_vector: tuple[int, ...]
    weights: tuple[int, ...]
    degree_of_nonholonomy: int
    adapted_frame: tuple[BracketIndex, ...]
    regular: bool | None = None

    @property
    def dim(self) -> int:
        return len(self.weights)

    def describe(self) -> str:
        frame = ", ".join(bracket_str(i) for i in self.adapted_frame)
        reg = {True: "regular", False: "singular", None: "regularity unknown"}[
            self.regular
        ]
        return (
            f"growth {self.growth_vector}, weights {self.weights}, "
            f"r={self.degree_of_nonholonomy}, frame [{frame}], {reg}"
        )


def flag_at(
    sys: SystemDef,
    point: Sequence[Rational],
    depth_cap: int = 8,
    table: BracketTable | None = None,
) -> Flag:
    """Exact growth vector, weights and greedy adapted frame at a point.

    Brackets are enumerated by increasing length with lexicographic
    tie-breaking, so the adapted frame is deterministic.
    """
    if depth_cap < 1:
        raise ValueError("depth_cap must be at least 1")
    p = tuple(Fraction(x) for x in point)
    if len(p) != sys.dim:
        raise ValueError(f"point has {len(p)} coordinates, expected {sys.dim}")
    table = table or BracketTable(sys.fields)
    echelon = RationalEchelon(sys.dim)
    growth: list[int] = []
    frame: list[BracketIndex] = []
    weights: list[int] = []
    for length in range(1, depth_cap + 1):
        for index in itertools.product(range(1, sys.nfields + 1), repeat=length):
            value = table.get(index).evaluate(p)
            if echelon.add(value):
                frame.append(index)
                weights.append(length)
        growth.append(echelon.rank)
        if echelon.rank == sys.dim:
            return Flag(
                point=p,
                growth_vector=tuple(growth),
                weights=tuple(weights),
                degree_of_nonholonomy=length,
                adapted_frame=tuple(frame),
            )
    raise ChowFails(p, echelon.rank, depth_cap)


@dataclass(frozen=True)
class RegularityEvidence:
    """Outcome of probing the growth vector near a point.

    regular=True means no counterexample was found among the probes; it is
    evidence, not a proof.
    """

    flag: Flag
    regular: bool
    witness_point: tuple[Fraction, ...] | None
    witness_growth: tuple[int, ...] | None
    probes_checked: int

    def describe(self) -> str:
        if self.regular:
            return (
                f"regular (no counterexample among {self.probes_checked} probe points)"
            )
        return (
            f"singular: growth {self.witness_growth} at nearby point "
            f"{tuple(float(x) for x in self.witness_point)}"
        )


def is_regular(
    sys: SystemDef,
    point: Sequence[Rational],
    depth_cap: int = 8,
    probe_radius: Rational = Fraction(1, 20),
    probe_count: int = 24,
    seed: int = 0,
) -> RegularityEvidence:
    """Probe pseudo-random rational points near `point` for growth changes."""
    base_flag = flag_at(sys, point, depth_cap)
    table = BracketTable(sys.fields)
    rng = random.Random(seed)
    radius = Fraction(probe_radius)
    denom = 997  # prime denominator keeps probe points generic
    p = base_flag.point
    checked = 0
    for _ in range(probe_count):
        offset = [
            radius * Fraction(rng.randint(-denom, denom), denom) for _ in range(sys.dim)
        ]
        q = tuple(a + b for a, b in zip(p, offset))
        probe = flag_at(sys, q, depth_cap, table=table)
        checked += 1
        if probe.growth_vector != base_flag.growth_vector:
            return RegularityEvidence(
                flag=replace(base_flag, regular=False),
                regular=False,
                witness_point=q,
                witness_growth=probe.growth_vector,
                probes_checked=checked,
            )
    return RegularityEvidence(
        flag=replace(base_flag, regular=True),
        regular=True,
        witness_point=None,
        witness_growth=None,
        probes_checked=checked,
    )


class SingularJacobian(Exception):
    """The composed-flow map has numerically deficient rank."""


@dataclass(frozen=True)
class ChowCertificate:
    """Numeric invertibility evidence for the composed commutator-flow map."""

    jacobian: np.ndarray
    condition_number: float
    frame_values: np.ndarray
    column_defect: float  # max |J[:,i] - X_{I_i}(p)| over columns

    def describe(self) -> str:
        return (
            f"composed-flow Jacobian condition number {self.condition_number:.3g}, "
            f"column defect {self.column_defect:.2e}"
        )


def chow_certificate(
    sys: SystemDef,
    point: Sequence[Rational],
    flag: Flag | None = None,
    fd_step: float = 1e-4,
    rank_tol: float = 1e-6,
    h_max: float = 1e-4,
) -> ChowCertificate:
    """Differentiate t -> psi^{I_n}_{t_n} o ... o psi^{I_1}_{t_1}(p) at 0.

    Along the i-th axis all other flows are the identity, so the columns are
    two-sided finite differences of single psi flows; they must reproduce the
    adapted frame values at p.
    """
    from .flows import psi_flow_point  # local import to avoid a cycle

    flag = flag or flag_at(sys, point)
    p = np.array([float(x) for x in flag.point])
    n = sys.dim
    table = BracketTable(sys.fields)
    cols = []
    frame_vals = []
    for index in flag.adapted_frame:
        plus = psi_flow_point(sys, index, p, fd_step, h_max=h_max)
        minus = psi_flow_point(sys, index, p, -fd_step, h_max=h_max)
        cols.append((plus - minus) / (2.0 * fd_step))
        frame_vals.append(
            np.array([float(x) for x in table.get(index).evaluate(flag.point)])
        )
    jac = np.column_stack(cols)
    frame_matrix = np.column_stack(frame_vals)
    svals = np.linalg.svd(jac, compute_uv=False)
    if svals[-1] <= rank_tol * max(1.0, svals[0]):
        raise SingularJacobian(
            f"numeric rank < {n} (singular values {svals})"
        )
    cond = float(svals[0] / svals[-1])
    defect = float(np.max(np.abs(jac - frame_matrix)))
    return ChowCertificate(
        jacobian=jac,
        condition_number=cond,
        frame_values=frame_matrix,
        column_defect=defect,
    )


def bracket_span_consistent(sys: SystemDef, flag: Flag, max_length: int) -> bool:
    """Check every bracket value lies in the span of frame values of length <= |I|."""
    table = BracketTable(sys.fields)
    p = flag.point
    by_length: dict[int, RationalEchelon] = {}
    for s in range(1, max_length + 1):
        ech = RationalEchelon(sys.dim)
        for index, w in zip(flag.adapted_frame, flag.weights):
            if w <= s:
                ech.add(table.get(index).evaluate(p))
        by_length[s] = ech
    for index in iter_bracket_indices(sys.nfields, max_length):
        value = table.get(index).evaluate(p)
        if not by_length[len(index)].contains(value):
            return False
    return True
