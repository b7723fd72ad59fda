"""Piecewise-constant control signals and integrated trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ControlSignal:
    """Piecewise-constant control: per-segment durations and m-vector values."""

    durations: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(self.durations) != len(self.values):
            raise ValueError("durations and values must have the same length")
        if any(d <= 0 for d in self.durations):
            raise ValueError("segment durations must be positive")
        if self.values:
            m = len(self.values[0])
            if any(len(v) != m for v in self.values):
                raise ValueError("segment values must share one control dimension")

    @property
    def nsegments(self) -> int:
        return len(self.durations)

    @property
    def ncontrols(self) -> int:
        return len(self.values[0]) if self.values else 0

    @property
    def total_time(self) -> float:
        return float(sum(self.durations))

    def l1_cost(self) -> float:
        """Control length: integral of the Euclidean norm of u."""
        return float(
            sum(
                d * math.sqrt(sum(float(x) * float(x) for x in v))
                for d, v in zip(self.durations, self.values)
            )
        )

    def reversed(self) -> "ControlSignal":
        """Time reversal: traverses the same path backwards."""
        return ControlSignal(
            durations=tuple(self.durations[::-1]),
            values=tuple(tuple(-x for x in v) for v in self.values[::-1]),
        )

    def scaled(self, factor: float) -> "ControlSignal":
        """Scale control magnitudes; durations are unchanged."""
        return ControlSignal(
            durations=self.durations,
            values=tuple(tuple(factor * x for x in v) for v in self.values),
        )

    def concat(self, other: "ControlSignal") -> "ControlSignal":
        if self.values and other.values and self.ncontrols != other.ncontrols:
            raise ValueError("control dimensions differ")
        return ControlSignal(
            durations=self.durations + other.durations,
            values=self.values + other.values,
        )

    def normalized(self) -> "ControlSignal":
        """Reparametrize to unit-norm control; zero segments are dropped.

        Preserves the path and the L1 cost; total time becomes the cost.
        """
        durs: list[float] = []
        vals: list[tuple[float, ...]] = []
        for d, v in zip(self.durations, self.values):
            norm = math.sqrt(sum(float(x) * float(x) for x in v))
            if norm * d <= 0.0 or norm == 0.0:
                continue
            durs.append(d * norm)
            vals.append(tuple(float(x) / norm for x in v))
        if not durs:
            raise ValueError("control is identically zero; nothing to normalize")
        return ControlSignal(tuple(durs), tuple(vals))

    @staticmethod
    def empty(ncontrols: int) -> "ControlSignal":
        return ControlSignal((), ())

    @staticmethod
    def single(value: Sequence[float], duration: float) -> "ControlSignal":
        return ControlSignal((float(duration),), (tuple(float(x) for x in value),))

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.values:
            return np.zeros(0), np.zeros((0, 0))
        return (
            np.array(self.durations, dtype=float),
            np.array(self.values, dtype=float),
        )


@dataclass(frozen=True)
class Trajectory:
    """Sampled state path with its generating control and exact length bookkeeping."""

    times: np.ndarray
    states: np.ndarray
    control: ControlSignal | None
    length: float

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    @property
    def start(self) -> np.ndarray:
        return self.states[0]

    def to_csv(self) -> str:
        """CSV export: t,z1..zn,u1..um, 15 significant digits."""
        n = self.states.shape[1]
        m = self.control.ncontrols if self.control else 0
        header = (
            "t,"
            + ",".join(f"z{i + 1}" for i in range(n))
            + ("," + ",".join(f"u{i + 1}" for i in range(m)) if m else "")
        )
        rows = [header]
        cum = np.cumsum([0.0] + list(self.control.durations)) if self.control else None
        for t, state in zip(self.times, self.states):
            if m:
                seg = 0
                if cum is not None and len(cum) > 1:
                    seg = min(
                        int(np.searchsorted(cum, t, side="right") - 1),
                        self.control.nsegments - 1,
                    )
                    seg = max(seg, 0)
                u = self.control.values[seg] if self.control.nsegments else (0.0,) * m
            else:
                u = ()
            cells = [f"{t:.15g}"] + [f"{x:.15g}" for x in state] + [
                f"{x:.15g}" for x in u
            ]
            rows.append(",".join(cells))
        return "\n".join(rows) + "\n"
