"""Commutator flows as explicit bang-bang control sequences.

The composed flow [phi^i, phi^J]_t is a concatenation of unit-direction
segments, so it is represented as a ControlSignal and integrated with the
shared RK4 kernel.  The same sequences double as structured warm starts for
the distance optimizer: a commutator loop of parameter t moves the state by
t^{|I|} X_I plus higher order, at control cost linear in t.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .control import ControlSignal
from .field import SystemDef
from .integrate import endpoint
from .liealgebra import BracketIndex


def _axis(m: int, i: int, sign: float) -> tuple[float, ...]:
    v = [0.0] * m
    v[i - 1] = sign
    return tuple(v)


def commutator_control(index: BracketIndex, t: float, m: int) -> ControlSignal:
    """Control sequence realizing phi^I_t, recursively over the multi-index.

    For I = iJ the word is the group commutator of the two inner words: do i,
    do J, then undo both by the time-reversed negated words.  Undoing must be
    the exact inverse word (not the word at parameter -t), otherwise the
    leading displacement picks up contributions of shorter brackets.
    """
    if not index:
        raise ValueError("empty bracket index")
    if any(not 1 <= i <= m for i in index):
        raise IndexError(f"bracket index {index} out of range 1..{m}")
    if t == 0.0:
        return ControlSignal.empty(m)
    if len(index) == 1:
        sign = 1.0 if t > 0 else -1.0
        return ControlSignal.single(_axis(m, index[0], sign), abs(t))
    head, tail = index[0], index[1:]
    w_head = commutator_control((head,), t, m)
    w_tail = commutator_control(tail, t, m)
    return w_head.concat(w_tail).concat(w_head.reversed()).concat(w_tail.reversed())


def psi_control(index: BracketIndex, t: float, m: int) -> ControlSignal:
    """Control sequence for psi^I_t, the reparametrized commutator flow.

    psi^I_t equals phi^I at parameter t^(1/|I|) for t >= 0, the negative
    parameter branch for odd |I|, and the swapped commutator for even |I|
    with t < 0; its time derivative at 0 is X_I from both sides.
    """
    k = len(index)
    if t == 0.0:
        return ControlSignal.empty(m)
    s = abs(t) ** (1.0 / k)
    if t > 0:
        return commutator_control(index, s, m)
    if k % 2 == 1:
        return commutator_control(index, -s, m)
    # Even length, negative parameter: swap the outer commutator pair.
    head, tail = index[0], index[1:]
    w_tail = commutator_control(tail, s, m)
    w_head = commutator_control((head,), s, m)
    return w_tail.concat(w_head).concat(w_tail.reversed()).concat(w_head.reversed())


def commutator_flow_point(
    sys: SystemDef,
    index: BracketIndex,
    x0: Sequence[float],
    t: float,
    h_max: float = 1e-3,
) -> np.ndarray:
    """Endpoint of phi^I_t applied to x0."""
    control = commutator_control(tuple(index), t, sys.nfields)
    return endpoint(sys.fields, control, x0, h_max=h_max)


def psi_flow_point(
    sys: SystemDef,
    index: BracketIndex,
    x0: Sequence[float],
    t: float,
    h_max: float = 1e-3,
) -> np.ndarray:
    """Endpoint of psi^I_t applied to x0."""
    control = psi_control(tuple(index), t, sys.nfields)
    return endpoint(sys.fields, control, x0, h_max=h_max)


def frame_move_control(
    frame: Sequence[BracketIndex],
    amounts: Sequence[float],
    m: int,
) -> ControlSignal:
    """Concatenated psi loops moving roughly by amounts[j] along each frame bracket.

    This is the constructive-controllability map evaluated at the given
    parameters: cost scales like sum |amounts[j]|^(1/|I_j|).
    """
    out = ControlSignal.empty(m)
    for index, a in zip(frame, amounts):
        if a != 0.0:
            out = out.concat(psi_control(tuple(index), float(a), m))
    return out
