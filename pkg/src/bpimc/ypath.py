"""Column peripheral (Y-Path): logic decode, FA-Logics, carry chain, write-back mux.

All functions work on lane vectors (``np.uint8`` arrays of 0/1). Inter-lane
dependencies only flow through :func:`carry_chain` and the shift routes, and
never cross a word-group boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .array_model import SenseResult
from .errors import RouteMismatch


class Logic(enum.Enum):
    AND = "AND"
    NAND = "NAND"
    OR = "OR"
    NOR = "NOR"
    XOR = "XOR"
    XNOR = "XNOR"
    NOT = "NOT"


def decode_logic(op, x, y):
    """Derive a logic result from the sense rails.

    Works on scalar bits or lane arrays. For NOT, ``(x, y)`` must come from a
    single-row activation (``y = ~A``); all other ops expect dual-row rails.
    """
    op = Logic(op) if not isinstance(op, Logic) else op
    if op is Logic.AND:
        return x
    if op is Logic.NAND:
        return x ^ 1
    if op is Logic.NOR:
        return y
    if op is Logic.OR:
        return y ^ 1
    if op is Logic.XOR:
        return (x ^ 1) & (y ^ 1)
    if op is Logic.XNOR:
        return x | y
    return y  # NOT


def fa_eval(x, y, c_in):
    """Transmission-gate full adder driven by the AND/NOR rails.

    The carry-in selects between precomputed XNOR/XOR for the sum and between
    ``A | B`` (= ``~y``) and ``A & B`` (= ``x``) for the carry.
    """
    if c_in:
        return x | y, y ^ 1
    return (x ^ 1) & (y ^ 1), x


def carry_chain(sense: SenseResult, segment_width: int, carry_in: int = 0):
    """Ripple :func:`fa_eval` across lanes, cut at every ``segment_width`` lanes.

    Returns ``(sums, carry_outs)`` with one carry-out per segment.
    """
    return kernels.ripple(sense.x, sense.y, segment_width, carry_in)


class Route(enum.Enum):
    LOGIC_OUT = "logic"
    FA_SUM = "sum"
    SHIFT_PASS = "shift"
    ADD_SHIFT = "addshift"


@dataclass(frozen=True)
class LaneRoute:
    mode: Route
    logic_sel: Logic | None = None


@dataclass
class YPathState:
    """Flip-flop state of the peripheral for one bank.

    ``prop_ff`` holds one bit per lane: the last value written back through
    the propagation path. ``mult_ff`` holds the multiplier of each MULT word
    group, already reversed so column ``k`` is consumed on the ``k``-th step.
    ``carry_status`` keeps the top carry-out of each word group from the last
    ADD-class cycle.
    """

    lanes: int
    prop_ff: np.ndarray = field(default=None)
    mult_ff: np.ndarray = field(default=None)
    carry_status: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.prop_ff is None:
            self.prop_ff = np.zeros(self.lanes, dtype=np.uint8)
        if self.mult_ff is None:
            self.mult_ff = np.zeros((0, 0), dtype=np.uint8)
        if self.carry_status is None:
            self.carry_status = np.zeros(0, dtype=np.uint8)

    def copy(self):
        return YPathState(self.lanes, self.prop_ff.copy(), self.mult_ff.copy(), self.carry_status.copy())

    def load_multiplier(self, b_lanes, precision):
        """Latch each ``2*precision`` group's low ``precision`` lanes, reversed."""
        groups = np.asarray(b_lanes, dtype=np.uint8).reshape(-1, 2 * precision)
        self.mult_ff = groups[:, precision - 1 :: -1].copy()

    def multiplier_bit(self, step):
        return self.mult_ff[:, step]


def shift_groups(bits, group_width):
    """Logical left shift by one lane inside each group; lane 0 fills with 0."""
    g = np.asarray(bits, dtype=np.uint8).reshape(-1, group_width)
    out = np.zeros_like(g)
    out[:, 1:] = g[:, :-1]
    return out.reshape(-1)


def route_writeback(routes, sums, sense: SenseResult, state: YPathState, group_width: int, select=None):
    """Pick the write-back value for each lane.

    ``routes`` is a single :class:`LaneRoute` or one per lane; all lanes of a
    word group must agree. ``select`` (one bit per group) applies to ADD_SHIFT
    and FA_SUM during multiplication: a 0 bypasses the adder and forwards the
    accumulator held in ``prop_ff`` instead. ADD_SHIFT latches the write-back
    into ``prop_ff``. Returns ``(writeback, state)``; ``state`` is updated in
    place.
    """
    n = len(sense)
    if n % group_width:
        raise RouteMismatch(f"{n} lanes do not split into groups of {group_width}")
    if isinstance(routes, LaneRoute):
        blocks = [(routes, 0, n)]
    else:
        if len(routes) != n:
            raise RouteMismatch(f"{len(routes)} routes for {n} lanes")
        blocks = []
        for lo in range(0, n, group_width):
            grp = routes[lo : lo + group_width]
            if any(r != grp[0] for r in grp):
                raise RouteMismatch(f"mixed routes inside word group {lo // group_width}")
            blocks.append((grp[0], lo, lo + group_width))

    out = np.empty(n, dtype=np.uint8)
    sel = None if select is None else np.repeat(np.asarray(select, dtype=np.uint8), group_width)
    for route, lo, hi in blocks:
        if route.mode is Route.LOGIC_OUT:
            out[lo:hi] = decode_logic(route.logic_sel, sense.x[lo:hi], sense.y[lo:hi])
        elif route.mode is Route.SHIFT_PASS:
            # single-row read: x carries A onto the carry node
            out[lo:hi] = shift_groups(sense.x[lo:hi], group_width)
        else:
            val = sums[lo:hi]
            if sel is not None:
                val = np.where(sel[lo:hi], val, state.prop_ff[lo:hi])
            if route.mode is Route.FA_SUM:
                out[lo:hi] = val
            else:
                out[lo:hi] = shift_groups(val, group_width)
                state.prop_ff[lo:hi] = out[lo:hi]
    return out, state
