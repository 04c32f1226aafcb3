"""Micro-op controller: expands every operation into cycles and executes them.

One cycle = wordline activation, Y-Path evaluation and write-back of one row.
SUB takes a NOT cycle into a scratch dummy row followed by a carry-in=1 ADD.
MULT is the left-shift scheme: clear an accumulator row while latching the
reversed multiplier, copy the multiplicand into the dummy array, then N-1
add-and-shift cycles and one closing add, each gated per word group by the
next multiplier bit.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import ypath
from .array_model import (
    CellArray,
    OpKind,
    Region,
    RowAddress,
    bits_to_int,
    dummy,
    hazard_check,
    int_to_bits,
    pack_words,
)
from .errors import ConfigError, HazardViolation, IMCError, NoFreeDummyRow
from .perf_model import EnergyTable
from .ypath import LaneRoute, Logic, Route, YPathState


class Opcode(enum.Enum):
    NAND = "NAND"
    AND = "AND"
    NOR = "NOR"
    OR = "OR"
    XNOR = "XNOR"
    XOR = "XOR"
    NOT = "NOT"
    SHL = "SHL"
    ADD = "ADD"
    ADDSH = "ADDSH"
    SUB = "SUB"
    MULT = "MULT"
    WRITE = "WRITE"
    COPY = "COPY"


LOGIC_OPS = frozenset({Opcode.NAND, Opcode.AND, Opcode.NOR, Opcode.OR, Opcode.XNOR, Opcode.XOR, Opcode.NOT})
UNARY_OPS = frozenset({Opcode.NOT, Opcode.SHL, Opcode.COPY})
MACRO_OPS = frozenset({Opcode.SUB, Opcode.MULT})


def src_count(opcode: Opcode) -> int:
    if opcode is Opcode.WRITE:
        return 0
    return 1 if opcode in UNARY_OPS else 2


def auto_separator(opcode: Opcode, dest: RowAddress) -> bool:
    """Default BL-separator policy: engage for every dummy-array write-back."""
    return opcode in MACRO_OPS or dest.region is Region.DUMMY


@dataclass(frozen=True)
class MicroOp:
    opcode: Opcode
    bank: int
    src: tuple
    dest: RowAddress
    precision: int
    carry_in: int = 0
    separator: bool = False
    imm: int | None = None

    def __post_init__(self):
        n = src_count(self.opcode)
        if len(self.src) != n:
            raise ValueError(f"{self.opcode.value} takes {n} source row(s), got {len(self.src)}")
        if self.opcode is Opcode.WRITE and self.imm is None:
            raise ValueError("WRITE needs an immediate")
        if self.carry_in and self.opcode is not Opcode.ADD:
            raise ValueError("carry_in is only meaningful for ADD")


@dataclass(frozen=True)
class Program:
    ops: tuple = ()
    vdd: float | None = None

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)


@dataclass
class CycleReport:
    cycle: int
    op_index: int
    opcode: str
    step: str
    bank: int
    rows: tuple
    dest: RowAddress | None
    lanes: np.ndarray
    energy_fJ: float = 0.0
    separator: bool = False

    def to_json(self) -> str:
        return json.dumps(
            {
                "cycle": self.cycle,
                "op_index": self.op_index,
                "opcode": self.opcode,
                "step": self.step,
                "bank": self.bank,
                "rows": [str(r) for r in self.rows],
                "dest": None if self.dest is None else str(self.dest),
                "lanes_written": f"0x{bits_to_int(self.lanes):x}",
                "energy_fJ": self.energy_fJ,
            }
        )


def trace_to_jsonl(trace) -> str:
    return "".join(r.to_json() + "\n" for r in trace)


class Sequencer:
    """Owns a :class:`CellArray` and one :class:`YPathState` per bank.

    ``observer(report, array)`` is called after every cycle, with the array
    already updated.
    """

    def __init__(self, array: CellArray, energy: EnergyTable | None = None, observer: Callable | None = None):
        self.array = array
        self.config = array.config
        self.energy = energy or EnergyTable()
        self.observer = observer
        self.states = [YPathState(self.config.lanes) for _ in range(self.config.banks)]
        self.cycle = 0
        self.trace: list[CycleReport] = []
        # dummy rows named by the program itself; never used as scratch
        self.reserved: set[RowAddress] = set()

    # -- one cycle -----------------------------------------------------------

    def _cycle(self, op_index, op, step, rows, dest, writeback, separator):
        """Check, run and record one cycle. ``writeback(sense)`` returns lane bits."""
        reason = hazard_check(rows, dest, OpKind.WRITE if not rows else OpKind.SINGLE_CYCLE, separator)
        if reason:
            raise HazardViolation(reason, op_index)
        sense = self.array.activate(rows) if rows else None
        lanes = writeback(sense)
        bank = dest.bank
        if separator:
            self.array.set_separator(bank, False)
        self.array.write_row(dest, lanes)
        if separator:
            self.array.set_separator(bank, True)
        report = CycleReport(self.cycle, op_index, op.opcode.value, step, bank, tuple(rows), dest, lanes, 0.0, separator)
        self.cycle += 1
        self.trace.append(report)
        if self.observer is not None:
            self.observer(report, self.array)
        return report

    def _book_energy(self, report, op):
        report.energy_fJ = self.energy.energy_of(op.opcode.value, op.precision, op.separator)

    def _scratch(self, op, count, op_index):
        used = set(op.src) | {op.dest} | self.reserved
        free = [dummy(op.bank, r) for r in range(self.config.dummy_rows) if dummy(op.bank, r) not in used]
        if len(free) < count:
            raise NoFreeDummyRow(f"{op.opcode.value} needs {count} scratch dummy row(s), {len(free)} free", op_index)
        return free[:count]

    def _check_precision(self, op, op_index):
        mult = op.opcode is Opcode.MULT
        if not self.config.supports(op.precision, mult=mult):
            width = 2 * op.precision if mult else op.precision
            err = ConfigError(f"op {op_index}: {self.config.lanes} lanes do not split into {width}-lane groups")
            err.op_index = op_index
            raise err

    # -- operations ----------------------------------------------------------

    def execute(self, op: MicroOp, op_index: int = 0) -> list[CycleReport]:
        """Run one operation; returns its cycle reports."""
        self._check_precision(op, op_index)
        mode = OpKind.MULTI_CYCLE if op.opcode in MACRO_OPS else OpKind.SINGLE_CYCLE
        if op.opcode is Opcode.WRITE:
            mode = OpKind.WRITE
        reason = hazard_check(op.src, op.dest, mode, op.separator and mode is not OpKind.MULTI_CYCLE)
        if reason:
            raise HazardViolation(reason, op_index)
        for addr in (*op.src, op.dest):
            self.array.validate(addr)
        start = len(self.trace)
        handler = {
            Opcode.ADD: self.exec_add,
            Opcode.ADDSH: self.exec_add_shift,
            Opcode.SUB: self.exec_sub,
            Opcode.MULT: self.exec_mult,
            Opcode.WRITE: self.exec_write,
            Opcode.COPY: self.exec_copy,
            Opcode.SHL: self.exec_shl,
        }.get(op.opcode, self.exec_logic)
        handler(op, op_index)
        reports = self.trace[start:]
        self._book_energy(reports[-1], op)
        return reports

    def exec_logic(self, op, op_index=0):
        sel = Logic(op.opcode.value)
        route = LaneRoute(Route.LOGIC_OUT, sel)
        state = self.states[op.bank]

        def wb(sense):
            return ypath.route_writeback(route, None, sense, state, op.precision)[0]

        self._cycle(op_index, op, "", op.src, op.dest, wb, op.separator)

    def exec_shl(self, op, op_index=0):
        state = self.states[op.bank]
        route = LaneRoute(Route.SHIFT_PASS)

        def wb(sense):
            return ypath.route_writeback(route, None, sense, state, op.precision)[0]

        self._cycle(op_index, op, "", op.src, op.dest, wb, op.separator)

    def exec_copy(self, op, op_index=0):
        self._cycle(op_index, op, "", op.src, op.dest, lambda s: s.x.copy(), op.separator)

    def exec_write(self, op, op_index=0):
        lanes = int_to_bits(op.imm, self.config.lanes)
        self._cycle(op_index, op, "", (), op.dest, lambda s: lanes, op.separator)

    def _adder(self, state, width, carry_in, route, select=None):
        def wb(sense):
            sums, couts = ypath.carry_chain(sense, width, carry_in)
            state.carry_status = couts
            return ypath.route_writeback(route, sums, sense, state, width, select)[0]

        return wb

    def exec_add(self, op, op_index=0):
        state = self.states[op.bank]
        wb = self._adder(state, op.precision, op.carry_in, LaneRoute(Route.FA_SUM))
        self._cycle(op_index, op, "", op.src, op.dest, wb, op.separator)

    def exec_add_shift(self, op, op_index=0):
        state = self.states[op.bank]
        wb = self._adder(state, op.precision, 0, LaneRoute(Route.ADD_SHIFT))
        self._cycle(op_index, op, "", op.src, op.dest, wb, op.separator)

    def exec_sub(self, op, op_index=0):
        (tmp,) = self._scratch(op, 1, op_index)
        a_row, b_row = op.src
        state = self.states[op.bank]
        not_route = LaneRoute(Route.LOGIC_OUT, Logic.NOT)

        def invert(sense):
            return ypath.route_writeback(not_route, None, sense, state, op.precision)[0]

        self._cycle(op_index, op, "not", (b_row,), tmp, invert, op.separator)
        wb = self._adder(state, op.precision, 1, LaneRoute(Route.FA_SUM))
        self._cycle(op_index, op, "add", (a_row, tmp), op.dest, wb, op.separator and op.dest.region is Region.DUMMY)

    def exec_mult(self, op, op_index=0):
        n = op.precision
        width = 2 * n
        acc, mcand = self._scratch(op, 2, op_index)
        a_row, b_row = op.src
        state = self.states[op.bank]
        low = np.tile(np.r_[np.ones(n, np.uint8), np.zeros(n, np.uint8)], self.config.lanes // width)

        def clear(sense):
            state.load_multiplier(sense.x, n)
            state.prop_ff[:] = 0
            return np.zeros(self.config.lanes, dtype=np.uint8)

        self._cycle(op_index, op, "init.clear", (b_row,), acc, clear, op.separator)
        self._cycle(op_index, op, "init.copy", (a_row,), mcand, lambda s: s.x & low, op.separator)
        for k in range(n - 1):
            wb = self._adder(state, width, 0, LaneRoute(Route.ADD_SHIFT), state.multiplier_bit(k))
            self._cycle(op_index, op, f"addsh{k}", (acc, mcand), acc, wb, op.separator)
        wb = self._adder(state, width, 0, LaneRoute(Route.FA_SUM), state.multiplier_bit(n - 1))
        self._cycle(op_index, op, "add", (acc, mcand), op.dest, wb, op.separator and op.dest.region is Region.DUMMY)

    # -- programs ------------------------------------------------------------

    def reserve(self, ops):
        """Keep every dummy row named by ``ops`` out of the scratch pool."""
        self.reserved = {a for op in ops for a in (*op.src, op.dest) if a.region is Region.DUMMY}

    def run(self, program: Program | Sequence[MicroOp]):
        ops = list(program)
        self.reserve(ops)
        for i, op in enumerate(ops):
            try:
                self.execute(op, i)
            except IMCError as exc:
                if getattr(exc, "op_index", None) is None:
                    exc.op_index = i
                raise
        return self.trace


def run_program(program, initial: CellArray, energy: EnergyTable | None = None, observer=None):
    """Execute ``program`` on a copy of ``initial``; returns ``(final, trace)``."""
    seq = Sequencer(initial.copy(), energy, observer)
    trace = seq.run(program)
    return seq.array, trace


def replay(trace, initial: CellArray) -> CellArray:
    """Re-apply only the recorded write-backs to a copy of ``initial``."""
    out = initial.copy()
    for r in trace:
        out.write_row(r.dest, r.lanes)
    return out


def lanes_from_words(words, precision, lanes, mult=False):
    """Pad packed words out to a full row of ``lanes`` bits."""
    width = 2 * precision if mult else precision
    bits = pack_words(words, precision, width)
    if len(bits) > lanes:
        raise ValueError("too many words for the row")
    return np.concatenate([bits, np.zeros(lanes - len(bits), np.uint8)])
