"""Lock-step comparison of the simulator against the word-level reference."""

from __future__ import annotations

from dataclasses import dataclass, field

from .array_model import CellArray, bits_to_int
from .oracle import ReferenceMachine, expected_cycles
from .sequencer import Program, Sequencer


@dataclass
class Mismatch:
    op_index: int
    lane: int | None
    detail: str


@dataclass
class CheckReport:
    ops: int = 0
    cycles: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.mismatches

    def summary(self):
        if self.passed:
            return f"PASS ({self.ops} ops, {self.cycles} cycles)"
        m = self.mismatches[0]
        where = f"op {m.op_index}" + (f", lane {m.lane}" if m.lane is not None else "")
        return f"FAIL at {where}: {m.detail}"


def _first_diff(a: int, b: int):
    x = a ^ b
    return (x & -x).bit_length() - 1


def check_program(program: Program, image: CellArray, stop_at_first: bool = True) -> CheckReport:
    """Run ``program`` on both models, comparing each destination row and cycle count."""
    seq = Sequencer(image.copy())
    seq.reserve(program)
    ref = ReferenceMachine({str(a): bits_to_int(image.read_row(a)) for a in image.rows()}, image.config.lanes)
    report = CheckReport()
    for i, op in enumerate(program):
        reports = seq.execute(op, i)
        want = ref.execute(op)
        got = bits_to_int(seq.array.read_row(op.dest))
        report.ops += 1
        report.cycles += len(reports)
        expect_cycles = expected_cycles(op.opcode.value, op.precision)
        if len(reports) != expect_cycles:
            report.mismatches.append(
                Mismatch(i, None, f"{op.opcode.value} took {len(reports)} cycles, expected {expect_cycles}")
            )
        if got != want:
            lane = _first_diff(got, want)
            report.mismatches.append(
                Mismatch(i, lane, f"{op.opcode.value} -> {op.dest}: got 0x{got:x}, expected 0x{want:x}")
            )
        if report.mismatches and stop_at_first:
            break
    return report
