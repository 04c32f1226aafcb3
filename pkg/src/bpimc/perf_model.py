"""Analytical energy, delay, frequency and throughput model of the macro.

Every number here is a parameter, not a simulation result: energies are
post-layout figures per word operation, frequency is interpolated between
measured supply points, and the bit-serial baseline is a cycle-count model.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .config import PRECISIONS
from .errors import ConfigError, GeometryTooSmall, UnknownEntry, VddOutOfRange

# fJ per word operation; (op, precision, separator) with separator=None for ADD
TABLE_II = {
    ("ADD", 2, None): 68.2,
    ("ADD", 4, None): 138.4,
    ("ADD", 8, None): 274.8,
    ("SUB", 2, False): 152.3,
    ("SUB", 4, False): 307.5,
    ("SUB", 8, False): 612.2,
    ("SUB", 2, True): 136.5,
    ("SUB", 4, True): 274.9,
    ("SUB", 8, True): 545.4,
    ("MULT", 2, False): 357.4,
    ("MULT", 4, False): 1167.6,
    ("MULT", 8, False): 4186.4,
    ("MULT", 2, True): 296.0,
    ("MULT", 4, True): 922.4,
    ("MULT", 8, True): 3394.8,
}

SEPARATED_OPS = ("SUB", "MULT")

# Reported values echoed beside model output; never used in computation.
REPORTED = {
    "tops_per_watt": {"ADD": 8.09, "MULT": 0.68, "vdd": 0.6, "freq_hz": 372e6},
    "tops_per_watt_abstract_order": {"ADD": 0.68, "MULT": 8.09},
    "bl_compute_delay_ratio": 0.22,
    "fa_speedup": (1.8, 2.2),
    "area_overhead": 0.052,
}


def _sep_key(op, separator):
    return bool(separator) if op in SEPARATED_OPS else None


@dataclass
class EnergyTable:
    """Energy per word operation in fJ.

    ADD, SUB and MULT come from the measured table. Any other opcode (logic,
    SHL, ADDSH, WRITE, COPY) costs the same-precision ADD energy unless an
    explicit entry is set in ``extra``.
    """

    entries: dict = field(default_factory=lambda: dict(TABLE_II))
    extra: dict = field(default_factory=dict)

    def energy_of(self, op: str, precision: int, separator: bool = False) -> float:
        op = op.upper()
        if op in ("ADD",) + SEPARATED_OPS:
            key = (op, precision, _sep_key(op, separator))
            if key not in self.entries:
                raise UnknownEntry(f"no energy entry for {op} at {precision}-bit")
            return self.entries[key]
        if (op, precision) in self.extra:
            return self.extra[(op, precision)]
        if ("ADD", precision, None) in self.entries:
            return self.entries[("ADD", precision, None)]
        raise UnknownEntry(f"no energy entry for {op} at {precision}-bit")

    def rows(self):
        """(op, precision, separator-label, fJ) for every measured entry."""
        order = {"ADD": 0, "SUB": 1, "MULT": 2}
        for (op, p, sep), fj in sorted(
            self.entries.items(), key=lambda kv: (order.get(kv[0][0], 9), kv[0][1], kv[0][2] is not True)
        ):
            label = "none" if sep is None else ("with" if sep else "without")
            yield op, p, label, fj

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["op", "precision", "separator", "fJ"])
        for row in self.rows():
            w.writerow(row)
        return buf.getvalue()

    def apply_kv(self, kv):
        """Override entries from ``energy.<OP>.<bits>[.with|.without]`` keys."""
        for key, value in kv.items():
            parts = key.split(".")
            if parts[0] != "energy":
                continue
            try:
                op, bits = parts[1].upper(), int(parts[2])
                fj = float(value)
            except (IndexError, ValueError) as exc:
                raise ConfigError(f"bad energy key {key!r}") from exc
            if op in SEPARATED_OPS:
                if len(parts) != 4 or parts[3] not in ("with", "without"):
                    raise ConfigError(f"{key!r}: {op} needs a .with or .without suffix")
                self.entries[(op, bits, parts[3] == "with")] = fj
            elif op == "ADD":
                self.entries[("ADD", bits, None)] = fj
            else:
                self.extra[(op, bits)] = fj
        return self


def ledger_total(energies) -> float:
    # fsum is exactly rounded, so the total does not depend on order
    return math.fsum(energies)


@dataclass
class DelayModel:
    """Critical-path components of one cycle, in picoseconds.

    Only the 8-bit logic chain (222 ps, the 16-lane ripple of an 8-bit MULT
    group) is measured; the other three components are an assumed split that
    makes the 1.0 V period 444 ps. Unset chain lengths scale linearly with
    the number of lanes rippled.
    """

    bl_compute: float = 130.0
    sense: float = 40.0
    writeback: float = 52.0
    logic: dict = field(default_factory=lambda: {8: 222.0})

    def logic_chain(self, precision: int) -> float:
        if precision in self.logic:
            return self.logic[precision]
        ref_p, ref_ps = max(self.logic.items())
        return ref_ps * precision / ref_p

    def components(self, precision: int = 8) -> dict:
        return {
            "bl_compute": self.bl_compute,
            "sense": self.sense,
            "logic_chain": self.logic_chain(precision),
            "writeback": self.writeback,
        }

    def period_ps(self, precision: int = 8) -> float:
        return math.fsum(self.components(precision).values())

    def frequency_hz(self, precision: int = 8) -> float:
        return 1e12 / self.period_ps(precision)

    def apply_kv(self, kv):
        for key, value in kv.items():
            if not key.startswith("delay."):
                continue
            name = key[len("delay.") :]
            try:
                if name.startswith("logic."):
                    self.logic[int(name.split(".")[1])] = float(value)
                elif name in ("bl_compute", "sense", "writeback"):
                    setattr(self, name, float(value))
                else:
                    raise ConfigError(f"unknown delay key {key!r}")
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
        return self


@dataclass
class FreqVoltageTable:
    """Measured (vdd, max frequency) anchors with linear interpolation.

    Above the highest anchor the last segment is extended linearly.
    """

    anchors: tuple = ((0.6, 372e6), (1.0, 2.25e9))
    vmin: float = 0.6
    vmax: float = 1.1

    def max_frequency(self, vdd: float) -> float:
        if not self.vmin <= vdd <= self.vmax:
            raise VddOutOfRange(f"vdd {vdd} V outside [{self.vmin}, {self.vmax}] V")
        pts = sorted(self.anchors)
        for v, f in pts:
            if vdd == v:
                return f
        if vdd <= pts[0][0]:
            (v0, f0), (v1, f1) = pts[0], pts[1]
        else:
            (v0, f0), (v1, f1) = pts[-2], pts[-1]
            for lo, hi in zip(pts, pts[1:]):
                if lo[0] <= vdd <= hi[0]:
                    (v0, f0), (v1, f1) = lo, hi
                    break
        return f0 + (vdd - v0) * (f1 - f0) / (v1 - v0)

    def apply_kv(self, kv):
        points = dict(self.anchors)
        changed = False
        for key, value in kv.items():
            try:
                if key.startswith("freq."):
                    points[float(key[len("freq.") :])] = float(value)
                    changed = True
                elif key == "vdd_min":
                    self.vmin = float(value)
                elif key == "vdd_max":
                    self.vmax = float(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
        if changed:
            if len(points) < 2:
                raise ConfigError("need at least two frequency anchors")
            self.anchors = tuple(sorted(points.items()))
        return self


# Table I cycle counts; N is the word width.
def op_cycles(op: str, precision: int) -> int:
    op = op.upper()
    if op == "SUB":
        return 2
    if op == "MULT":
        return precision + 2
    return 1


@dataclass
class TopsReport:
    op: str
    precision: int
    vdd: float
    value: float
    formula: str
    inputs: dict
    reported: dict

    def __str__(self):
        ins = ", ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in self.inputs.items())
        rep = self.reported
        return (
            f"{self.op} {self.precision}-bit @ {self.vdd} V: {self.value:.4f} TOPS/W\n"
            f"  formula: {self.formula}\n"
            f"  inputs:  {ins}\n"
            f"  reported (0.6 V, 372 MHz): ADD {rep['ADD']}, MULT {rep['MULT']}"
            f" (abstract order: ADD {rep['abstract_ADD']}, MULT {rep['abstract_MULT']})"
        )


def tops_per_watt(
    op: str,
    precision: int,
    vdd: float,
    lanes_active: int,
    separator: bool = True,
    energy: EnergyTable | None = None,
    freq: FreqVoltageTable | None = None,
) -> TopsReport:
    """Energy efficiency of a stream of ``op`` on ``lanes_active`` lanes.

    Each word in flight costs one table energy per operation, so frequency
    and word count cancel and the result is ``1000 / fJ``; they are kept in
    the report to show the throughput the figure corresponds to.
    """
    energy = energy or EnergyTable()
    freq = freq or FreqVoltageTable()
    op = op.upper()
    f = freq.max_frequency(vdd)
    e_fj = energy.energy_of(op, precision, separator)
    group = 2 * precision if op == "MULT" else precision
    words = lanes_active // group
    cycles = op_cycles(op, precision)
    ops_per_s = words * f / cycles
    watts = words * e_fj * 1e-15 * f / cycles
    value = 0.0 if words == 0 else ops_per_s / watts / 1e12
    rep = REPORTED["tops_per_watt"]
    return TopsReport(
        op=op,
        precision=precision,
        vdd=vdd,
        value=value,
        formula="(words*f/cycles) / (words*E*f/cycles) / 1e12",
        inputs={
            "words": words,
            "f_hz": f,
            "cycles": cycles,
            "E_fJ": e_fj,
            "ops_per_s": ops_per_s,
            "power_W": watts,
        },
        reported={
            "ADD": rep["ADD"],
            "MULT": rep["MULT"],
            "abstract_ADD": REPORTED["tops_per_watt_abstract_order"]["ADD"],
            "abstract_MULT": REPORTED["tops_per_watt_abstract_order"]["MULT"],
        },
    )


@dataclass(frozen=True)
class BenchRow:
    arch: str
    op: str
    N: int
    bl_size: int
    op_count: int
    total_cycles: int
    cycles_per_op: float

    @property
    def label(self):
        return f"{self.arch}:{self.op}"


SWEEP_HEADER = ["arch", "N", "bl_size", "op_count", "total_cycles", "cycles_per_op"]


def bitserial_cycles(op: str, precision: int, add_extra: int = 1) -> int:
    """Bit-serial baseline: ADD walks N bits plus one, MULT is N^2."""
    return precision * precision if op == "MULT" else precision + add_extra


def compare_bitserial(
    N: int,
    bl_size: int,
    op_count: int,
    mux_ratio: int = 4,
    ops=("ADD", "MULT"),
    serial_add_extra: int = 1,
) -> list[BenchRow]:
    """Cycle cost of ``op_count`` independent N-bit ops on a ``bl_size``-column array.

    Bit-serial stores one word per column; bit-parallel packs
    ``bl_size / (mux_ratio * N)`` words per row (``2N`` lanes for MULT).
    """
    if N not in PRECISIONS:
        raise ConfigError(f"N must be one of {PRECISIONS}")
    if bl_size < mux_ratio * 2 * N:
        raise GeometryTooSmall(f"bl_size {bl_size} < {mux_ratio * 2 * N} columns needed for {N}-bit MULT")
    rows = []
    for op in ops:
        op = op.upper()
        lanes = 2 * N if op == "MULT" else N
        schedules = (
            ("bit-parallel", bl_size // (mux_ratio * lanes), op_cycles(op, N)),
            ("bit-serial", bl_size, bitserial_cycles(op, N, serial_add_extra)),
        )
        for arch, batch, cycles in schedules:
            total = -(-op_count // batch) * cycles
            per_op = total / op_count if op_count else 0.0
            rows.append(BenchRow(arch, op, N, bl_size, op_count, total, per_op))
    return rows


def sweep(N=8, bl_sizes=(128, 256, 512, 1024), op_count=1024, mux_ratio=4, ops=("ADD", "MULT"), serial_add_extra=1):
    rows = []
    for bl in bl_sizes:
        rows.extend(compare_bitserial(N, bl, op_count, mux_ratio, ops, serial_add_extra))
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([r.label, r.N, r.bl_size, r.op_count, r.total_cycles, f"{r.cycles_per_op:g}"])
    return buf.getvalue()


@dataclass
class PerfModel:
    energy: EnergyTable = field(default_factory=EnergyTable)
    delay: DelayModel = field(default_factory=DelayModel)
    freq: FreqVoltageTable = field(default_factory=FreqVoltageTable)

    @classmethod
    def from_kv(cls, kv):
        return cls(EnergyTable().apply_kv(kv), DelayModel().apply_kv(kv), FreqVoltageTable().apply_kv(kv))


def energy_of(op: str, precision: int, separator: bool = False, table: EnergyTable | None = None) -> float:
    return (table or EnergyTable()).energy_of(op, precision, separator)


def max_frequency(vdd: float, table: FreqVoltageTable | None = None) -> float:
    return (table or FreqVoltageTable()).max_frequency(vdd)
