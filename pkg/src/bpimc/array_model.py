"""SRAM banks, wordline activation and write-back legality.

The functional model keeps every physical column, but an operation only ever
touches one column per mux group (the configured offset), so a row is read
and written as a vector of ``config.lanes`` lane bits.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import MacroConfig
from .errors import AddressOutOfRange, HazardViolation


class Region(enum.Enum):
    MAIN = "m"
    DUMMY = "d"


@dataclass(frozen=True, order=True)
class RowAddress:
    bank: int
    region: Region
    row: int

    def __str__(self):
        return f"{self.bank}:{self.region.value}:{self.row}"

    @property
    def short(self):
        """Bank-less form used by the assembler (``m:3``)."""
        return f"{self.region.value}:{self.row}"


def main(bank, row):
    return RowAddress(bank, Region.MAIN, row)


def dummy(bank, row):
    return RowAddress(bank, Region.DUMMY, row)


@dataclass(frozen=True)
class SenseResult:
    """Per-lane single-ended sense amplifier outputs.

    Dual-row activation gives ``x = A & B`` and ``y = ~(A | B)``;
    single-row activation gives ``x = A`` and ``y = ~A``.
    """

    x: np.ndarray
    y: np.ndarray
    dual: bool

    def __len__(self):
        return len(self.x)


class OpKind(enum.Enum):
    """Coarse operation class for :func:`hazard_check`."""

    SINGLE_CYCLE = "single"  # read then write-back within one cycle
    MULTI_CYCLE = "multi"  # SUB / MULT macro-ops
    WRITE = "write"


MAX_ACTIVE_ROWS = 2


def hazard_check(
    rows: Sequence[RowAddress],
    dest: RowAddress | None,
    mode: OpKind = OpKind.SINGLE_CYCLE,
    separator_engaged: bool = False,
):
    """Return ``None`` if legal, otherwise a string naming the violated rule."""
    if len(rows) > MAX_ACTIVE_ROWS:
        return f"{len(rows)} rows activated; at most {MAX_ACTIVE_ROWS} wordlines per cycle"
    if mode is not OpKind.WRITE and not rows:
        return "no row activated"
    banks = {r.bank for r in rows}
    if len(banks) > 1:
        return f"activated rows span banks {sorted(banks)}"
    if dest is not None and banks and dest.bank not in banks:
        return f"write-back to bank {dest.bank} from bank {rows[0].bank}"
    if dest is not None and mode is OpKind.MULTI_CYCLE and dest in rows:
        return f"destination {dest} is also a source of a multi-cycle operation"
    if dest is not None and separator_engaged and dest.region is Region.MAIN:
        return f"BL separator engaged but write-back targets main row {dest}"
    return None


class CellArray:
    """Bit storage for every bank's main and dummy arrays.

    ``separator_closed[b]`` is True while bank ``b``'s main-array bitlines are
    connected to the column peripheral; engaging the BL separator opens it.
    """

    def __init__(self, config: MacroConfig):
        self.config = config
        c = config
        self.main = np.zeros((c.banks, c.rows_per_bank, c.cols_per_bank), dtype=np.uint8)
        self.dummy = np.zeros((c.banks, c.dummy_rows, c.cols_per_bank), dtype=np.uint8)
        self.separator_closed = np.ones(c.banks, dtype=bool)
        self._cols = np.arange(c.column_offset, c.cols_per_bank, c.mux_ratio)

    def copy(self) -> "CellArray":
        new = CellArray.__new__(CellArray)
        new.config = self.config
        new.main = self.main.copy()
        new.dummy = self.dummy.copy()
        new.separator_closed = self.separator_closed.copy()
        new._cols = self._cols
        return new

    def __eq__(self, other):
        if not isinstance(other, CellArray):
            return NotImplemented
        return (
            self.config == other.config
            and np.array_equal(self.main, other.main)
            and np.array_equal(self.dummy, other.dummy)
            and np.array_equal(self.separator_closed, other.separator_closed)
        )

    def validate(self, addr: RowAddress):
        c = self.config
        if not 0 <= addr.bank < c.banks:
            raise AddressOutOfRange(f"bank {addr.bank} out of range (banks={c.banks})")
        limit = c.rows_per_bank if addr.region is Region.MAIN else c.dummy_rows
        if not 0 <= addr.row < limit:
            raise AddressOutOfRange(f"row {addr} out of range ({addr.region.name.lower()} rows={limit})")

    def _plane(self, addr):
        self.validate(addr)
        return self.main if addr.region is Region.MAIN else self.dummy

    def read_row(self, addr: RowAddress) -> np.ndarray:
        return self._plane(addr)[addr.bank, addr.row, self._cols].copy()

    def write_row(self, addr: RowAddress, lanes) -> None:
        lanes = np.asarray(lanes, dtype=np.uint8)
        if lanes.shape != (self.config.lanes,):
            raise ValueError(f"expected {self.config.lanes} lane bits, got shape {lanes.shape}")
        if np.any(lanes > 1):
            raise ValueError("lane bits must be 0 or 1")
        self._plane(addr)[addr.bank, addr.row, self._cols] = lanes

    def activate(self, rows: Sequence[RowAddress]) -> SenseResult:
        """Fire one or two wordlines and return the sensed rails.

        Pure: the array is not modified.
        """
        rows = list(rows)
        reason = hazard_check(rows, None)
        if reason:
            raise HazardViolation(reason)
        bits = [self.read_row(r) for r in rows]
        if len(bits) == 1:
            a = bits[0]
            return SenseResult(a, a ^ 1, dual=False)
        a, b = bits
        return SenseResult(a & b, (a | b) ^ 1, dual=True)

    def set_separator(self, bank: int, closed: bool) -> None:
        if not 0 <= bank < self.config.banks:
            raise AddressOutOfRange(f"bank {bank} out of range (banks={self.config.banks})")
        self.separator_closed[bank] = bool(closed)

    def rows(self) -> Iterable[RowAddress]:
        c = self.config
        for bank in range(c.banks):
            for row in range(c.rows_per_bank):
                yield main(bank, row)
            for row in range(c.dummy_rows):
                yield dummy(bank, row)


# -- lane <-> integer packing -------------------------------------------------


def bits_to_int(bits) -> int:
    """Lane 0 is the least significant bit."""
    return int.from_bytes(np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes(), "little")


def int_to_bits(value: int, n: int) -> np.ndarray:
    if value < 0 or value >> n:
        raise ValueError(f"value {value:#x} does not fit in {n} lanes")
    raw = np.frombuffer(value.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].copy()


def pack_words(words, width: int, group: int | None = None) -> np.ndarray:
    """Lay out words LSB-first, each in a ``group``-lane slot (default ``width``)."""
    group = group or width
    out = np.zeros(len(words) * group, dtype=np.uint8)
    for k, w in enumerate(words):
        w = int(w)
        for i in range(width):
            out[k * group + i] = (w >> i) & 1
    return out


def unpack_words(bits, group: int) -> list[int]:
    bits = np.asarray(bits, dtype=np.uint8)
    weights = 1 << np.arange(group, dtype=np.uint64)
    return [int(v) for v in bits.reshape(-1, group).astype(np.uint64) @ weights]


# -- memory image files -------------------------------------------------------

_IMAGE_LINE = re.compile(r"^(\d+):([md]):(\d+)\s+(0[xX][0-9a-fA-F_]+|0[bB][01_]+)$")


def parse_image(text: str, config: MacroConfig) -> CellArray:
    """Load a memory image: ``bank:region:row <0x.. | 0b..>`` per line.

    Bit ``i`` of the value is lane ``i``. Rows not listed are zero.
    """
    array = CellArray(config)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _IMAGE_LINE.match(line)
        if not m:
            raise ValueError(f"image line {lineno}: cannot parse {raw!r}")
        addr = RowAddress(int(m.group(1)), Region(m.group(2)), int(m.group(3)))
        value = int(m.group(4), 0)
        try:
            array.write_row(addr, int_to_bits(value, config.lanes))
        except (ValueError, AddressOutOfRange) as exc:
            raise ValueError(f"image line {lineno}: {exc}") from exc
    return array


def format_image(array: CellArray, include_zero: bool = False) -> str:
    width = (array.config.lanes + 3) // 4
    lines = []
    for addr in array.rows():
        value = bits_to_int(array.read_row(addr))
        if value or include_zero:
            lines.append(f"{addr} 0x{value:0{width}x}")
    return "\n".join(lines) + ("\n" if lines else "")
