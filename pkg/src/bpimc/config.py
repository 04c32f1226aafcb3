"""Macro geometry and the flat key-value config file format."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ConfigError

PRECISIONS = (2, 4, 8)


@dataclass(frozen=True)
class MacroConfig:
    """Geometry of one IMC macro plus the active precision mode.

    Lane ``i`` of a bank is physical column ``i * mux_ratio + column_offset``.
    A packed word of ``precision`` bits occupies adjacent lanes with its LSB
    in the lowest lane.
    """

    banks: int = 4
    rows_per_bank: int = 128
    cols_per_bank: int = 128
    mux_ratio: int = 4
    dummy_rows: int = 4
    precision: int = 8
    vdd: float = 1.0
    column_offset: int = 0

    def __post_init__(self):
        for name in ("banks", "rows_per_bank", "cols_per_bank", "mux_ratio", "dummy_rows"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.cols_per_bank % self.mux_ratio:
            raise ConfigError(
                f"cols_per_bank={self.cols_per_bank} not divisible by mux_ratio={self.mux_ratio}"
            )
        if not 0 <= self.column_offset < self.mux_ratio:
            raise ConfigError(f"column_offset must be in [0, {self.mux_ratio})")
        if self.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {PRECISIONS}, got {self.precision}")
        if self.lanes % self.precision:
            raise ConfigError(f"{self.lanes} lanes not divisible by precision {self.precision}")

    @property
    def lanes(self) -> int:
        return self.cols_per_bank // self.mux_ratio

    def lane_columns(self):
        return range(self.column_offset, self.cols_per_bank, self.mux_ratio)

    def supports(self, precision: int, mult: bool = False) -> bool:
        width = 2 * precision if mult else precision
        return precision in PRECISIONS and self.lanes % width == 0

    def with_precision(self, precision: int) -> "MacroConfig":
        return replace(self, precision=precision)


GEOMETRY_KEYS = {
    "banks": int,
    "rows_per_bank": int,
    "cols_per_bank": int,
    "mux_ratio": int,
    "dummy_rows": int,
    "precision": int,
    "vdd": float,
    "column_offset": int,
}


def parse_kv(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"config line {lineno}: empty key")
        out[key] = value
    return out


def load_kv(path) -> dict[str, str]:
    return parse_kv(Path(path).read_text(encoding="utf-8"))


def macro_from_kv(kv: dict[str, str], base: MacroConfig | None = None) -> MacroConfig:
    base = base or MacroConfig()
    fields = {}
    for key, cast in GEOMETRY_KEYS.items():
        if key in kv:
            try:
                fields[key] = cast(kv[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {kv[key]!r}") from exc
    return replace(base, **fields)
