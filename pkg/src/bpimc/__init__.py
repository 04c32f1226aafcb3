"""Functional and analytical model of a bit-parallel 6T-SRAM in-memory-computing macro."""

__version__ = "0.1.0"

from .array_model import CellArray, Region, RowAddress, SenseResult, hazard_check
from .config import MacroConfig
from .kernels import BACKEND
from .sequencer import CycleReport, MicroOp, Opcode, Program, Sequencer, run_program

__all__ = [
    "BACKEND",
    "CellArray",
    "CycleReport",
    "MacroConfig",
    "MicroOp",
    "Opcode",
    "Program",
    "Region",
    "RowAddress",
    "SenseResult",
    "Sequencer",
    "hazard_check",
    "run_program",
]
