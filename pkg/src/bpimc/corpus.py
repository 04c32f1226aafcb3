"""Random legal programs and memory images for randomized checking."""

from __future__ import annotations

import numpy as np

from .array_model import CellArray, Region, RowAddress
from .config import PRECISIONS, MacroConfig
from .sequencer import MACRO_OPS, MicroOp, Opcode, Program, auto_separator, src_count


def random_image(config: MacroConfig, rng: np.random.Generator) -> CellArray:
    """Fill every cell, accessed or not, with random bits."""
    array = CellArray(config)
    array.main[...] = rng.integers(0, 2, array.main.shape, dtype=np.uint8)
    array.dummy[...] = rng.integers(0, 2, array.dummy.shape, dtype=np.uint8)
    return array


def random_program(config: MacroConfig, rng: np.random.Generator, n_ops: int = 8) -> Program:
    """Build ``n_ops`` random operations that pass every legality rule.

    Programs may name dummy rows explicitly, but always leave two dummy rows
    per bank free for SUB/MULT scratch.
    """
    user_dummy = max(0, config.dummy_rows - 2)
    precisions = [p for p in PRECISIONS if config.supports(p)]
    ops = []
    for _ in range(n_ops):
        p = int(rng.choice(precisions))
        choices = [o for o in Opcode if o is not Opcode.MULT or config.supports(p, mult=True)]
        opcode = choices[int(rng.integers(len(choices)))]
        bank = int(rng.integers(config.banks))

        def addr():
            if user_dummy and rng.random() < 0.25:
                return RowAddress(bank, Region.DUMMY, int(rng.integers(user_dummy)))
            return RowAddress(bank, Region.MAIN, int(rng.integers(config.rows_per_bank)))

        srcs = tuple(addr() for _ in range(src_count(opcode)))
        dest = addr()
        while opcode in MACRO_OPS and dest in srcs:
            dest = addr()
        imm = None
        if opcode is Opcode.WRITE:
            imm = int.from_bytes(rng.bytes((config.lanes + 7) // 8), "little") & ((1 << config.lanes) - 1)
        carry_in = int(rng.integers(2)) if opcode is Opcode.ADD else 0
        ops.append(
            MicroOp(
                opcode,
                bank,
                srcs,
                dest,
                p,
                carry_in,
                auto_separator(opcode, dest),
                imm,
            )
        )
    return Program(tuple(ops))
