"""Compare the Cython and pure-Python carry-chain backends.

    python benchmarks/bench_kernels.py [--lanes 32] [--repeat 5]

Times the bare ``ripple`` kernel and a full program run (random ops on a
4-bank macro) under each available backend.
"""

import argparse
import timeit

import numpy as np

from bpimc import kernels
from bpimc.config import MacroConfig
from bpimc.corpus import random_image, random_program
from bpimc.sequencer import Opcode, Program, run_program


def bench_ripple(lanes, number, repeat):
    rng = np.random.default_rng(0)
    a = rng.integers(0, 2, lanes, dtype=np.uint8)
    b = rng.integers(0, 2, lanes, dtype=np.uint8)
    x, y = a & b, (a | b) ^ 1
    return min(timeit.repeat(lambda: kernels.ripple(x, y, 8, 0), number=number, repeat=repeat)) / number


def bench_program(config, n_ops, repeat):
    rng = np.random.default_rng(1)
    program = random_program(config, rng, n_ops)
    # arithmetic-heavy mix so the kernel dominates
    program = Program(tuple(op for op in program if op.opcode in (Opcode.ADD, Opcode.SUB, Opcode.MULT, Opcode.ADDSH)))
    image = random_image(config, rng)
    cycles = len(run_program(program, image)[1])
    t = min(timeit.repeat(lambda: run_program(program, image), number=1, repeat=repeat))
    return t, cycles


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lanes", type=int, default=32)
    ap.add_argument("--ops", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    config = MacroConfig(cols_per_bank=args.lanes * 4)
    results = {}
    prev = kernels.BACKEND
    try:
        for name in sorted(kernels.BACKENDS):
            kernels.use_backend(name)
            k = bench_ripple(args.lanes, 20_000, args.repeat)
            t, cycles = bench_program(config, args.ops, args.repeat)
            results[name] = (k, t, cycles)
    finally:
        kernels.use_backend(prev)

    print(f"{'backend':<8} {'ripple [us]':>12} {'program [ms]':>13} {'cycles/s':>10}")
    for name, (k, t, cycles) in results.items():
        print(f"{name:<8} {k * 1e6:12.2f} {t * 1e3:13.1f} {cycles / t:10.0f}")
    if {"python", "cython"} <= results.keys():
        py, cy = results["python"], results["cython"]
        print(f"speedup: ripple {py[0] / cy[0]:.1f}x, program {py[1] / cy[1]:.2f}x")


if __name__ == "__main__":
    main()
