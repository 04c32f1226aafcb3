"""Command-line front end: ``bpimc {asm,run,check,bench,energy}``.

Exit codes: 0 success, 1 check failure, 2 parse/config error, 3 hazard
abort, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .array_model import CellArray, format_image, parse_image
from .asm import assemble, disassemble
from .check import check_program
from .config import GEOMETRY_KEYS, load_kv, macro_from_kv
from .corpus import random_image, random_program
from .errors import ConfigError, HazardViolation, ParseError, VddOutOfRange
from .perf_model import PerfModel, ledger_total, sweep, sweep_csv, tops_per_watt
from .sequencer import Sequencer, trace_to_jsonl

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_HAZARD, EXIT_IO = 0, 1, 2, 3, 4

_KNOWN_PREFIXES = ("energy.", "delay.", "freq.", "bench.")
_KNOWN_KEYS = set(GEOMETRY_KEYS) | {"vdd_min", "vdd_max"}


class CLIError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path):
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from exc


def load_settings(args):
    """Return ``(MacroConfig, PerfModel, kv)`` from ``--config`` and flags."""
    kv = {}
    if getattr(args, "config", None):
        try:
            kv = load_kv(args.config)
        except OSError as exc:
            raise CLIError(f"cannot read {args.config}: {exc.strerror}", EXIT_IO) from exc
        except ConfigError as exc:
            raise CLIError(str(exc), EXIT_PARSE) from exc
        unknown = [k for k in kv if k not in _KNOWN_KEYS and not k.startswith(_KNOWN_PREFIXES)]
        if unknown:
            raise CLIError(f"unknown config key(s): {', '.join(sorted(unknown))}", EXIT_PARSE)
    try:
        config = macro_from_kv(kv)
        if getattr(args, "prec", None):
            config = config.with_precision(args.prec)
        if getattr(args, "vdd", None) is not None:
            config = replace(config, vdd=args.vdd)
        model = PerfModel.from_kv(kv)
    except ConfigError as exc:
        raise CLIError(str(exc), EXIT_PARSE) from exc
    return config, model, kv


def load_program(path, config, prec=None):
    try:
        return assemble(_read(path), config, default_precision=prec)
    except ParseError as exc:
        raise CLIError(f"{path}: {exc}", EXIT_PARSE) from exc


def load_image(path, config):
    if path is None:
        return CellArray(config)
    try:
        return parse_image(_read(path), config)
    except ValueError as exc:
        raise CLIError(f"{path}: {exc}", EXIT_PARSE) from exc


# -- subcommands ---------------------------------------------------------------


def cmd_asm(args):
    config, _, _ = load_settings(args)
    program = load_program(args.program, config, args.prec)
    text = disassemble(program)
    if args.output:
        write_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    print(f"# {len(program)} op(s)", file=sys.stderr)
    return EXIT_OK


def energy_summary_csv(program, trace):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["op_index", "op", "precision", "separator", "cycles", "fJ"])
    cycles = {}
    energy = {}
    for r in trace:
        cycles[r.op_index] = cycles.get(r.op_index, 0) + 1
        energy[r.op_index] = energy.get(r.op_index, 0.0) + r.energy_fJ
    for i, op in enumerate(program):
        w.writerow([i, op.opcode.value, op.precision, "with" if op.separator else "without", cycles[i], repr(energy[i])])
    w.writerow(["total", "", "", "", len(trace), repr(ledger_total(r.energy_fJ for r in trace))])
    return buf.getvalue()


def cmd_run(args):
    config, model, _ = load_settings(args)
    program = load_program(args.program, config, args.prec)
    array = load_image(args.image, config)
    seq = Sequencer(array, model.energy)
    status = EXIT_OK
    try:
        seq.run(program)
    except (HazardViolation, ConfigError) as exc:
        print(f"error: hazard abort at op {exc.op_index}: {exc}", file=sys.stderr)
        status = EXIT_HAZARD
    trace = seq.trace
    outdir = Path(args.out_dir)
    write_atomic(args.trace_out or outdir / "trace.jsonl", trace_to_jsonl(trace))
    if status == EXIT_OK:
        write_atomic(args.image_out or outdir / "final.img", format_image(seq.array))
        write_atomic(args.energy_out or outdir / "energy_summary.csv", energy_summary_csv(program, trace))
        total = ledger_total(r.energy_fJ for r in trace)
        vdd = program.vdd if program.vdd is not None and args.vdd is None else config.vdd
        try:
            f = model.freq.max_frequency(vdd)
            timing = f", {len(trace) / f * 1e9:.3f} ns at {vdd} V ({f / 1e6:.0f} MHz)"
        except VddOutOfRange:
            timing = ""
        print(f"{len(program)} op(s), {len(trace)} cycle(s), {total:.1f} fJ{timing}")
    return status


def cmd_check(args):
    config, _, _ = load_settings(args)
    if args.program is None and not args.corpus:
        raise CLIError("check needs a program file or --corpus N", EXIT_PARSE)
    rng = np.random.default_rng(args.seed)
    if args.program is not None:
        program = load_program(args.program, config, args.prec)
        image = load_image(args.image, config) if args.image else random_image(config, rng)
        jobs = [(args.program, program, image)]
    else:
        jobs = [
            (f"corpus[{k}]", random_program(config, rng, args.ops), random_image(config, rng)) for k in range(args.corpus)
        ]
    status = EXIT_OK
    for name, program, image in jobs:
        try:
            report = check_program(program, image)
        except HazardViolation as exc:
            print(f"{name}: hazard abort at op {exc.op_index}: {exc.reason}")
            return EXIT_HAZARD
        if not report.passed:
            status = EXIT_FAIL
        if args.program is not None or not report.passed or args.verbose:
            print(f"{name}: {report.summary()}")
    if args.corpus and status == EXIT_OK:
        print(f"PASS: {len(jobs)} random program(s), seed {args.seed}")
    return status


def cmd_bench(args):
    config, _, kv = load_settings(args)
    try:
        n = int(kv.get("bench.N", 8))
        bl_sizes = tuple(int(x) for x in kv.get("bench.bl_sizes", "128,256,512,1024").split(","))
        op_count = int(kv.get("bench.op_count", 1024))
        extra = int(kv.get("bench.serial_add_extra", 1))
        ops = tuple(x.strip().upper() for x in kv.get("bench.ops", "ADD,MULT").split(","))
        rows = sweep(n, bl_sizes, op_count, config.mux_ratio, ops, extra)
        single = sweep(n, bl_sizes[:1], 1, config.mux_ratio, ("MULT",), extra)
    except (ValueError, ConfigError) as exc:
        raise CLIError(str(exc), EXIT_PARSE) from exc
    write_atomic(args.out, sweep_csv(rows))
    par = next(r for r in single if r.arch == "bit-parallel")
    ser = next(r for r in single if r.arch == "bit-serial")
    print(f"wrote {len(rows)} rows to {args.out}")
    print(
        f"single {n}-bit MULT latency: bit-parallel {par.total_cycles} cycles, "
        f"bit-serial {ser.total_cycles} cycles, ratio {ser.total_cycles / par.total_cycles:g}"
    )
    return EXIT_OK


def cmd_energy(args):
    config, model, _ = load_settings(args)
    write_atomic(args.out, model.energy.to_csv())
    print(f"wrote {args.out}")
    lanes = args.lanes if args.lanes is not None else config.lanes * config.banks
    precisions = [args.prec] if args.prec else [2, 4, 8]
    try:
        for op in ("ADD", "MULT"):
            for p in precisions:
                print(tops_per_watt(op, p, config.vdd, lanes, True, model.energy, model.freq))
    except VddOutOfRange as exc:
        raise CLIError(str(exc), EXIT_PARSE) from exc
    d = model.delay
    comps = ", ".join(f"{k} {v:g} ps" for k, v in d.components(config.precision).items())
    print(f"delay @ {config.precision}-bit: {comps}; period {d.period_ps(config.precision):g} ps")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="bpimc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key-value config file")
        sp.add_argument("--prec", type=int, choices=(2, 4, 8), help="default precision")
        sp.add_argument("--vdd", type=float, help="supply voltage for reports")

    sp = sub.add_parser("asm", help="assemble and print the canonical program")
    sp.add_argument("program")
    sp.add_argument("-o", "--output")
    common(sp)
    sp.set_defaults(func=cmd_asm)

    sp = sub.add_parser("run", help="execute a program")
    sp.add_argument("program")
    sp.add_argument("--image", help="initial memory image (default: all zero)")
    sp.add_argument("--out-dir", default=".", help="directory for default output files")
    sp.add_argument("--trace-out")
    sp.add_argument("--image-out")
    sp.add_argument("--energy-out")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("check", help="compare simulator against the reference model")
    sp.add_argument("program", nargs="?")
    sp.add_argument("--image")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--corpus", type=int, default=0, metavar="N", help="check N random programs instead")
    sp.add_argument("--ops", type=int, default=8, help="ops per random program")
    sp.add_argument("-v", "--verbose", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("bench", help="bit-parallel vs bit-serial cycle sweep")
    sp.add_argument("--out", default="sweep.csv")
    common(sp)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("energy", help="write the energy table and TOPS/W report")
    sp.add_argument("--out", default="energy.csv")
    sp.add_argument("--lanes", type=int, help="active lanes (default: all banks)")
    common(sp)
    sp.set_defaults(func=cmd_energy)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
