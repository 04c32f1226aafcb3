"""Text format for micro-op programs.

::

    PREC 4                      # word width for following statements
    VDD 0.8                     # optional supply, used by reports
    SEP auto                    # BL separator policy: auto | on | off
    WRITE 0 d:1 0xA             # bank 0, dummy row 1 <- lanes 0x..A
    ADD 0 m:3,m:4 -> d:0 cin=1
    NOT 0 m:5 -> m:6 sep=off

Addresses are ``m:<row>`` (main array) or ``d:<row>`` (dummy array); the
bank is the second field. Immediates are ``0x``/``0b`` lane vectors with
bit 0 in lane 0.
"""

from __future__ import annotations

import re

from .array_model import Region, RowAddress
from .config import PRECISIONS, MacroConfig
from .errors import ConfigConflict, ParseError, VddOutOfRange
from .perf_model import FreqVoltageTable
from .sequencer import MicroOp, Opcode, Program, auto_separator, src_count

_ADDR = re.compile(r"^([md]):(\d+)$")
_STMT = re.compile(r"^(?P<op>\S+)\s+(?P<bank>\S+)\s+(?P<srcs>[^>]*?)\s*->\s*(?P<dest>\S+)(?P<flags>(?:\s+\S+)*)\s*$")
_WRITE = re.compile(r"^(?P<op>\S+)\s+(?P<bank>\S+)\s+(?P<dest>\S+)\s+(?P<imm>\S+)(?P<flags>(?:\s+\S+)*)\s*$")


def _col(m, group, offset=0):
    return offset + m.start(group) + 1


def _parse_addr(tok, bank, line, col):
    m = _ADDR.match(tok)
    if not m:
        raise ParseError(f"bad address {tok!r} (expected m:<row> or d:<row>)", line, col)
    return RowAddress(bank, Region(m.group(1)), int(m.group(2)))


def _parse_int(tok, line, col, what):
    try:
        return int(tok, 0)
    except ValueError:
        raise ParseError(f"bad {what} {tok!r}", line, col) from None


def assemble(text: str, config: MacroConfig | None = None, default_precision: int | None = None) -> Program:
    """Parse program text.

    With ``config``, addresses, immediates and precisions are also checked
    against the geometry, so an accepted program cannot fail on them later.
    """
    precision = None
    vdd = None
    sep_policy = "auto"
    ops = []
    freq = FreqVoltageTable()
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        stripped = body.strip()
        if not stripped:
            continue
        indent = len(body) - len(body.lstrip())
        head, *rest = stripped.split()
        word = head.upper()

        if word in ("PREC", "VDD", "SEP"):
            if len(rest) != 1:
                raise ParseError(f"{word} takes exactly one argument", lineno, indent + 1)
            arg = rest[0]
            argcol = indent + stripped.index(arg, len(head)) + 1
            if word == "PREC":
                p = _parse_int(arg, lineno, argcol, "precision")
                if p not in PRECISIONS:
                    raise ParseError(f"precision must be one of {PRECISIONS}", lineno, argcol)
                if default_precision is not None and precision is None and p != default_precision:
                    raise ConfigConflict(f"PREC {p} conflicts with requested precision {default_precision}", lineno, argcol)
                if config is not None and not config.supports(p):
                    raise ConfigConflict(f"{config.lanes} lanes cannot hold {p}-bit words", lineno, argcol)
                precision = p
            elif word == "VDD":
                try:
                    vdd = float(arg)
                except ValueError:
                    raise ParseError(f"bad voltage {arg!r}", lineno, argcol) from None
                try:
                    freq.max_frequency(vdd)
                except VddOutOfRange as exc:
                    raise ConfigConflict(str(exc), lineno, argcol) from None
            else:
                if arg.lower() not in ("on", "off", "auto"):
                    raise ParseError("SEP takes on, off or auto", lineno, argcol)
                sep_policy = arg.lower()
            continue

        try:
            opcode = Opcode(word)
        except ValueError:
            raise ParseError(f"unknown mnemonic {head!r}", lineno, indent + 1) from None
        if precision is None:
            if default_precision is None:
                raise ParseError("missing PREC directive before first statement", lineno, indent + 1)
            precision = default_precision

        if opcode is Opcode.WRITE:
            m = _WRITE.match(stripped)
            if not m:
                raise ParseError("expected: WRITE <bank> <dest> <imm>", lineno, indent + 1)
        else:
            m = _STMT.match(stripped)
            if not m:
                raise ParseError(f"expected: {word} <bank> <src>[,<src>] -> <dest>", lineno, indent + 1)

        bank = _parse_int(m.group("bank"), lineno, _col(m, "bank", indent), "bank")
        if config is not None and not 0 <= bank < config.banks:
            raise ParseError(f"bank {bank} out of range (banks={config.banks})", lineno, _col(m, "bank", indent))

        srcs = ()
        if opcode is not Opcode.WRITE:
            src_text = m.group("srcs")
            toks = [t.strip() for t in src_text.split(",")]
            col = _col(m, "srcs", indent)
            parsed = []
            pos = 0
            for t in toks:
                tcol = col + src_text.index(t, pos) if t else col
                pos = src_text.index(t, pos) + len(t) if t else pos
                parsed.append(_parse_addr(t, bank, lineno, tcol))
            srcs = tuple(parsed)
            if len(srcs) != src_count(opcode):
                raise ParseError(f"{word} takes {src_count(opcode)} source row(s), got {len(srcs)}", lineno, col)
        dest = _parse_addr(m.group("dest"), bank, lineno, _col(m, "dest", indent))

        if config is not None:
            for addr, grp in [(a, "srcs") for a in srcs] + [(dest, "dest")]:
                limit = config.rows_per_bank if addr.region is Region.MAIN else config.dummy_rows
                if addr.row >= limit:
                    raise ParseError(f"row {addr.short} out of range ({limit} rows)", lineno, _col(m, grp, indent))
            if opcode is Opcode.MULT and not config.supports(precision, mult=True):
                raise ConfigConflict(f"{config.lanes} lanes cannot hold {2 * precision}-lane MULT groups", lineno, indent + 1)

        imm = None
        if opcode is Opcode.WRITE:
            imm = _parse_int(m.group("imm"), lineno, _col(m, "imm", indent), "immediate")
            if imm < 0 or (config is not None and imm >> config.lanes):
                raise ParseError(f"immediate {m.group('imm')} does not fit the row", lineno, _col(m, "imm", indent))

        carry_in = 0
        sep = {"on": True, "off": False}.get(sep_policy)
        flag_text = m.group("flags")
        for fm in re.finditer(r"\S+", flag_text):
            fcol = _col(m, "flags", indent) + fm.start()
            key, _, val = fm.group().partition("=")
            key = key.lower()
            if key == "cin" and val in ("0", "1"):
                if opcode is not Opcode.ADD:
                    raise ParseError("cin= is only valid on ADD", lineno, fcol)
                carry_in = int(val)
            elif key == "sep" and val.lower() in ("on", "off"):
                sep = val.lower() == "on"
            else:
                raise ParseError(f"unknown flag {fm.group()!r}", lineno, fcol)
        if sep is None:
            sep = auto_separator(opcode, dest)

        ops.append(MicroOp(opcode, bank, srcs, dest, precision, carry_in, sep, imm))
    return Program(tuple(ops), vdd)


def disassemble(program: Program) -> str:
    lines = []
    if program.vdd is not None:
        lines.append(f"VDD {program.vdd!r}")
    precision = None
    for op in program.ops:
        if op.precision != precision:
            precision = op.precision
            lines.append(f"PREC {precision}")
        if op.opcode is Opcode.WRITE:
            text = f"WRITE {op.bank} {op.dest.short} 0x{op.imm:x}"
        else:
            srcs = ",".join(a.short for a in op.src)
            text = f"{op.opcode.value} {op.bank} {srcs} -> {op.dest.short}"
        if op.carry_in:
            text += f" cin={op.carry_in}"
        if op.separator != auto_separator(op.opcode, op.dest):
            text += " sep=" + ("on" if op.separator else "off")
        lines.append(text)
    return "\n".join(lines) + ("\n" if lines else "")
