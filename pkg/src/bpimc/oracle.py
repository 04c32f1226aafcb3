"""Golden reference: word-level arithmetic on packed lanes.

Nothing here touches the bit-level datapath; rows are Python ints (bit i =
lane i) and operations are ordinary integer arithmetic. Programs are read
duck-typed (``op.opcode.value``, ``op.src``, ...) so the reference does not
depend on the sequencer's implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ShapeMismatch

LOGIC = {
    "AND": lambda a, b: a & b,
    "NAND": lambda a, b: ~(a & b),
    "OR": lambda a, b: a | b,
    "NOR": lambda a, b: ~(a | b),
    "XOR": lambda a, b: a ^ b,
    "XNOR": lambda a, b: ~(a ^ b),
    "NOT": lambda a, b: ~a,
}


@dataclass(frozen=True)
class WordVector:
    words: tuple
    width: int

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(int(w) for w in self.words))
        for w in self.words:
            if not 0 <= w < (1 << self.width):
                raise ValueError(f"word {w} does not fit in {self.width} bits")

    def __len__(self):
        return len(self.words)


def _check(a: WordVector, b: WordVector | None):
    if b is not None and (len(a) != len(b) or a.width != b.width):
        raise ShapeMismatch(f"shapes differ: {len(a)}x{a.width} vs {len(b)}x{b.width}")


def ref_logic(op: str, a: WordVector, b: WordVector | None = None) -> WordVector:
    op = op.upper()
    _check(a, b)
    mask = (1 << a.width) - 1
    fn = LOGIC[op]
    bs = b.words if b is not None else (0,) * len(a)
    return WordVector([fn(x, y) & mask for x, y in zip(a.words, bs)], a.width)


def ref_arith(op: str, a: WordVector, b: WordVector | None = None, out_width: int | None = None, carry_in: int = 0) -> WordVector:
    """ADD/SUB wrap at ``a.width``; ADDSH, SHL and MULT wrap at ``out_width``."""
    op = op.upper()
    _check(a, b)
    w = a.width
    if out_width is None:
        out_width = 2 * w if op == "MULT" else w
    bs = b.words if b is not None else (0,) * len(a)
    if op == "ADD":
        vals, m = [x + y + carry_in for x, y in zip(a.words, bs)], w
    elif op == "SUB":
        vals, m = [x - y for x, y in zip(a.words, bs)], w
    elif op == "ADDSH":
        vals, m = [(x + y) * 2 for x, y in zip(a.words, bs)], out_width
    elif op == "SHL":
        vals, m = [x * 2 for x in a.words], out_width
    elif op == "MULT":
        vals, m = [x * y for x, y in zip(a.words, bs)], out_width
    else:
        raise ValueError(f"unknown arithmetic op {op!r}")
    return WordVector([v % (1 << m) for v in vals], m)


def schoolbook_mult(a: int, b: int, width: int) -> int:
    """Sum of shifted partial products, as done by hand."""
    total = 0
    for i in range(width):
        if (b >> i) & 1:
            total += a << i
    return total % (1 << (2 * width))


def add_carry_out(a: int, b: int, width: int, carry_in: int = 0) -> int:
    return (a + b + carry_in) >> width & 1


def expected_cycles(opcode: str, precision: int) -> int:
    """Cycle counts per operation class (logic/shift/add-shift/ADD: 1)."""
    opcode = opcode.upper()
    if opcode == "SUB":
        return 2
    if opcode == "MULT":
        return precision + 2
    return 1


# -- row-level reference machine ---------------------------------------------


def split_words(row: int, lanes: int, group: int, width: int) -> list[int]:
    mask = (1 << width) - 1
    return [(row >> (k * group)) & mask for k in range(lanes // group)]


def join_words(words, group: int) -> int:
    out = 0
    for k, w in enumerate(words):
        out |= int(w) << (k * group)
    return out


class ReferenceMachine:
    """Executes programs on a dict of row integers keyed by ``str(address)``."""

    def __init__(self, rows: dict, lanes: int):
        self.rows = dict(rows)
        self.lanes = lanes

    def get(self, addr) -> int:
        return self.rows.get(str(addr), 0)

    def execute(self, op) -> int:
        """Apply one op; returns the new destination row value."""
        name = op.opcode.value
        p = op.precision
        lanes = self.lanes
        if name == "WRITE":
            result = op.imm
        elif name == "COPY":
            result = self.get(op.src[0])
        elif name == "MULT":
            g = 2 * p
            a = WordVector(split_words(self.get(op.src[0]), lanes, g, p), p)
            b = WordVector(split_words(self.get(op.src[1]), lanes, g, p), p)
            result = join_words(ref_arith("MULT", a, b).words, g)
        else:
            a = WordVector(split_words(self.get(op.src[0]), lanes, p, p), p)
            b = None
            if len(op.src) == 2:
                b = WordVector(split_words(self.get(op.src[1]), lanes, p, p), p)
            if name in LOGIC:
                out = ref_logic(name, a, b)
            elif name == "ADD":
                out = ref_arith("ADD", a, b, carry_in=op.carry_in)
            else:
                out = ref_arith(name, a, b, out_width=p)
            result = join_words(out.words, p)
        self.rows[str(op.dest)] = result
        return result
