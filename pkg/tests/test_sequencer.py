import numpy as np
import pytest

from bpimc.array_model import CellArray, bits_to_int, dummy, int_to_bits, main
from bpimc.config import MacroConfig
from bpimc.corpus import random_image, random_program
from bpimc.errors import ConfigError, HazardViolation, NoFreeDummyRow
from bpimc.sequencer import (
    MicroOp,
    Opcode,
    Program,
    Sequencer,
    auto_separator,
    replay,
    run_program,
    trace_to_jsonl,
)

from conftest import row_from_words, words_from_row


def op(opcode, srcs, dest, precision=4, bank=0, **kw):
    sep = kw.pop("separator", auto_separator(opcode, dest))
    return MicroOp(opcode, bank, tuple(srcs), dest, precision, separator=sep, **kw)


def load(array, addr, words, group):
    array.write_row(addr, row_from_words(words, group, array.config.lanes))


def test_xor_and_not(array):
    seq = Sequencer(array)
    load(array, main(0, 0), [0b1100] * 8, 4)
    load(array, main(0, 1), [0b1010] * 8, 4)
    r = seq.execute(op(Opcode.XOR, [main(0, 0), main(0, 1)], main(0, 2)))
    assert len(r) == 1
    assert words_from_row(array.read_row(main(0, 2)), 4) == [0b0110] * 8
    load(array, main(0, 3), [0b1011] * 8, 4)
    r = seq.execute(op(Opcode.NOT, [main(0, 3)], main(0, 4)))
    assert len(r) == 1
    assert words_from_row(array.read_row(main(0, 4)), 4) == [0b0100] * 8


@pytest.mark.parametrize("opcode", [Opcode.AND, Opcode.NAND, Opcode.OR, Opcode.NOR, Opcode.XOR, Opcode.XNOR])
def test_logic_random(config, rng, opcode):
    fn = {
        Opcode.AND: lambda a, b: a & b,
        Opcode.NAND: lambda a, b: ~(a & b),
        Opcode.OR: lambda a, b: a | b,
        Opcode.NOR: lambda a, b: ~(a | b),
        Opcode.XOR: lambda a, b: a ^ b,
        Opcode.XNOR: lambda a, b: ~(a ^ b),
    }[opcode]
    arr = CellArray(config)
    seq = Sequencer(arr)
    mask = (1 << 32) - 1
    for _ in range(256):
        a, b = (int(v) for v in rng.integers(0, 1 << 32, 2, dtype=np.uint64))
        arr.write_row(main(1, 0), int_to_bits(a, 32))
        arr.write_row(main(1, 1), int_to_bits(b, 32))
        assert len(seq.execute(op(opcode, [main(1, 0), main(1, 1)], main(1, 2), bank=1))) == 1
        assert bits_to_int(arr.read_row(main(1, 2))) == fn(a, b) & mask


def test_add_example_and_carry_status(array):
    seq = Sequencer(array)
    load(array, main(0, 0), [0b1010] * 8, 4)
    load(array, main(0, 1), [0b1011] * 8, 4)
    r = seq.execute(op(Opcode.ADD, [main(0, 0), main(0, 1)], main(0, 2)))
    assert len(r) == 1
    assert words_from_row(array.read_row(main(0, 2)), 4) == [0b0101] * 8
    assert seq.states[0].carry_status.tolist() == [1] * 8


def test_add_identity_and_carry_in(array):
    seq = Sequencer(array)
    load(array, main(0, 0), [3, 7, 0, 255], 8)
    seq.execute(op(Opcode.ADD, [main(0, 0), main(0, 1)], main(0, 2), precision=8))
    assert words_from_row(array.read_row(main(0, 2)), 8) == [3, 7, 0, 255]
    seq.execute(op(Opcode.ADD, [main(0, 0), main(0, 1)], main(0, 3), precision=8, carry_in=1))
    assert words_from_row(array.read_row(main(0, 3)), 8) == [4, 8, 1, 0]


@pytest.mark.parametrize("p", [2, 4, 8])
def test_add_sub_random(config, rng, p):
    arr = CellArray(config)
    seq = Sequencer(arr)
    n = config.lanes // p
    for _ in range(1000 // n + 1):
        a = rng.integers(0, 1 << p, n)
        b = rng.integers(0, 1 << p, n)
        load(arr, main(0, 0), a, p)
        load(arr, main(0, 1), b, p)
        seq.execute(op(Opcode.ADD, [main(0, 0), main(0, 1)], main(0, 2), p))
        r = seq.execute(op(Opcode.SUB, [main(0, 0), main(0, 1)], main(0, 3), p))
        assert len(r) == 2
        assert words_from_row(arr.read_row(main(0, 2)), p) == [int(v) for v in (a + b) % (1 << p)]
        assert words_from_row(arr.read_row(main(0, 3)), p) == [int(v) for v in (a - b) % (1 << p)]


def test_sub_examples(array):
    seq = Sequencer(array)
    load(array, main(0, 0), [0b0101] * 8, 4)
    load(array, main(0, 1), [0b0011] * 8, 4)
    r = seq.execute(op(Opcode.SUB, [main(0, 0), main(0, 1)], main(0, 2)))
    assert [c.step for c in r] == ["not", "add"]
    assert r[0].dest.region.value == "d"
    assert words_from_row(array.read_row(main(0, 2)), 4) == [0b0010] * 8
    seq.execute(op(Opcode.SUB, [main(0, 0), main(0, 0)], main(0, 3)))
    assert words_from_row(array.read_row(main(0, 3)), 4) == [0] * 8
    assert seq.states[0].carry_status.tolist() == [1] * 8


def test_mult_fig5(array):
    seq = Sequencer(array)
    load(array, main(0, 0), [0b1010] * 4, 8)
    load(array, main(0, 1), [0b1011] * 4, 8)
    r = seq.execute(op(Opcode.MULT, [main(0, 0), main(0, 1)], main(0, 2)))
    assert len(r) == 6
    assert [c.step for c in r] == ["init.clear", "init.copy", "addsh0", "addsh1", "addsh2", "add"]
    assert words_from_row(r[2].lanes, 8) == [0b010100] * 4
    assert words_from_row(array.read_row(main(0, 2)), 8) == [0b01101110] * 4


def test_mult_loop_invariant(config, rng):
    for p in (2, 4, 8):
        arr = CellArray(config)
        g = 2 * p
        a = rng.integers(0, 1 << p, config.lanes // g)
        b = rng.integers(0, 1 << p, config.lanes // g)
        load(arr, main(0, 0), a, g)
        load(arr, main(0, 1), b, g)
        r = Sequencer(arr).execute(op(Opcode.MULT, [main(0, 0), main(0, 1)], main(0, 2), p))
        addsh = [c for c in r if c.step.startswith("addsh")]
        assert len(addsh) == p - 1
        for k, c in enumerate(addsh, 1):
            top = [int(bb) >> (p - k) for bb in b]  # the k most significant multiplier bits
            assert words_from_row(c.lanes, g) == [2 * t * int(aa) for t, aa in zip(top, a)]


def test_mult_trivial(array):
    seq = Sequencer(array)
    load(array, main(0, 0), [0xFF, 0x12], 16)
    load(array, main(0, 1), [0, 0], 16)
    load(array, main(0, 2), [1, 1], 16)
    assert len(seq.execute(op(Opcode.MULT, [main(0, 0), main(0, 1)], main(0, 3), 8))) == 10
    assert words_from_row(array.read_row(main(0, 3)), 16) == [0] * 2
    seq.execute(op(Opcode.MULT, [main(0, 0), main(0, 2)], main(0, 4), 8))
    assert words_from_row(array.read_row(main(0, 4)), 16) == [0xFF, 0x12]


@pytest.mark.parametrize("p", [2, 4, 8])
def test_mult_random(config, rng, p):
    arr = CellArray(config)
    seq = Sequencer(arr)
    g = 2 * p
    n = config.lanes // g
    for _ in range(1000 // n + 1):
        a = rng.integers(0, 1 << p, n)
        b = rng.integers(0, 1 << p, n)
        load(arr, main(2, 0), a, g)
        load(arr, main(2, 1), b, g)
        r = seq.execute(op(Opcode.MULT, [main(2, 0), main(2, 1)], main(2, 2), p, bank=2))
        assert len(r) == p + 2
        assert words_from_row(arr.read_row(main(2, 2)), g) == [int(x) * int(y) for x, y in zip(a, b)]


def test_mult_ignores_high_operand_lanes(array):
    load(array, main(0, 0), [0xA5] * 4, 8)  # upper nibble is junk at 4-bit precision
    load(array, main(0, 1), [0x3B] * 4, 8)
    Sequencer(array).execute(op(Opcode.MULT, [main(0, 0), main(0, 1)], main(0, 2)))
    assert words_from_row(array.read_row(main(0, 2)), 8) == [5 * 11] * 4


def test_add_shift_and_shl(array, rng):
    seq = Sequencer(array)
    assert words_from_row(seq.execute(op(Opcode.ADDSH, [main(0, 0), main(0, 1)], main(0, 2)))[0].lanes, 4) == [0] * 8
    for _ in range(100):
        a = rng.integers(0, 16, 8)
        b = rng.integers(0, 16, 8)
        load(array, main(0, 0), a, 4)
        load(array, main(0, 1), b, 4)
        seq.execute(op(Opcode.ADDSH, [main(0, 0), main(0, 1)], main(0, 2)))
        seq.execute(op(Opcode.SHL, [main(0, 0)], main(0, 3)))
        assert words_from_row(array.read_row(main(0, 2)), 4) == [int(v) for v in ((a + b) * 2) % 16]
        assert words_from_row(array.read_row(main(0, 3)), 4) == [int(v) for v in (a * 2) % 16]


def test_write_and_copy(array):
    seq = Sequencer(array)
    seq.execute(MicroOp(Opcode.WRITE, 0, (), dummy(0, 1), 4, imm=0b1010, separator=True))
    assert bits_to_int(array.read_row(dummy(0, 1))) == 0b1010
    seq.execute(op(Opcode.COPY, [dummy(0, 1)], main(0, 9)))
    assert bits_to_int(array.read_row(main(0, 9))) == 0b1010


def test_cycle_index_strictly_increasing(array):
    prog = [
        op(Opcode.SUB, [main(0, 0), main(0, 1)], main(0, 2)),
        op(Opcode.MULT, [main(0, 0), main(0, 1)], main(0, 3)),
        op(Opcode.XOR, [main(0, 0), main(0, 1)], main(0, 4)),
    ]
    _, trace = run_program(Program(tuple(prog)), array)
    assert [r.cycle for r in trace] == list(range(2 + 6 + 1))


def test_empty_program(array):
    final, trace = run_program(Program(), array)
    assert trace == [] and final == array


def test_run_program_does_not_mutate_input(array):
    load(array, main(0, 0), [1] * 8, 4)
    before = array.copy()
    run_program(Program((op(Opcode.ADD, [main(0, 0), main(0, 0)], main(0, 0)),)), array)
    assert array == before


def test_energy_booked_on_last_cycle(array):
    prog = Program((op(Opcode.SUB, [main(0, 0), main(0, 1)], main(0, 2), 2),))
    _, trace = run_program(prog, array)
    assert [r.energy_fJ for r in trace] == [0.0, 136.5]


def test_trace_json_fields(array):
    _, trace = run_program(Program((op(Opcode.ADD, [main(0, 0), main(0, 1)], main(0, 2)),)), array)
    import json

    rec = json.loads(trace_to_jsonl(trace).splitlines()[0])
    assert {"cycle", "opcode", "bank", "rows", "dest", "lanes_written", "energy_fJ"} <= set(rec)
    assert rec["rows"] == ["0:m:0", "0:m:1"] and rec["dest"] == "0:m:2"


# -- hazards and allocation -----------------------------------------------------


def test_hazard_abort_carries_op_index(array):
    bad = MicroOp(Opcode.ADD, 0, (main(0, 0), main(0, 1)), main(0, 2), 4, separator=True)
    prog = Program((op(Opcode.NOT, [main(0, 0)], main(0, 1)), bad))
    with pytest.raises(HazardViolation) as ei:
        run_program(prog, array)
    assert ei.value.op_index == 1


def test_cross_bank_sources_rejected(array):
    with pytest.raises(HazardViolation):
        Sequencer(array).execute(MicroOp(Opcode.ADD, 0, (main(0, 0), main(1, 0)), main(0, 2), 4))


def test_multi_cycle_dest_aliasing_rejected(array):
    with pytest.raises(HazardViolation):
        Sequencer(array).execute(op(Opcode.SUB, [main(0, 0), main(0, 1)], main(0, 1)))


def test_scratch_rows_avoid_program_rows(array):
    load(array, dummy(0, 0), [7] * 8, 4)
    prog = Program(
        (
            op(Opcode.SUB, [main(0, 0), main(0, 1)], main(0, 2)),
            op(Opcode.COPY, [dummy(0, 0)], main(0, 3)),
        )
    )
    final, trace = run_program(prog, array)
    assert trace[0].dest == dummy(0, 1)
    assert words_from_row(final.read_row(main(0, 3)), 4) == [7] * 8


def test_no_free_dummy_row(array):
    prog = Program(
        (
            op(Opcode.COPY, [main(0, 0)], dummy(0, 0)),
            op(Opcode.COPY, [main(0, 0)], dummy(0, 1)),
            op(Opcode.COPY, [main(0, 0)], dummy(0, 2)),
            op(Opcode.MULT, [main(0, 0), main(0, 1)], main(0, 2)),
        )
    )
    with pytest.raises(NoFreeDummyRow) as ei:
        run_program(prog, array)
    assert ei.value.op_index == 3


def test_precision_not_fitting_lanes():
    c = MacroConfig(banks=1, rows_per_bank=8, cols_per_bank=16, precision=2)  # 4 lanes
    with pytest.raises(ConfigError):
        Sequencer(CellArray(c)).execute(op(Opcode.MULT, [main(0, 0), main(0, 1)], main(0, 2), 4))


# -- whole-program properties ----------------------------------------------------


def test_replay_reproduces_final_array(config, rng):
    for _ in range(20):
        image = random_image(config, rng)
        prog = random_program(config, rng, 12)
        final, trace = run_program(prog, image)
        assert replay(trace, image) == final


def test_determinism(config, rng):
    image = random_image(config, rng)
    prog = random_program(config, rng, 20)
    f1, t1 = run_program(prog, image)
    f2, t2 = run_program(prog, image)
    assert f1 == f2 and trace_to_jsonl(t1) == trace_to_jsonl(t2)


def test_backends_give_identical_traces(config, rng):
    from bpimc import kernels

    image = random_image(config, rng)
    prog = random_program(config, rng, 30)
    outs = {}
    for name in kernels.BACKENDS:
        prev = kernels.use_backend(name)
        try:
            outs[name] = run_program(prog, image)
        finally:
            kernels.use_backend(prev)
    texts = {k: trace_to_jsonl(t) for k, (_, t) in outs.items()}
    assert len(set(texts.values())) == 1
