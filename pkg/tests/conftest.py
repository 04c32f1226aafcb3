import numpy as np
import pytest

from bpimc import kernels
from bpimc.array_model import CellArray, int_to_bits
from bpimc.config import MacroConfig


def row_from_words(words, group, lanes):
    value = 0
    for k, w in enumerate(words):
        value |= int(w) << (k * group)
    return int_to_bits(value, lanes)


def words_from_row(bits, group, width=None):
    width = width or group
    value = int("".join(str(int(b)) for b in reversed(bits)), 2)
    return [(value >> (k * group)) & ((1 << width) - 1) for k in range(len(bits) // group)]


@pytest.fixture
def config():
    return MacroConfig()


@pytest.fixture
def small_config():
    return MacroConfig(banks=1, rows_per_bank=16, cols_per_bank=16, mux_ratio=4, dummy_rows=4, precision=2)


@pytest.fixture
def array(config):
    return CellArray(config)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    prev = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)


_ACCEPTANCE = pytest.StashKey[list]()


class _Criterion:
    def __init__(self, sink, number, title):
        self.sink, self.number, self.title = sink, number, title
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        note = self.detail if exc is None else f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        self.sink.append(f"criterion {self.number:>2} {status}  {self.title}" + (f"  ({note})" if note else ""))
        print(self.sink[-1])
        return False


@pytest.fixture
def criterion(request):
    """Context manager that records a PASS/FAIL line for the acceptance summary."""
    sink = request.config.stash.setdefault(_ACCEPTANCE, [])
    return lambda number, title: _Criterion(sink, number, title)


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
