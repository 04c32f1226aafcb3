import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpimc import _pykernels, kernels


def slow_ripple(x, y, width, cin):
    """Unpack the rails back to operands and add word by word."""
    n = len(x)
    sums, couts = [], []
    for lo in range(0, n, width):
        a = b = 0
        for i in range(width):
            xi, yi = int(x[lo + i]), int(y[lo + i])
            # x = a&b, y = ~(a|b); xi=yi=0 means exactly one operand bit is set
            a |= (xi or (not xi and not yi)) << i
            b |= xi << i
        total = a + b + cin
        sums += [(total >> i) & 1 for i in range(width)]
        couts.append(total >> width & 1)
    return sums, couts


def rails(a_bits, b_bits):
    a = np.asarray(a_bits, np.uint8)
    b = np.asarray(b_bits, np.uint8)
    return a & b, (a | b) ^ 1


@given(
    st.sampled_from([1, 2, 4, 6, 8, 16]),
    st.integers(1, 12),
    st.integers(0, 1),
    st.randoms(use_true_random=False),
)
@settings(max_examples=200, deadline=None)
def test_backends_agree_with_word_addition(width, segs, cin, rnd):
    n = width * segs
    a = [rnd.randint(0, 1) for _ in range(n)]
    b = [rnd.randint(0, 1) for _ in range(n)]
    x, y = rails(a, b)
    want_s, want_c = slow_ripple(x, y, width, cin)
    for name, mod in kernels.BACKENDS.items():
        s, c = mod.ripple(np.ascontiguousarray(x), np.ascontiguousarray(y), width, cin)
        assert s.tolist() == want_s, name
        assert c.tolist() == want_c, name


@pytest.mark.skipif(bool(os.environ.get("BPIMC_PURE_PYTHON")), reason="fallback forced")
def test_compiled_backend_present():
    # the build ships the extension; a silent fallback would hide a packaging bug
    assert "cython" in kernels.BACKENDS
    assert kernels.BACKEND == "cython"


@pytest.mark.parametrize("bad", [0, 3])
def test_ripple_rejects_bad_width(backend, bad):
    x = np.zeros(8, np.uint8)
    with pytest.raises(ValueError):
        kernels.ripple(x, x, bad, 0)


def test_use_backend_unknown():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_pykernels_returns_fresh_arrays():
    x = np.zeros(4, np.uint8)
    s, c = _pykernels.ripple(x, x, 4, 0)
    s[0] = 1
    assert s.flags.writeable and c.dtype == np.uint8
