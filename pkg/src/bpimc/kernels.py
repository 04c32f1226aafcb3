"""Backend selection for the hot carry-chain kernel.

The Cython build is used when importable; ``BPIMC_PURE_PYTHON=1`` forces the
pure-Python fallback. Callers go through :func:`ripple` so tests can swap the
implementation at runtime.
"""

import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("BPIMC_PURE_PYTHON"):
        raise ImportError("pure Python forced")
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

BACKEND = "cython" if _ckernels is not None else "python"
_impl = BACKENDS[BACKEND]


def use_backend(name):
    """Switch the active kernel backend; returns the previous name."""
    global BACKEND, _impl
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable (have {sorted(BACKENDS)})")
    prev = BACKEND
    BACKEND, _impl = name, BACKENDS[name]
    return prev


def ripple(x, y, width, carry_in=0):
    x = np.ascontiguousarray(x, dtype=np.uint8)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    return _impl.ripple(x, y, int(width), int(carry_in))
