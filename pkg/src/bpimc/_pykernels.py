"""Pure-Python carry-chain kernel; the reference for ``_ckernels``."""

import numpy as np


def ripple(x, y, width, carry_in):
    """Segmented ripple over dual-rail sense bits.

    ``x``/``y`` are the AND/NOR rails per lane. Each ``width``-lane segment
    starts from ``carry_in`` at its lowest lane. Returns ``(sums, couts)``.
    """
    n = len(x)
    if len(y) != n:
        raise ValueError("x and y lane counts differ")
    if width <= 0 or n % width:
        raise ValueError(f"{n} lanes not divisible by segment width {width}")
    xs = bytes(np.ascontiguousarray(x, dtype=np.uint8))
    ys = bytes(np.ascontiguousarray(y, dtype=np.uint8))
    sums = bytearray(n)
    couts = bytearray(n // width)
    cin = 1 if carry_in else 0
    for seg in range(n // width):
        c = cin
        for i in range(seg * width, (seg + 1) * width):
            xi = xs[i]
            yi = ys[i]
            if c:
                sums[i] = xi | yi
                c = yi ^ 1
            else:
                sums[i] = (xi ^ 1) & (yi ^ 1)
                c = xi
        couts[seg] = c
    return np.frombuffer(bytes(sums), dtype=np.uint8).copy(), np.frombuffer(bytes(couts), dtype=np.uint8).copy()
