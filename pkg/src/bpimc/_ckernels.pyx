# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled carry-chain kernel. Must stay bit-identical to _pykernels."""

import numpy as np


def ripple(const unsigned char[::1] x, const unsigned char[::1] y,
           Py_ssize_t width, int carry_in):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nseg, seg, i, end
    cdef unsigned char c, xi, yi
    if y.shape[0] != n:
        raise ValueError("x and y lane counts differ")
    if width <= 0 or n % width:
        raise ValueError(f"{n} lanes not divisible by segment width {width}")
    nseg = n // width
    sums = np.empty(n, dtype=np.uint8)
    couts = np.empty(nseg, dtype=np.uint8)
    cdef unsigned char[::1] s = sums
    cdef unsigned char[::1] co = couts
    for seg in range(nseg):
        c = 1 if carry_in else 0
        i = seg * width
        end = i + width
        while i < end:
            xi = x[i]
            yi = y[i]
            if c:
                s[i] = xi | yi
                c = yi ^ 1
            else:
                s[i] = (xi ^ 1) & (yi ^ 1)
                c = xi
            i += 1
        co[seg] = c
    return sums, couts
