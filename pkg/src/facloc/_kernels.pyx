# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the planar rotated-median quadrature loop."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fabs, pow, isinf
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"

ctypedef struct pair_t:
    double v
    double w


cdef inline void _swap(pair_t* buf, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef pair_t tmp = buf[i]
    buf[i] = buf[j]
    buf[j] = tmp


cdef double _lower_median(pair_t* buf, Py_ssize_t m, double rank) noexcept nogil:
    """Weighted selection: smallest value whose cumulative weight reaches ``rank``.

    Three-way partition quickselect, O(m) expected; reorders ``buf``.
    """
    cdef Py_ssize_t lo = 0, hi = m - 1, lt, gt, i
    cdef double pivot, wl, wp
    while lo < hi:
        pivot = buf[lo + (hi - lo) // 2].v
        lt = lo
        gt = hi
        i = lo
        wl = 0.0
        wp = 0.0
        while i <= gt:
            if buf[i].v < pivot:
                wl += buf[i].w
                _swap(buf, lt, i)
                lt += 1
                i += 1
            elif buf[i].v > pivot:
                _swap(buf, i, gt)
                gt -= 1
            else:
                wp += buf[i].w
                i += 1
        if wl >= rank:
            hi = lt - 1
        elif wl + wp >= rank:
            return pivot
        else:
            rank -= wl + wp
            lo = gt + 1
    return buf[lo].v


cdef inline double _dist(double dx, double dy, double q) noexcept nogil:
    dx = fabs(dx)
    dy = fabs(dy)
    if q == 2.0:
        return sqrt(dx * dx + dy * dy)
    if q == 1.0:
        return dx + dy
    if isinf(q):
        return dx if dx > dy else dy
    return pow(pow(dx, q) + pow(dy, q), 1.0 / q)


def weighted_lower_median(const double[::1] values, const double[::1] weights):
    """Lower weighted median: first sorted value whose cumulative weight reaches ceil(n/2)."""
    cdef Py_ssize_t m = values.shape[0], i
    cdef double total = 0.0, out
    if m == 0:
        raise ValueError("empty input")
    for i in range(m):
        total += weights[i]
    cdef pair_t* buf = <pair_t*>malloc(m * sizeof(pair_t))
    if buf == NULL:
        raise MemoryError()
    try:
        for i in range(m):
            buf[i].v = values[i]
            buf[i].w = weights[i]
        out = _lower_median(buf, m, <double>(<long long>((total + 1.0) / 2.0)))
    finally:
        free(buf)
    return out


def rotated_medians_2d(const double[::1] px, const double[::1] py, const double[::1] w, const double[::1] thetas):
    """Facility of the rotated coordinate-wise median for every angle, in the original frame."""
    cdef Py_ssize_t m = px.shape[0], t, i, nt = thetas.shape[0]
    cdef double total = 0.0, rank, c, s, mx, my
    for i in range(m):
        total += w[i]
    rank = <double>(<long long>((total + 1.0) / 2.0))
    hx_arr = np.empty(nt)
    hy_arr = np.empty(nt)
    cdef double[::1] hx = hx_arr
    cdef double[::1] hy = hy_arr
    cdef pair_t* bx = <pair_t*>malloc(m * sizeof(pair_t))
    cdef pair_t* by = <pair_t*>malloc(m * sizeof(pair_t))
    if bx == NULL or by == NULL:
        free(bx)
        free(by)
        raise MemoryError()
    try:
        with nogil:
            for t in range(nt):
                c = cos(thetas[t])
                s = sin(thetas[t])
                for i in range(m):
                    bx[i].v = c * px[i] - s * py[i]
                    bx[i].w = w[i]
                    by[i].v = s * px[i] + c * py[i]
                    by[i].w = w[i]
                mx = _lower_median(bx, m, rank)
                my = _lower_median(by, m, rank)
                hx[t] = c * mx + s * my
                hy[t] = -s * mx + c * my
    finally:
        free(bx)
        free(by)
    return hx_arr, hy_arr


def costs_2d(const double[::1] px, const double[::1] py, const double[::1] w,
             const double[::1] hx, const double[::1] hy, double q):
    """Weighted l_q social cost of each candidate facility ``(hx[t], hy[t])``."""
    cdef Py_ssize_t m = px.shape[0], t, i, nt = hx.shape[0]
    cdef double acc
    out_arr = np.empty(nt)
    cdef double[::1] out = out_arr
    with nogil:
        for t in range(nt):
            acc = 0.0
            for i in range(m):
                acc += w[i] * _dist(px[i] - hx[t], py[i] - hy[t], q)
            out[t] = acc
    return out_arr
