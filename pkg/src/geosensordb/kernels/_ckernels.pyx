# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled cell-scan kernels; see _pykernels.py for the reference lane."""

from libc.math cimport isnan

import numpy as np


def tile_stats(cells, double nodata, bint has_nodata):
    cdef double[:, ::1] a = np.ascontiguousarray(cells, dtype=np.float64)
    cdef Py_ssize_t nrows = a.shape[0], ncols = a.shape[1]
    cdef Py_ssize_t i, j
    cdef long count = 0
    cdef double total = 0.0, sumsq = 0.0
    cdef double vmin = 0.0, vmax = 0.0, v
    cdef bint sentinel_exact = has_nodata and not isnan(nodata)
    for i in range(nrows):
        for j in range(ncols):
            v = a[i, j]
            if isnan(v):
                continue
            if sentinel_exact and v == nodata:
                continue
            if count == 0:
                vmin = v
                vmax = v
            else:
                if v < vmin:
                    vmin = v
                if v > vmax:
                    vmax = v
            count += 1
            total += v
            sumsq += v * v
    if count == 0:
        return 0, 0.0, 0.0, float("nan"), float("nan")
    return count, total, sumsq, vmin, vmax


def buffer_weighted_sum(cells, double origin_x, double origin_y,
                        double dx, double dy, long col0, long row0,
                        double cx, double cy, double radius, int s,
                        double nodata, bint has_nodata):
    cdef double[:, ::1] a = np.ascontiguousarray(cells, dtype=np.float64)
    cdef Py_ssize_t nrows = a.shape[0], ncols = a.shape[1]
    cdef Py_ssize_t i, j
    cdef int k, m
    cdef long inside
    cdef double r2 = radius * radius
    cdef double wsum = 0.0, wvsum = 0.0
    cdef double v, w, px, py, ddx, ddy
    cdef double inv_s = 1.0 / s
    cdef bint sentinel_exact = has_nodata and not isnan(nodata)
    for i in range(nrows):
        for j in range(ncols):
            v = a[i, j]
            if isnan(v):
                continue
            if sentinel_exact and v == nodata:
                continue
            inside = 0
            for k in range(s):
                px = origin_x + ((col0 + j) + (k + 0.5) * inv_s) * dx
                ddx = px - cx
                for m in range(s):
                    py = origin_y + ((row0 + i) + (m + 0.5) * inv_s) * dy
                    ddy = py - cy
                    if ddx * ddx + ddy * ddy <= r2:
                        inside += 1
            if inside:
                w = inside / <double>(s * s)
                wsum += w
                wvsum += w * v
    return wsum, wvsum
