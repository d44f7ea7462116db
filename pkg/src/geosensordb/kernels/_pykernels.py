"""Numpy fallback implementations of the compiled kernels."""

import math

import numpy as np


def tile_stats(cells, nodata, has_nodata):
    """Accumulate (count, sum, sum_of_squares, min, max) over valid cells.

    NaN cells are always invalid; a non-NaN ``nodata`` sentinel is compared
    exactly.  Returns (0, 0.0, 0.0, nan, nan) when nothing is valid.
    """
    a = np.asarray(cells, dtype=np.float64)
    mask = ~np.isnan(a)
    if has_nodata and not math.isnan(nodata):
        mask &= a != nodata
    valid = a[mask]
    if valid.size == 0:
        return 0, 0.0, 0.0, math.nan, math.nan
    return (
        int(valid.size),
        float(valid.sum()),
        float(np.square(valid).sum()),
        float(valid.min()),
        float(valid.max()),
    )


def buffer_weighted_sum(cells, origin_x, origin_y, dx, dy, col0, row0,
                        cx, cy, radius, s, nodata, has_nodata):
    """Area-fraction-weighted sum of a cell window against a circle.

    ``cells[i, j]`` holds the value of global cell (row0 + i, col0 + j) of a
    grid with geotransform (origin_x, origin_y, dx, dy).  Each cell's weight
    is the fraction of its s x s subsample centers falling inside the circle
    centered at (cx, cy).  Returns (weight_sum, weighted_value_sum).
    """
    a = np.asarray(cells, dtype=np.float64)
    nrows, ncols = a.shape
    # Subsample center offsets within one cell, in cell-fraction units.
    frac = (np.arange(s) + 0.5) / s
    r2 = radius * radius
    wsum = 0.0
    wvsum = 0.0
    cols = col0 + np.arange(ncols)
    sx = origin_x + (cols[:, None] + frac[None, :]) * dx  # (ncols, s)
    for i in range(nrows):
        row = row0 + i
        sy = origin_y + (row + frac) * dy  # (s,)
        d2 = (sx[:, :, None] - cx) ** 2 + (sy[None, None, :] - cy) ** 2
        inside = (d2 <= r2).sum(axis=(1, 2))  # per column
        w = inside / (s * s)
        v = a[i]
        valid = ~np.isnan(v)
        if has_nodata and not math.isnan(nodata):
            valid &= v != nodata
        valid &= w > 0
        wsum += float(w[valid].sum())
        wvsum += float((w[valid] * v[valid]).sum())
    return wsum, wvsum
