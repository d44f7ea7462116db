"""Grayscale+alpha PNG rendering of a grid (the map-image delivery path).

Valid values get a linear min-max stretch to 0..255 (a constant grid maps
to mid-gray 128); NoData pixels are fully transparent.
"""

from __future__ import annotations

import math
import struct
import zlib

import numpy as np

from ..errors import EmptyGrid

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(kind: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(kind + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + kind + payload + struct.pack(">I", crc)


def encode_png(grid, nodata: float | None = None) -> bytes:
    a = np.asarray(grid, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise EmptyGrid(f"grid must be a nonempty 2-d array, got shape {a.shape}")
    height, width = a.shape

    valid = ~np.isnan(a)
    if nodata is not None and not math.isnan(nodata):
        valid &= a != nodata

    gray = np.zeros((height, width), dtype=np.uint8)
    if valid.any():
        vmin = float(a[valid].min())
        vmax = float(a[valid].max())
        if vmax > vmin:
            stretched = np.rint((a - vmin) / (vmax - vmin) * 255.0)
            gray[valid] = np.clip(stretched[valid], 0, 255).astype(np.uint8)
        else:
            gray[valid] = 128
    alpha = np.where(valid, 255, 0).astype(np.uint8)

    # Color type 4 = grayscale with alpha, 8 bits each; filter byte 0 per row.
    raster = np.zeros((height, 1 + width * 2), dtype=np.uint8)
    raster[:, 1::2] = gray
    raster[:, 2::2] = alpha
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 4, 0, 0, 0)
    return (_SIGNATURE
            + _chunk(b"IHDR", ihdr)
            + _chunk(b"IDAT", zlib.compress(raster.tobytes()))
            + _chunk(b"IEND", b""))
