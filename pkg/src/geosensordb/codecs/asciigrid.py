"""ESRI ASCII grid parsing and rendering (raster ingestion format)."""

from __future__ import annotations

import numpy as np

from ..errors import CellCountMismatch, HeaderError
from ..model import format_number
from ..rasterstore import GeoTransform

_REQUIRED = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")


def parse_asc(text: str):
    """Returns (grid, GeoTransform, nodata); grid rows run top-first as in
    the file, nodata is None when the header has no NODATA_value."""
    header: dict[str, float] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) == 2 and parts[0][0].isalpha():
            key = parts[0].lower()
            try:
                header[key] = float(parts[1])
            except ValueError:
                raise HeaderError(f"invalid value for {key}: {parts[1]!r}") from None
            i += 1
        else:
            break
    for key in _REQUIRED:
        if key not in header:
            raise HeaderError(key)
    ncols = int(header["ncols"])
    nrows = int(header["nrows"])
    if ncols <= 0 or nrows <= 0 or ncols != header["ncols"] or nrows != header["nrows"]:
        raise HeaderError(f"ncols/nrows must be positive integers, got "
                          f"{header['ncols']}/{header['nrows']}")
    cellsize = header["cellsize"]
    if cellsize <= 0:
        raise HeaderError(f"cellsize must be positive, got {cellsize}")
    nodata = header.get("nodata_value")

    values = []
    for line in lines[i:]:
        values.extend(float(tok) for tok in line.split())
    if len(values) != ncols * nrows:
        raise CellCountMismatch(
            f"expected {ncols * nrows} cells, found {len(values)}")
    grid = np.array(values, dtype=np.float64).reshape(nrows, ncols)
    gt = GeoTransform(
        x0=header["xllcorner"],
        y0=header["yllcorner"] + nrows * cellsize,
        dx=cellsize,
        dy=-cellsize,
    )
    return grid, gt, nodata


def render_asc(grid, gt: GeoTransform, nodata: float | None = None) -> str:
    """Inverse of parse_asc for square-cell north-up grids."""
    a = np.asarray(grid, dtype=np.float64)
    nrows, ncols = a.shape
    if abs(gt.dy) != gt.dx:
        raise ValueError("ASC requires square cells")
    lines = [
        f"ncols {ncols}",
        f"nrows {nrows}",
        f"xllcorner {format_number(gt.x0)}",
        f"yllcorner {format_number(gt.y0 + nrows * gt.dy)}",
        f"cellsize {format_number(gt.dx)}",
    ]
    if nodata is not None:
        lines.append(f"NODATA_value {format_number(nodata)}")
    for row in a:
        lines.append(" ".join(format_number(float(v)) for v in row))
    return "\n".join(lines) + "\n"
