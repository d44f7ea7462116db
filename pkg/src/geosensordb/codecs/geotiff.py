"""Minimal GeoTIFF codec: baseline little-endian TIFF, one float64 band,
one uncompressed strip, georeferenced with ModelPixelScale/ModelTiepoint
and a GeoKeyDirectory carrying the srid.

The decoder accepts exactly what the encoder emits and names the first
unsupported tag or layout feature it meets; foreign TIFFs are out of
scope.
"""

from __future__ import annotations

import math
import struct

import numpy as np

from ..errors import EmptyGrid, UnsupportedTiff
from ..rasterstore import GeoTransform

_II = b"II"
_MAGIC = 42

T_IMAGE_WIDTH = 256
T_IMAGE_LENGTH = 257
T_BITS_PER_SAMPLE = 258
T_COMPRESSION = 259
T_PHOTOMETRIC = 262
T_STRIP_OFFSETS = 273
T_SAMPLES_PER_PIXEL = 277
T_ROWS_PER_STRIP = 278
T_STRIP_BYTE_COUNTS = 279
T_SAMPLE_FORMAT = 339
T_MODEL_PIXEL_SCALE = 33550
T_MODEL_TIEPOINT = 33922
T_GEO_KEY_DIRECTORY = 34735
T_GDAL_NODATA = 42113

TYPE_SHORT = 3
TYPE_LONG = 4
TYPE_ASCII = 2
TYPE_DOUBLE = 12

_TYPE_SIZE = {TYPE_SHORT: 2, TYPE_LONG: 4, TYPE_ASCII: 1, TYPE_DOUBLE: 8}

KEY_MODEL_TYPE = 1024
KEY_RASTER_TYPE = 1025
KEY_GEOGRAPHIC_TYPE = 2048
KEY_PROJECTED_TYPE = 3072


def _is_geographic(srid: int) -> bool:
    # EPSG geographic CRS codes cluster in the 4xxx block.
    return 4000 <= srid < 5000


def encode_geotiff(grid, gt: GeoTransform, srid: int, nodata: float | None) -> bytes:
    a = np.asarray(grid, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise EmptyGrid(f"grid must be a nonempty 2-d array, got shape {a.shape}")
    height, width = a.shape

    srid_key = KEY_GEOGRAPHIC_TYPE if _is_geographic(srid) else KEY_PROJECTED_TYPE
    geokeys = [
        1, 1, 0, 3,
        KEY_MODEL_TYPE, 0, 1, 2 if _is_geographic(srid) else 1,
        KEY_RASTER_TYPE, 0, 1, 1,
        srid_key, 0, 1, srid,
    ]
    pixel_scale = (gt.dx, abs(gt.dy), 0.0)
    tiepoint = (0.0, 0.0, 0.0, gt.x0, gt.y0, 0.0)

    entries = [
        (T_IMAGE_WIDTH, TYPE_LONG, [width]),
        (T_IMAGE_LENGTH, TYPE_LONG, [height]),
        (T_BITS_PER_SAMPLE, TYPE_SHORT, [64]),
        (T_COMPRESSION, TYPE_SHORT, [1]),
        (T_PHOTOMETRIC, TYPE_SHORT, [1]),
        (T_STRIP_OFFSETS, TYPE_LONG, [0]),  # patched below
        (T_SAMPLES_PER_PIXEL, TYPE_SHORT, [1]),
        (T_ROWS_PER_STRIP, TYPE_LONG, [height]),
        (T_STRIP_BYTE_COUNTS, TYPE_LONG, [a.nbytes]),
        (T_SAMPLE_FORMAT, TYPE_SHORT, [3]),
        (T_MODEL_PIXEL_SCALE, TYPE_DOUBLE, list(pixel_scale)),
        (T_MODEL_TIEPOINT, TYPE_DOUBLE, list(tiepoint)),
        (T_GEO_KEY_DIRECTORY, TYPE_SHORT, geokeys),
    ]
    if nodata is not None:
        text = ("nan" if math.isnan(nodata) else repr(nodata)).encode("ascii") + b"\0"
        entries.append((T_GDAL_NODATA, TYPE_ASCII, text))

    ifd_offset = 8
    ifd_size = 2 + len(entries) * 12 + 4
    extra_offset = ifd_offset + ifd_size
    extra = bytearray()
    packed_entries = []
    for tag, typ, values in entries:
        count = len(values)
        payload = _pack_values(typ, values)
        if len(payload) <= 4:
            packed_entries.append((tag, typ, count, payload.ljust(4, b"\0"), None))
        else:
            packed_entries.append((tag, typ, count, None, extra_offset + len(extra)))
            extra.extend(payload)
    data_offset = extra_offset + len(extra)

    out = bytearray()
    out += _II + struct.pack("<HI", _MAGIC, ifd_offset)
    out += struct.pack("<H", len(entries))
    for tag, typ, count, inline, offset in packed_entries:
        if tag == T_STRIP_OFFSETS:
            inline = struct.pack("<I", data_offset)
        if inline is not None:
            out += struct.pack("<HHI", tag, typ, count) + inline
        else:
            out += struct.pack("<HHII", tag, typ, count, offset)
    out += struct.pack("<I", 0)  # no further IFDs
    out += extra
    out += a.astype("<f8").tobytes()
    return bytes(out)


def _pack_values(typ: int, values) -> bytes:
    if typ == TYPE_ASCII:
        return bytes(values)
    fmt = {TYPE_SHORT: "H", TYPE_LONG: "I", TYPE_DOUBLE: "d"}[typ]
    return struct.pack("<" + fmt * len(values), *values)


def decode_geotiff(data: bytes):
    """Inverse of encode_geotiff; returns (grid, GeoTransform, srid, nodata)."""
    if len(data) < 8:
        raise UnsupportedTiff("truncated header")
    if data[:2] == b"MM":
        raise UnsupportedTiff("big-endian TIFF (MM) not supported")
    if data[:2] != _II or struct.unpack_from("<H", data, 2)[0] != _MAGIC:
        raise UnsupportedTiff("not a little-endian TIFF")
    (ifd_offset,) = struct.unpack_from("<I", data, 4)
    try:
        (count,) = struct.unpack_from("<H", data, ifd_offset)
        tags = {}
        for i in range(count):
            tag, typ, n = struct.unpack_from("<HHI", data, ifd_offset + 2 + i * 12)
            value_field = ifd_offset + 2 + i * 12 + 8
            size = _TYPE_SIZE.get(typ)
            if size is None:
                raise UnsupportedTiff(f"unsupported field type {typ} in tag {tag}")
            total = size * n
            offset = value_field if total <= 4 else struct.unpack_from("<I", data, value_field)[0]
            tags[tag] = _unpack_values(data, typ, n, offset)
        (next_ifd,) = struct.unpack_from("<I", data, ifd_offset + 2 + count * 12)
    except struct.error:
        raise UnsupportedTiff("truncated IFD") from None
    if next_ifd != 0:
        raise UnsupportedTiff("multi-image TIFF not supported")

    known = {
        T_IMAGE_WIDTH, T_IMAGE_LENGTH, T_BITS_PER_SAMPLE, T_COMPRESSION,
        T_PHOTOMETRIC, T_STRIP_OFFSETS, T_SAMPLES_PER_PIXEL, T_ROWS_PER_STRIP,
        T_STRIP_BYTE_COUNTS, T_SAMPLE_FORMAT, T_MODEL_PIXEL_SCALE,
        T_MODEL_TIEPOINT, T_GEO_KEY_DIRECTORY, T_GDAL_NODATA,
    }
    for tag in tags:
        if tag not in known:
            raise UnsupportedTiff(f"unsupported tag {tag}")

    def require(tag, name):
        if tag not in tags:
            raise UnsupportedTiff(f"missing required tag {name}")
        return tags[tag]

    width = require(T_IMAGE_WIDTH, "ImageWidth")[0]
    height = require(T_IMAGE_LENGTH, "ImageLength")[0]
    if require(T_BITS_PER_SAMPLE, "BitsPerSample")[0] != 64:
        raise UnsupportedTiff("only 64-bit samples supported")
    if require(T_COMPRESSION, "Compression")[0] != 1:
        raise UnsupportedTiff("compressed TIFF not supported")
    if require(T_SAMPLE_FORMAT, "SampleFormat")[0] != 3:
        raise UnsupportedTiff("only IEEE float samples supported")
    offsets = require(T_STRIP_OFFSETS, "StripOffsets")
    counts = require(T_STRIP_BYTE_COUNTS, "StripByteCounts")
    if len(offsets) != 1:
        raise UnsupportedTiff("multi-strip TIFF not supported")
    if counts[0] != width * height * 8:
        raise UnsupportedTiff("strip size does not match dimensions")
    if offsets[0] + counts[0] > len(data):
        raise UnsupportedTiff("truncated strip data")
    grid = np.frombuffer(data, dtype="<f8", count=width * height,
                         offset=offsets[0]).reshape(height, width).copy()

    scale = require(T_MODEL_PIXEL_SCALE, "ModelPixelScale")
    tie = require(T_MODEL_TIEPOINT, "ModelTiepoint")
    gt = GeoTransform(x0=tie[3], y0=tie[4], dx=scale[0], dy=-scale[1])

    geokeys = require(T_GEO_KEY_DIRECTORY, "GeoKeyDirectory")
    srid = 0
    for i in range(4, len(geokeys), 4):
        key, _, _, value = geokeys[i:i + 4]
        if key in (KEY_GEOGRAPHIC_TYPE, KEY_PROJECTED_TYPE):
            srid = value
    if srid == 0:
        raise UnsupportedTiff("GeoKeyDirectory carries no CRS code")

    nodata = None
    if T_GDAL_NODATA in tags:
        text = tags[T_GDAL_NODATA].split(b"\0")[0].decode("ascii")
        nodata = float(text)
    return grid, gt, srid, nodata


def _unpack_values(data, typ, n, offset):
    if typ == TYPE_ASCII:
        return bytes(data[offset:offset + n])
    fmt = {TYPE_SHORT: "H", TYPE_LONG: "I", TYPE_DOUBLE: "d"}[typ]
    try:
        return list(struct.unpack_from("<" + fmt * n, data, offset))
    except struct.error:
        raise UnsupportedTiff("truncated tag data") from None
