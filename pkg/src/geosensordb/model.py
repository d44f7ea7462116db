"""Geometry, envelope and runtime-value model shared by all layers.

Runtime values are plain Python objects: ``None`` for SQL null, ``float``
for numbers, ``str`` for text, timezone-aware ``datetime`` for timestamps,
``bytes`` for binary payloads, plus the composite types below.  SQL null
semantics (null never equals null) live in the query executor, not here.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import NonPositiveRadius, SridMismatch

DEFAULT_SRID = 4326


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    srid: int = DEFAULT_SRID

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")
        if self.srid <= 0:
            raise ValueError(f"srid must be positive, got {self.srid}")


@dataclass(frozen=True)
class Envelope:
    min_x: float
    min_y: float
    max_x: float
    max_y: float
    srid: int = DEFAULT_SRID

    def __post_init__(self):
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise ValueError(
                f"envelope min must not exceed max: "
                f"({self.min_x},{self.min_y},{self.max_x},{self.max_y})"
            )

    def contains_point(self, p: Point) -> bool:
        return self.min_x <= p.x <= self.max_x and self.min_y <= p.y <= self.max_y

    def contains(self, other: "Envelope") -> bool:
        return (
            self.min_x <= other.min_x
            and self.min_y <= other.min_y
            and self.max_x >= other.max_x
            and self.max_y >= other.max_y
        )


@dataclass(frozen=True)
class Circle:
    center: Point
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise NonPositiveRadius(f"buffer radius must be > 0, got {self.radius}")

    @property
    def srid(self) -> int:
        return self.center.srid


@dataclass(frozen=True)
class GeomVal:
    """Geometry paired with the raster value found at its position."""

    geom: Point
    val: float

    def __post_init__(self):
        if not math.isfinite(self.val):
            raise ValueError("GeomVal value must be finite")

    def field(self, name: str):
        if name == "geom":
            return self.geom
        if name == "val":
            return self.val
        raise KeyError(name)


@dataclass(frozen=True)
class SummaryStats:
    """count/sum/mean/stddev/min/max over a raster scope, NoData excluded.

    stddev is the population standard deviation.  An empty scope keeps
    count = 0 and projects every other field as null.
    """

    count: int
    sum: float
    mean: float
    stddev: float
    min: float
    max: float

    _FIELDS = ("count", "sum", "mean", "stddev", "min", "max")

    @classmethod
    def empty(cls) -> "SummaryStats":
        return cls(0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def field(self, name: str):
        if name not in self._FIELDS:
            raise KeyError(name)
        if self.count == 0 and name != "count":
            return None
        value = getattr(self, name)
        return float(value) if name != "count" else float(value)


Geometry = Point | Circle


def envelope_of(g) -> Envelope:
    """Smallest axis-aligned envelope containing ``g``.

    Accepts Point, Circle, Envelope, or anything exposing ``.envelope()``
    (raster coverage metadata does).
    """
    if isinstance(g, Point):
        return Envelope(g.x, g.y, g.x, g.y, g.srid)
    if isinstance(g, Circle):
        c, r = g.center, g.radius
        return Envelope(c.x - r, c.y - r, c.x + r, c.y + r, c.srid)
    if isinstance(g, Envelope):
        return g
    if hasattr(g, "envelope"):
        return g.envelope()
    raise TypeError(f"no envelope for {type(g).__name__}")


def envelopes_overlap(a: Envelope, b: Envelope) -> bool:
    """Closed-box intersection test; touching edges and corners count."""
    if a.srid != b.srid:
        raise SridMismatch(f"envelope srids differ: {a.srid} vs {b.srid}")
    return (
        a.min_x <= b.max_x
        and b.min_x <= a.max_x
        and a.min_y <= b.max_y
        and b.min_y <= a.max_y
    )


def buffer_point(p: Point, radius: float) -> Circle:
    if not radius > 0:
        raise NonPositiveRadius(f"buffer radius must be > 0, got {radius}")
    return Circle(center=p, radius=radius)


def format_number(v: float) -> str:
    """Shortest decimal that round-trips to the same double.

    Integral values drop the trailing ``.0`` (they still re-parse
    bitwise-equal).
    """
    if isinstance(v, int):
        return str(v)
    if v != v:
        raise ValueError("NaN must be converted to null before rendering")
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def point_to_wkt(p: Point) -> str:
    return f"POINT({format_number(p.x)} {format_number(p.y)})"


def point_from_wkt(text: str, srid: int = DEFAULT_SRID) -> Point:
    body = text.strip()
    if not body.upper().startswith("POINT"):
        raise ValueError(f"not a point WKT: {text!r}")
    inner = body[body.index("(") + 1 : body.rindex(")")]
    xs, ys = inner.split()
    return Point(float(xs), float(ys), srid)


# Little-endian WKB point: byte-order marker, geometry type 1, two doubles.
def point_to_wkb(p: Point) -> bytes:
    return struct.pack("<BIdd", 1, 1, p.x, p.y)


def point_from_wkb(data: bytes, srid: int = DEFAULT_SRID) -> Point:
    if len(data) != 21:
        raise ValueError(f"expected 21-byte point WKB, got {len(data)} bytes")
    order, gtype, x, y = struct.unpack("<BIdd", data)
    if order != 1 or gtype != 1:
        raise ValueError("only little-endian WKB points are supported")
    return Point(x, y, srid)


def format_timestamp(ts: datetime) -> str:
    """RFC 3339 with Z suffix, microseconds dropped when zero."""
    ts = ts.astimezone(timezone.utc)
    if ts.microsecond:
        return ts.strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)
