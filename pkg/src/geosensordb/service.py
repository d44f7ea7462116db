"""Web Query Service: HTTP front end for queries and catalog operations.

One process serves every payload kind; the response media type follows
the query's delivery-format tag (text/csv by default, image/tiff,
image/png, or application/gml+xml when the select list asks for them).
Errors are JSON bodies ``{"code", "message", "position"?}``.
"""

from __future__ import annotations

import json
import math
import os
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, unquote, urlparse

import numpy as np

from . import algebra
from .catalog import Database
from .codecs import encode_csv, encode_geotiff, encode_gml, encode_png
from .errors import (
    AmbiguousColumn,
    GeoSensorError,
    LexError,
    ParseError,
    SridMismatch,
    UnknownBand,
    UnknownColumn,
    UnknownCoverage,
    UnknownFunction,
    UnknownTable,
)
from .model import Envelope, format_timestamp, parse_timestamp
from .rasterstore import GeoTransform
from .sql import run_query
from .sql.executor import RasterRef, ResultSet

DEFAULT_MAX_QUERY_BYTES = 1 << 20
SERVICE_VERSION = "1.0"

_BAD_REQUEST_ERRORS = (
    LexError, ParseError, UnknownTable, UnknownColumn, UnknownFunction,
    AmbiguousColumn, UnknownCoverage, UnknownBand, SridMismatch,
)

_MEDIA_TYPES = {
    "csv": "text/csv",
    "wkb-inline": "text/csv",
    "geotiff": "image/tiff",
    "png": "image/png",
    "gml": "application/gml+xml",
}


class HttpError(Exception):
    def __init__(self, status: int, code: str, message: str, position=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.position = position

    def body(self) -> bytes:
        doc = {"code": self.code, "message": self.message}
        if self.position is not None:
            doc["position"] = self.position
        return json.dumps(doc).encode("utf-8")


class WqsService:
    """Request handling logic, independent of the HTTP plumbing."""

    def __init__(self, db: Database, max_query_bytes: int = DEFAULT_MAX_QUERY_BYTES):
        self.db = db
        self.max_query_bytes = max_query_bytes

    # -- queries ----------------------------------------------------------

    def handle_query(self, query_text: str) -> tuple[str, bytes]:
        """Returns (media_type, payload) for a query string."""
        delay_ms = os.environ.get("GEOSENSORDB_QUERY_DELAY_MS")  # test hook
        if delay_ms:
            time.sleep(float(delay_ms) / 1000.0)
        if not query_text or not query_text.strip():
            raise HttpError(400, "missing_query", "query parameter q is required")
        if len(query_text.encode("utf-8")) > self.max_query_bytes:
            raise HttpError(413, "query_too_large",
                            f"query exceeds {self.max_query_bytes} bytes")
        try:
            rs = run_query(self.db, query_text)
        except _BAD_REQUEST_ERRORS as exc:
            raise HttpError(400, exc.code, exc.message,
                            getattr(exc, "position", None)) from exc
        except GeoSensorError as exc:
            raise HttpError(500, exc.code, exc.message,
                            getattr(exc, "position", None)) from exc
        return self.encode_result(rs)

    def encode_result(self, rs: ResultSet) -> tuple[str, bytes]:
        tag = rs.format_tag
        if tag in ("csv", "wkb-inline"):
            payload = encode_csv(rs)
            return payload.media_type, payload.data
        if tag in ("geotiff", "png"):
            ref = self._first_raster_ref(rs)
            grid, gt, srid, nodata = self._tile_grid(ref)
            if tag == "geotiff":
                return "image/tiff", encode_geotiff(grid, gt, srid, nodata)
            return "image/png", encode_png(grid, nodata)
        if tag == "gml":
            try:
                return "application/gml+xml", encode_gml(rs.rows, rs.column_names)
            except GeoSensorError as exc:
                raise HttpError(400, exc.code, exc.message) from exc
        raise HttpError(500, "internal", f"unknown format tag {tag!r}")

    def _first_raster_ref(self, rs: ResultSet) -> RasterRef:
        for row in rs.rows:
            for v in row:
                if isinstance(v, RasterRef):
                    return v
        raise HttpError(400, "empty_result",
                        "raster delivery requested but the result has no raster rows")

    def _tile_grid(self, ref: RasterRef):
        meta = self.db.rasters.get_meta(ref.coverage)
        bmeta = meta.band(ref.band)
        tc, tr = ref.tile
        ts = meta.tile_size
        tile = self.db.rasters.tile_array(ref.coverage, ref.band, tc, tr)
        h = min(ts, meta.height - tr * ts)
        w = min(ts, meta.width - tc * ts)
        grid = tile[:h, :w] if tile is not None else np.full(
            (h, w), math.nan if bmeta.nodata is None else bmeta.nodata)
        gt = meta.geotransform
        tile_gt = GeoTransform(gt.x0 + tc * ts * gt.dx, gt.y0 + tr * ts * gt.dy,
                               gt.dx, gt.dy)
        return grid, tile_gt, meta.srid, bmeta.nodata

    # -- catalog operations ------------------------------------------------

    def get_capabilities(self) -> dict:
        db = self.db
        return {
            "service": "WQS",
            "version": SERVICE_VERSION,
            "coverages": [self._coverage_summary(m) for m in db.rasters.coverages()],
            "observation_tables": [
                {
                    "name": s.name,
                    "srid": s.srid,
                    "columns": [[c, t] for c, t in s.columns],
                    "row_count": db.vectors.row_count(s.name),
                }
                for s in db.vectors.tables()
            ],
            "sensors": [vars(s).copy() for s in sorted(
                db.sensors.values(), key=lambda s: s.sensor_id)],
            "platforms": [vars(p).copy() for p in sorted(
                db.platforms.values(), key=lambda p: p.platform_id)],
            "query_functions": sorted(
                ["ST_Value", "ST_Intersects", "ST_Intersection", "ST_SummaryStats",
                 "ST_Buffer", "ST_AsBinary", "ST_AsText", "ST_AsGeoTIFF",
                 "ST_AsPNG", "ST_AsGML", "pow"]),
        }

    def _coverage_summary(self, meta) -> dict:
        env = meta.envelope()
        return {
            "name": meta.name,
            "srid": meta.srid,
            "extent": [env.min_x, env.min_y, env.max_x, env.max_y],
            "bands": [b.index for b in meta.bands],
            "acquired_at": format_timestamp(meta.acquired_at),
            "sensor_id": meta.sensor_id,
        }

    def describe_coverage(self, name: str) -> dict:
        try:
            meta = self.db.rasters.get_meta(name)
        except UnknownCoverage as exc:
            raise HttpError(404, exc.code, exc.message) from exc
        gt = meta.geotransform
        bands = []
        for b in meta.bands:
            stats = algebra.st_summary_stats(self.db.rasters, name, b.index)
            bands.append({
                "index": b.index,
                "nodata": b.nodata,
                "pixel_type": b.pixel_type,
                "stats": {f: stats.field(f) for f in
                          ("count", "sum", "mean", "stddev", "min", "max")},
            })
        return {
            "name": meta.name,
            "srid": meta.srid,
            "geotransform": {"x0": gt.x0, "y0": gt.y0, "dx": gt.dx, "dy": gt.dy},
            "width": meta.width,
            "height": meta.height,
            "tile_size": meta.tile_size,
            "acquired_at": format_timestamp(meta.acquired_at),
            "sensor_id": meta.sensor_id,
            "bands": bands,
        }

    def get_observation(self, table: str, time_from=None, time_to=None,
                        bbox: Envelope | None = None) -> ResultSet:
        try:
            schema = self.db.vectors.get_schema(table)
        except UnknownTable as exc:
            raise HttpError(404, exc.code, exc.message) from exc
        if time_from is not None and time_to is not None and time_from > time_to:
            raise HttpError(400, "bad_interval", "time_from is after time_to")
        if bbox is not None:
            rows = self.db.vectors.query_bbox(table, bbox)
        else:
            rows = self.db.vectors.all_rows(table)
        ts_cols = [i for i, (_, t) in enumerate(schema.columns) if t == "timestamp"]
        if (time_from is not None or time_to is not None) and ts_cols:
            ti = ts_cols[0]
            rows = [r for r in rows if r[ti] is not None
                    and (time_from is None or r[ti] >= time_from)
                    and (time_to is None or r[ti] <= time_to)]
        columns = [(c, t) for c, t in schema.columns]
        return ResultSet(columns, [list(r) for r in rows], "csv")

    def get_coverage(self, name: str, band: int = 1,
                     bbox: Envelope | None = None) -> bytes:
        try:
            meta = self.db.rasters.get_meta(name)
            bmeta = meta.band(band)
        except UnknownCoverage as exc:
            raise HttpError(404, exc.code, exc.message) from exc
        except UnknownBand as exc:
            raise HttpError(404, exc.code, exc.message) from exc
        gt = meta.geotransform
        c0, r0 = 0, 0
        c1, r1 = meta.width - 1, meta.height - 1
        if bbox is not None:
            cols, rows = [], []
            for col in range(meta.width):
                x = gt.x0 + (col + 0.5) * gt.dx
                if bbox.min_x <= x <= bbox.max_x:
                    cols.append(col)
            for row in range(meta.height):
                y = gt.y0 + (row + 0.5) * gt.dy
                if bbox.min_y <= y <= bbox.max_y:
                    rows.append(row)
            if not cols or not rows:
                raise HttpError(400, "disjoint_bbox",
                                "bbox selects no cell centers of the coverage")
            c0, c1 = cols[0], cols[-1]
            r0, r1 = rows[0], rows[-1]
        grid = self.db.rasters.read_grid(name, band)[r0:r1 + 1, c0:c1 + 1].copy()
        nodata = bmeta.nodata
        if nodata is not None and not math.isnan(nodata):
            grid[np.isnan(grid)] = nodata
        sub_gt = GeoTransform(gt.x0 + c0 * gt.dx, gt.y0 + r0 * gt.dy, gt.dx, gt.dy)
        return encode_geotiff(grid, sub_gt, meta.srid, nodata)

    def describe_sensor(self, sensor_id: str) -> dict:
        rec = self.db.sensors.get(sensor_id)
        if rec is None:
            raise HttpError(404, "unknown_sensor", f"no sensor {sensor_id!r}")
        doc = vars(rec).copy()
        if rec.kind == "remote":
            doc["linked_summary"] = self._coverage_summary(
                self.db.rasters.get_meta(rec.linked_object))
        else:
            schema = self.db.vectors.get_schema(rec.linked_object)
            doc["linked_summary"] = {
                "name": schema.name,
                "columns": [[c, t] for c, t in schema.columns],
                "row_count": self.db.vectors.row_count(schema.name),
            }
        return doc

    def describe_platform(self, platform_id: str) -> dict:
        rec = self.db.platforms.get(platform_id)
        if rec is None:
            raise HttpError(404, "unknown_platform", f"no platform {platform_id!r}")
        return vars(rec).copy()


def _parse_bbox(text: str, srid: int) -> Envelope:
    parts = text.split(",")
    if len(parts) != 4:
        raise HttpError(400, "bad_bbox", "bbox must be minx,miny,maxx,maxy")
    try:
        minx, miny, maxx, maxy = (float(p) for p in parts)
        return Envelope(minx, miny, maxx, maxy, srid)
    except ValueError as exc:
        raise HttpError(400, "bad_bbox", str(exc)) from exc


class _Handler(BaseHTTPRequestHandler):
    server_version = "geosensordb-wqs"
    protocol_version = "HTTP/1.1"
    # One request per connection: an idle keep-alive socket would otherwise
    # pin its handler thread and stall graceful shutdown forever.
    timeout = 10

    @property
    def service(self) -> WqsService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # quiet by default
        if os.environ.get("GEOSENSORDB_HTTP_LOG"):
            super().log_message(fmt, *args)

    def _send(self, status: int, media_type: str, body: bytes) -> None:
        self.close_connection = True
        self.send_response(status)
        self.send_header("Content-Type", media_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Connection", "close")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, doc: dict, status: int = 200) -> None:
        body = json.dumps(doc, indent=2, sort_keys=False).encode("utf-8")
        self._send(status, "application/json", body)

    def _route(self, method: str) -> None:
        url = urlparse(self.path)
        params = {k: v[0] for k, v in parse_qs(url.query).items()}
        svc = self.service
        try:
            body = b""
            if method == "POST":
                length = int(self.headers.get("Content-Length") or 0)
                if length > svc.max_query_bytes + 4096:
                    raise HttpError(413, "query_too_large", "request body too large")
                body = self.rfile.read(length)
            segments = [s for s in url.path.split("/") if s]

            if url.path == "/wqs":
                q = params.get("q")
                if q is None and body:
                    form = parse_qs(body.decode("utf-8"))
                    if "q" in form:
                        q = form["q"][0]
                    else:
                        q = unquote(body.decode("utf-8"))
                if q is None:
                    raise HttpError(400, "missing_query",
                                    "query parameter q is required")
                media, payload = svc.handle_query(q)
                self._send(200, media, payload)
            elif url.path == "/capabilities" and method == "GET":
                self._send_json(svc.get_capabilities())
            elif len(segments) == 2 and segments[0] == "coverages":
                self._send_json(svc.describe_coverage(segments[1]))
            elif len(segments) == 3 and segments[0] == "coverages" \
                    and segments[2] == "data":
                name = segments[1]
                band = int(params.get("band", "1"))
                bbox = None
                if "bbox" in params:
                    srid = svc.describe_coverage(name)["srid"]
                    bbox = _parse_bbox(params["bbox"], srid)
                self._send(200, "image/tiff", svc.get_coverage(name, band, bbox))
            elif len(segments) == 2 and segments[0] == "observations":
                table = segments[1]
                time_from = time_to = None
                if "from" in params:
                    time_from = parse_timestamp(params["from"])
                if "to" in params:
                    time_to = parse_timestamp(params["to"])
                bbox = None
                if "bbox" in params:
                    try:
                        srid = svc.db.vectors.get_schema(table).srid
                    except UnknownTable as exc:
                        raise HttpError(404, exc.code, exc.message) from exc
                    bbox = _parse_bbox(params["bbox"], srid)
                rs = svc.get_observation(table, time_from, time_to, bbox)
                payload = encode_csv(rs)
                self._send(200, payload.media_type, payload.data)
            elif len(segments) == 2 and segments[0] == "sensors":
                self._send_json(svc.describe_sensor(segments[1]))
            elif len(segments) == 2 and segments[0] == "platforms":
                self._send_json(svc.describe_platform(segments[1]))
            else:
                raise HttpError(404, "not_found", f"no route for {url.path}")
        except HttpError as exc:
            self._send(exc.status, "application/json", exc.body())
        except Exception as exc:  # noqa: BLE001 - last-resort 500
            err = HttpError(500, "internal", f"{type(exc).__name__}: {exc}")
            self._send(err.status, "application/json", err.body())

    def do_GET(self):
        self._route("GET")

    def do_POST(self):
        self._route("POST")


class WqsServer(ThreadingHTTPServer):
    daemon_threads = False  # finish in-flight requests on shutdown
    block_on_close = True

    def __init__(self, address: tuple[str, int], service: WqsService):
        super().__init__(address, _Handler)
        self.service = service


def make_server(db: Database, host: str = "127.0.0.1", port: int = 8080,
                max_query_bytes: int = DEFAULT_MAX_QUERY_BYTES) -> WqsServer:
    return WqsServer((host, port), WqsService(db, max_query_bytes))
