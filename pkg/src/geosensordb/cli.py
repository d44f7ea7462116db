"""Operator command line: catalog administration, loading, querying,
serving.

Exit codes: 0 success, 1 user error, 2 internal error.  Stdout carries
only payload bytes (query results, describe documents); everything else
goes to stderr.
"""

from __future__ import annotations

import argparse
import errno
import json
import os
import signal
import sys
import threading
from pathlib import Path

from .catalog import Database, SensorRecord
from .codecs import parse_asc, parse_obs_csv
from .errors import GeoSensorError, LexError, ParseError
from .model import parse_timestamp
from .rasterstore import DEFAULT_TILE_SIZE, BandMeta, RasterCoverageMeta
from .service import DEFAULT_MAX_QUERY_BYTES, HttpError, WqsService, make_server
from .vectorstore import TableSchema

_BINARY_MEDIA = ("image/tiff", "image/png")


def _err(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _open_db(args) -> Database:
    return Database.open(Path(args.root))


def cmd_init(args) -> int:
    Database.init(Path(args.root))
    _info(f"initialized catalog at {args.root}")
    return 0


def cmd_load_raster(args) -> int:
    db = _open_db(args)
    text = Path(args.file).read_text(encoding="utf-8")
    grid, gt, nodata = parse_asc(text)
    height, width = grid.shape
    band = BandMeta(index=args.band, nodata=nodata, pixel_type=args.pixel_type)
    if db.rasters.has_coverage(args.name):
        meta = db.rasters.get_meta(args.name)
        if (meta.width, meta.height) != (width, height) or meta.geotransform != gt:
            raise GeoSensorError(
                f"grid {width}x{height} does not match existing coverage "
                f"{meta.width}x{meta.height}")
        db.add_band(args.name, band)
    else:
        acquired = parse_timestamp(args.timestamp) if args.timestamp else None
        kwargs = {"acquired_at": acquired} if acquired else {}
        meta = RasterCoverageMeta(
            name=args.name, srid=args.srid, geotransform=gt,
            width=width, height=height, bands=(band,),
            tile_size=args.tile_size, sensor_id=args.sensor, **kwargs)
        db.create_coverage(meta)
        meta = db.rasters.get_meta(args.name)
    db.rasters.write_grid(args.name, args.band, grid)
    env = meta.envelope()
    ntiles = meta.tiles_across * meta.tiles_down
    _info(f"loaded {args.name} band {args.band}: {width}x{height} cells, "
          f"{ntiles} tiles, extent "
          f"[{env.min_x}, {env.min_y}, {env.max_x}, {env.max_y}]")
    return 0


def _parse_schema_spec(table: str, spec: str, srid: int, key: str | None) -> TableSchema:
    columns = []
    for part in spec.split(","):
        part = part.strip()
        if not part or ":" not in part:
            raise GeoSensorError(
                f"bad --schema entry {part!r}; expected name:type")
        cname, ctype = (s.strip() for s in part.split(":", 1))
        columns.append((cname, ctype))
    if key is None:
        numbers = [c for c, t in columns if t == "number"]
        if not numbers:
            raise GeoSensorError("--schema needs at least one number column")
        key = numbers[0]
    return TableSchema(name=table, srid=srid, columns=tuple(columns),
                       key_column=key)


def cmd_load_observations(args) -> int:
    db = _open_db(args)
    if db.vectors.has_table(args.table):
        schema = db.vectors.get_schema(args.table)
    elif args.schema:
        schema = _parse_schema_spec(args.table, args.schema, args.srid, args.key)
        db.create_table(schema)
    else:
        raise GeoSensorError(
            f"table {args.table!r} does not exist; pass --schema to create it")
    text = Path(args.file).read_text(encoding="utf-8")
    rows, rejects = parse_obs_csv(text, schema)
    accepted = 0
    for values in rows:
        try:
            db.vectors.insert_row(args.table, values)
            accepted += 1
        except GeoSensorError as exc:
            rejects.append(exc)
    for r in rejects:
        line = getattr(r, "line", None)
        where = f"line {line}: " if line else ""
        _info(f"rejected {where}{r}")
    _info(f"accepted {accepted} rows, rejected {len(rejects)}")
    if accepted == 0 and rejects:
        _err("every row was rejected")
        return 1
    return 0


def cmd_register_sensor(args) -> int:
    db = _open_db(args)
    db.register_sensor(SensorRecord(
        sensor_id=args.sensor_id, name=args.name or args.sensor_id,
        kind=args.kind, platform_id=args.platform,
        phenomenon=args.phenomenon, linked_object=args.link))
    _info(f"registered sensor {args.sensor_id}")
    return 0


def _caret_diagnostic(text: str, position: int) -> str:
    start = text.rfind("\n", 0, position) + 1
    end = text.find("\n", position)
    if end < 0:
        end = len(text)
    line = text[:position].count("\n") + 1
    return (f"line {line}:\n  {text[start:end]}\n"
            f"  {' ' * (position - start)}^")


def cmd_query(args) -> int:
    db = _open_db(args)
    if args.query is not None and args.file:
        raise GeoSensorError("give either a query argument or --file, not both")
    if args.file:
        text = Path(args.file).read_text(encoding="utf-8")
    elif args.query is not None:
        text = args.query
    else:
        text = sys.stdin.read()
    svc = WqsService(db)
    try:
        media, payload = svc.handle_query(text)
    except HttpError as exc:
        _err(exc.message)
        if exc.position is not None:
            _info(_caret_diagnostic(text, exc.position))
        return 1
    if args.output:
        Path(args.output).write_bytes(payload)
        _info(f"wrote {len(payload)} bytes ({media}) to {args.output}")
        return 0
    if media in _BINARY_MEDIA and sys.stdout.isatty():
        _err(f"refusing to write {media} to a terminal; use --output")
        return 1
    sys.stdout.buffer.write(payload)
    sys.stdout.buffer.flush()
    return 0


def cmd_serve(args) -> int:
    db = _open_db(args)
    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        raise GeoSensorError(f"--listen must be host:port, got {args.listen!r}")
    try:
        server = make_server(db, host, int(port),
                             max_query_bytes=args.max_query_bytes)
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            _err(f"address {args.listen} already in use")
            return 1
        raise
    stop = threading.Event()

    def _on_signal(signum, frame):
        stop.set()

    signal.signal(signal.SIGTERM, _on_signal)
    signal.signal(signal.SIGINT, _on_signal)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _info(f"serving on http://{args.listen} (pid {os.getpid()})")
    stop.wait()
    _info("shutting down, finishing in-flight requests")
    server.shutdown()  # returns after active handlers complete
    thread.join()
    server.server_close()
    return 0


def cmd_describe(args) -> int:
    db = _open_db(args)
    svc = WqsService(db)
    name = args.name
    if name is None:
        doc = svc.get_capabilities()
    elif db.rasters.has_coverage(name):
        doc = svc.describe_coverage(name)
    elif db.vectors.has_table(name):
        schema = db.vectors.get_schema(name)
        doc = {
            "name": schema.name,
            "srid": schema.srid,
            "key_column": schema.key_column,
            "columns": [[c, t] for c, t in schema.columns],
            "row_count": db.vectors.row_count(name),
        }
    elif name in db.sensors:
        doc = svc.describe_sensor(name)
    elif name in db.platforms:
        doc = svc.describe_platform(name)
    else:
        raise GeoSensorError(f"nothing named {name!r} in the catalog")
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geosensordb",
        description="Heterogeneous geosensor database operator tool.")
    parser.add_argument("--root", default=os.environ.get("GEOSENSORDB_ROOT", "."),
                        help="catalog root directory (default: $GEOSENSORDB_ROOT or .)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create an empty catalog")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("load-raster", help="load an ESRI ASCII grid as a band")
    p.add_argument("name")
    p.add_argument("band", type=int)
    p.add_argument("file")
    p.add_argument("--srid", type=int, default=4326)
    p.add_argument("--timestamp", help="acquisition time, RFC 3339")
    p.add_argument("--sensor", help="producing sensor id")
    p.add_argument("--tile-size", type=int, default=DEFAULT_TILE_SIZE)
    p.add_argument("--pixel-type", choices=["float32", "float64"],
                   default="float64")
    p.set_defaults(func=cmd_load_raster)

    p = sub.add_parser("load-observations", help="load observation rows from CSV")
    p.add_argument("table")
    p.add_argument("file")
    p.add_argument("--schema",
                   help="inline schema name:type,... (types: number, text, "
                        "timestamp, geometry) when the table does not exist")
    p.add_argument("--srid", type=int, default=4326)
    p.add_argument("--key", help="key column (default: first number column)")
    p.set_defaults(func=cmd_load_observations)

    p = sub.add_parser("register-sensor", help="register a sensor record")
    p.add_argument("sensor_id")
    p.add_argument("--name")
    p.add_argument("--kind", choices=["in-situ", "remote"], required=True)
    p.add_argument("--platform", required=True)
    p.add_argument("--phenomenon", required=True)
    p.add_argument("--link", required=True,
                   help="linked coverage (remote) or table (in-situ)")
    p.set_defaults(func=cmd_register_sensor)

    p = sub.add_parser("query", help="run a query and print the payload")
    p.add_argument("query", nargs="?", help="query text (or use --file / stdin)")
    p.add_argument("--file", help="read the query from a file")
    p.add_argument("--output", help="write the payload to a file")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("serve", help="run the web query service")
    p.add_argument("--listen", default="127.0.0.1:8080")
    p.add_argument("--max-query-bytes", type=int, default=DEFAULT_MAX_QUERY_BYTES)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("describe", help="describe a catalog object (or all)")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_describe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (LexError, ParseError) as exc:
        _err(exc.message)
        return 1
    except GeoSensorError as exc:
        _err(str(exc))
        return 1
    except OSError as exc:
        _err(str(exc))
        return 1
    except Exception as exc:  # noqa: BLE001 - internal failure
        _err(f"internal error: {type(exc).__name__}: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
