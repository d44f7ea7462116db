"""Catalog root: one directory holding catalog.json, raster tiles, and
table row files.

``catalog.json`` records every coverage meta, table schema, sensor, and
platform; cell data and rows live in their stores' files.  The Database
facade re-saves the catalog after each metadata mutation.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import DuplicateName, GeoSensorError, InvalidMeta, UnknownCoverage, UnknownTable
from .model import format_timestamp, parse_timestamp
from .rasterstore import BandMeta, GeoTransform, RasterCoverageMeta, RasterStore
from .vectorstore import TableSchema, VectorStore

CATALOG_FILE = "catalog.json"
CATALOG_VERSION = 1


@dataclass(frozen=True)
class SensorRecord:
    sensor_id: str
    name: str
    kind: str  # "in-situ" | "remote"
    platform_id: str
    phenomenon: str
    linked_object: str


@dataclass(frozen=True)
class PlatformRecord:
    platform_id: str
    name: str
    description: str = ""


class Database:
    """Facade over both stores plus the sensor/platform registry."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.rasters = RasterStore(self.root)
        self.vectors = VectorStore(self.root)
        self.sensors: dict[str, SensorRecord] = {}
        self.platforms: dict[str, PlatformRecord] = {}

    # -- lifecycle --------------------------------------------------------

    @classmethod
    def init(cls, root: Path) -> "Database":
        root = Path(root)
        if (root / CATALOG_FILE).exists():
            raise GeoSensorError(f"{root} is already initialized")
        if root.exists() and any(root.iterdir()):
            raise GeoSensorError(f"{root} is not empty and not a catalog root")
        root.mkdir(parents=True, exist_ok=True)
        db = cls(root)
        db.save()
        return db

    @classmethod
    def open(cls, root: Path) -> "Database":
        root = Path(root)
        path = root / CATALOG_FILE
        if not path.exists():
            raise GeoSensorError(f"no catalog at {root}")
        db = cls(root)
        doc = json.loads(path.read_text(encoding="utf-8"))
        for rdoc in doc.get("rasters", []):
            db.rasters.register_loaded(_raster_meta_from_json(rdoc))
        for tdoc in doc.get("tables", []):
            db.vectors.register_loaded(_schema_from_json(tdoc))
        for sdoc in doc.get("sensors", []):
            rec = SensorRecord(**sdoc)
            db.sensors[rec.sensor_id] = rec
        for pdoc in doc.get("platforms", []):
            rec = PlatformRecord(**pdoc)
            db.platforms[rec.platform_id] = rec
        return db

    def save(self) -> None:
        doc = {
            "version": CATALOG_VERSION,
            "rasters": [_raster_meta_to_json(m) for m in self.rasters.coverages()],
            "tables": [_schema_to_json(s) for s in self.vectors.tables()],
            "sensors": [asdict(s) for s in sorted(self.sensors.values(),
                                                  key=lambda s: s.sensor_id)],
            "platforms": [asdict(p) for p in sorted(self.platforms.values(),
                                                    key=lambda p: p.platform_id)],
        }
        path = self.root / CATALOG_FILE
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        tmp.replace(path)

    # -- mutations (each persists the catalog) ----------------------------

    def create_coverage(self, meta: RasterCoverageMeta) -> None:
        if self.vectors.has_table(meta.name):
            raise DuplicateName(f"name {meta.name!r} already used by a table")
        self.rasters.create_coverage(meta)
        self.save()

    def add_band(self, name: str, band: BandMeta) -> None:
        self.rasters.add_band(name, band)
        self.save()

    def create_table(self, schema: TableSchema) -> None:
        if self.rasters.has_coverage(schema.name):
            raise DuplicateName(f"name {schema.name!r} already used by a coverage")
        self.vectors.create_table(schema)
        self.save()

    def register_platform(self, record: PlatformRecord) -> None:
        self.platforms[record.platform_id] = record
        self.save()

    def register_sensor(self, record: SensorRecord) -> None:
        if record.kind not in ("in-situ", "remote"):
            raise InvalidMeta(f"sensor kind must be in-situ or remote, got {record.kind!r}")
        if record.kind == "remote":
            if not self.rasters.has_coverage(record.linked_object):
                raise UnknownCoverage(
                    f"remote sensor must link a coverage, {record.linked_object!r} unknown")
        else:
            if not self.vectors.has_table(record.linked_object):
                raise UnknownTable(
                    f"in-situ sensor must link a table, {record.linked_object!r} unknown")
        if record.platform_id not in self.platforms:
            self.platforms[record.platform_id] = PlatformRecord(
                platform_id=record.platform_id, name=record.platform_id)
        self.sensors[record.sensor_id] = record
        self.save()


def _raster_meta_to_json(meta: RasterCoverageMeta) -> dict:
    gt = meta.geotransform
    return {
        "name": meta.name,
        "srid": meta.srid,
        "geotransform": {"x0": gt.x0, "y0": gt.y0, "dx": gt.dx, "dy": gt.dy},
        "width": meta.width,
        "height": meta.height,
        "tile_size": meta.tile_size,
        "acquired_at": format_timestamp(meta.acquired_at),
        "sensor_id": meta.sensor_id,
        "bands": [
            {"index": b.index, "nodata": b.nodata, "pixel_type": b.pixel_type}
            for b in meta.bands
        ],
    }


def _raster_meta_from_json(doc: dict) -> RasterCoverageMeta:
    gt = doc["geotransform"]
    return RasterCoverageMeta(
        name=doc["name"],
        srid=doc["srid"],
        geotransform=GeoTransform(gt["x0"], gt["y0"], gt["dx"], gt["dy"]),
        width=doc["width"],
        height=doc["height"],
        tile_size=doc["tile_size"],
        acquired_at=parse_timestamp(doc["acquired_at"]),
        sensor_id=doc.get("sensor_id"),
        bands=tuple(
            BandMeta(b["index"], b.get("nodata"), b.get("pixel_type", "float64"))
            for b in doc["bands"]
        ),
    )


def _schema_to_json(schema: TableSchema) -> dict:
    return {
        "name": schema.name,
        "srid": schema.srid,
        "key_column": schema.key_column,
        "columns": [[c, t] for c, t in schema.columns],
    }


def _schema_from_json(doc: dict) -> TableSchema:
    return TableSchema(
        name=doc["name"],
        srid=doc["srid"],
        key_column=doc["key_column"],
        columns=tuple((c, t) for c, t in doc["columns"]),
    )
