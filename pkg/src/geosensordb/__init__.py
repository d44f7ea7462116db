"""Heterogeneous geosensor database: tiled raster coverages and indexed
point observation tables behind one SQL-style query language, with an
HTTP query service and a loader CLI."""

from .catalog import Database, PlatformRecord, SensorRecord
from .errors import GeoSensorError
from .model import Circle, Envelope, Point, SummaryStats
from .rasterstore import BandMeta, GeoTransform, RasterCoverageMeta
from .sql import run_query
from .vectorstore import TableSchema

__version__ = "0.1.0"

__all__ = [
    "BandMeta",
    "Circle",
    "Database",
    "Envelope",
    "GeoSensorError",
    "GeoTransform",
    "PlatformRecord",
    "Point",
    "RasterCoverageMeta",
    "SensorRecord",
    "SummaryStats",
    "TableSchema",
    "run_query",
    "__version__",
]
