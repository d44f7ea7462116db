"""Shared fixtures: a catalog populated with the reference example data.

The reference workflow evidently carried its station measurement in single
precision: the expected product 1.5616639843600204 equals
fvc * float64(float32(6.652)), not fvc * 6.652.  The station row therefore
stores 6.6519999504089355 (the double nearest float32(6.652)).
"""

from __future__ import annotations


import numpy as np
import pytest

from geosensordb import (
    BandMeta,
    Database,
    GeoTransform,
    PlatformRecord,
    Point,
    RasterCoverageMeta,
    SensorRecord,
    TableSchema,
)
from geosensordb.model import parse_timestamp

NDVIP = 0.4433070719242096
NDVI_MAX = 0.86
NDVI_MIN = 0.0
RET_VALUE = 6.6519999504089355  # float64(float32(6.652))
FVC_EXPECTED = 0.2347660847868792
AET_EXPECTED = 1.5616639843600204

# Station location: NDVI cell (2, 0) and lst_day cell (2, 2).
STATION = Point(25.0, 15.0)

QUERY_TEMP_DIFF = """\
SELECT val1, (gv).val AS val2 ,val1-(gv).val AS
diffval,geom
FROM ( SELECT ST_intersection(rast,the_geom) AS gv,
temp_value AS val1, ST_AsBinary(the_geom) AS geom
FROM in_situ_lst , lst_day
WHERE the_geom && rast
AND ST_intersects(rast,the_geom)
AND temp_lst_id = 1
) foo;
"""

QUERY_NDVI_MAX = """\
SELECT (stats).max
FROM (SELECT ST_SummaryStats(rast) As stats
      FROM ndvi
      ORDER by stats DESC
      limit 1 ) As foo;
"""

QUERY_NDVI_MIN = """\
SELECT (stats).min
FROM (SELECT ST_SummaryStats(rast) As stats
      FROM ndvi
      ORDER by stats ASC
      limit 1 ) As foo;
"""

QUERY_AET = """\
SELECT RET, NDVIp,(pow(((NDVIp-0.86)/(0.86-0)),2)) as FVC,
      (pow(((NDVIp-0.86)/(0.86-0)),2))*RET as AET, the_geom
FROM (SELECT ST_Value(R.rast,I.the_geom) as NDVIp, I.value as RET,
      ST_AsBinary(I.the_geom) as the_geom
      FROM in_situ_ret I, ndvi R
      WHERE ret_id = 1
      AND ST_Value(R.rast,I.the_geom) IS NOT NULL) foo;
"""

SAMPLE_QUERIES = (QUERY_TEMP_DIFF, QUERY_NDVI_MAX, QUERY_NDVI_MIN, QUERY_AET)

NDVI_NODATA = -9999.0
NDVI_GRID = np.array([
    [0.0, 0.86, NDVIP],
    [0.1, 0.2, NDVI_NODATA],
])
NDVI_GT = GeoTransform(0.0, 20.0, 10.0, -10.0)

LST_GRID = np.array([
    [10.0, 11.0, 12.0, 13.0],
    [14.0, 15.0, 16.0, 17.0],
    [18.0, 19.0, 22.5, 21.0],
    [22.0, 23.0, 24.0, 25.0],
])
LST_GT = GeoTransform(0.0, 40.0, 10.0, -10.0)
LST_VALUE_AT_STATION = 22.5
LST_IN_SITU_VALUE = 25.0
DIFFVAL = LST_IN_SITU_VALUE - LST_VALUE_AT_STATION

ACQUIRED = parse_timestamp("2007-07-15T10:00:00Z")


def build_example_catalog(root) -> Database:
    """NDVI + land-surface-temperature fixtures matching the reference
    example values."""
    db = Database.init(root)
    db.create_coverage(RasterCoverageMeta(
        name="ndvi", srid=4326, geotransform=NDVI_GT,
        width=3, height=2, tile_size=256,
        bands=(BandMeta(1, nodata=NDVI_NODATA, pixel_type="float64"),),
        acquired_at=ACQUIRED, sensor_id="ndvi-sat"))
    db.rasters.write_grid("ndvi", 1, NDVI_GRID)

    db.create_coverage(RasterCoverageMeta(
        name="lst_day", srid=4326, geotransform=LST_GT,
        width=4, height=4, tile_size=2,
        bands=(BandMeta(1, nodata=None, pixel_type="float64"),),
        acquired_at=ACQUIRED, sensor_id="lst-sat"))
    db.rasters.write_grid("lst_day", 1, LST_GRID)

    db.create_table(TableSchema(
        name="in_situ_ret", srid=4326, key_column="ret_id",
        columns=(("ret_id", "number"), ("the_geom", "geometry"),
                 ("value", "number"))))
    db.vectors.insert_row("in_situ_ret", [1.0, STATION, RET_VALUE])
    # A second station over the NoData cell: IS NOT NULL must drop it.
    db.vectors.insert_row("in_situ_ret", [2.0, Point(25.0, 5.0), 3.1])

    db.create_table(TableSchema(
        name="in_situ_lst", srid=4326, key_column="temp_lst_id",
        columns=(("temp_lst_id", "number"), ("temp_value", "number"),
                 ("the_geom", "geometry"),
                 ("obs_time", "timestamp"))))
    db.vectors.insert_row(
        "in_situ_lst", [1.0, LST_IN_SITU_VALUE, STATION, ACQUIRED])
    db.vectors.insert_row(
        "in_situ_lst", [2.0, 18.5, Point(5.0, 35.0), ACQUIRED])

    db.register_platform(PlatformRecord("sat-1", "survey satellite"))
    db.register_sensor(SensorRecord(
        sensor_id="ndvi-sat", name="vegetation imager", kind="remote",
        platform_id="sat-1", phenomenon="ndvi", linked_object="ndvi"))
    db.register_sensor(SensorRecord(
        sensor_id="ret-station-1", name="weather station", kind="in-situ",
        platform_id="station-a", phenomenon="reference evapotranspiration",
        linked_object="in_situ_ret"))
    return db


@pytest.fixture
def example_db(tmp_path) -> Database:
    return build_example_catalog(tmp_path / "db")


@pytest.fixture
def empty_db(tmp_path) -> Database:
    return Database.init(tmp_path / "empty")


def single_row(result) -> list:
    assert len(result.rows) == 1, result.rows
    return result.rows[0]
