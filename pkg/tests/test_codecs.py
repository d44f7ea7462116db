import csv
import io
import struct
import zlib
import xml.etree.ElementTree as ET
from datetime import datetime, timezone

import numpy as np
import pytest
from PIL import Image

from geosensordb import Point, TableSchema
from geosensordb.codecs import (
    decode_geotiff,
    encode_csv,
    encode_geotiff,
    encode_gml,
    encode_png,
    parse_asc,
    parse_obs_csv,
    render_asc,
)
from geosensordb.errors import (
    CellCountMismatch,
    EmptyGrid,
    HeaderError,
    HeaderMismatch,
    UnsupportedGeometry,
    UnsupportedTiff,
)
from geosensordb.model import Circle, GeomVal, SummaryStats
from geosensordb.rasterstore import GeoTransform
from geosensordb.sql.executor import ResultSet


# -- GeoTIFF ------------------------------------------------------------------

def test_geotiff_roundtrip_100_random_grids():
    rng = np.random.default_rng(31)
    for i in range(100):
        h = int(rng.integers(1, 40))
        w = int(rng.integers(1, 40))
        grid = rng.uniform(-1e6, 1e6, size=(h, w))
        nodata = -9999.0 if rng.random() < 0.5 else None
        if nodata is not None:
            grid[rng.random((h, w)) < 0.2] = nodata
        gt = GeoTransform(float(rng.uniform(-100, 100)),
                          float(rng.uniform(-100, 100)),
                          float(rng.uniform(0.1, 50)),
                          -float(rng.uniform(0.1, 50)))
        srid = int(rng.choice([4326, 32632]))
        data = encode_geotiff(grid, gt, srid, nodata)
        grid2, gt2, srid2, nodata2 = decode_geotiff(data)
        assert np.array_equal(grid2, grid)  # bit-exact
        assert gt2 == gt
        assert srid2 == srid
        assert nodata2 == nodata


def test_geotiff_is_little_endian_tiff():
    data = encode_geotiff(np.zeros((2, 2)), GeoTransform(0, 2, 1, -1), 4326, None)
    assert data[:4] == b"II*\x00"


def test_geotiff_decoder_rejects_big_endian_and_truncation():
    data = encode_geotiff(np.ones((3, 3)), GeoTransform(0, 3, 1, -1), 4326, None)
    with pytest.raises(UnsupportedTiff):
        decode_geotiff(b"MM\x00*" + data[4:])
    with pytest.raises((UnsupportedTiff, ValueError, struct.error)):
        decode_geotiff(data[:20])
    with pytest.raises(UnsupportedTiff):
        decode_geotiff(b"not a tiff at all")


def test_geotiff_ifd_layout():
    # Baseline reader view: sorted tags, one strip, 64-bit IEEE samples.
    grid = np.arange(12.0).reshape(3, 4)
    data = encode_geotiff(grid, GeoTransform(10, 30, 2, -2), 4326, None)
    (ifd_off,) = struct.unpack("<I", data[4:8])
    (n,) = struct.unpack("<H", data[ifd_off:ifd_off + 2])
    tags = [struct.unpack("<HHII", data[ifd_off + 2 + i * 12:
                                        ifd_off + 14 + i * 12])
            for i in range(n)]
    tag_ids = [t[0] for t in tags]
    assert tag_ids == sorted(tag_ids)
    by_id = {t[0]: t for t in tags}
    assert by_id[256][3] == 4 and by_id[257][3] == 3  # width, height
    assert by_id[258][3] == 64  # bits per sample
    assert by_id[339][3] == 3  # IEEE float
    assert by_id[279][3] == 4 * 3 * 8  # strip byte count
    strip_off = by_id[273][3]
    samples = np.frombuffer(data, dtype="<f8", count=12, offset=strip_off)
    assert np.array_equal(samples.reshape(3, 4), grid)


# -- PNG ----------------------------------------------------------------------

def _walk_chunks(data):
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    i = 8
    chunks = []
    while i < len(data):
        (length,) = struct.unpack(">I", data[i:i + 4])
        kind = data[i + 4:i + 8]
        payload = data[i + 8:i + 8 + length]
        (crc,) = struct.unpack(">I", data[i + 8 + length:i + 12 + length])
        assert crc == zlib.crc32(kind + payload) & 0xFFFFFFFF
        chunks.append((kind, payload))
        i += 12 + length
    return chunks


def test_png_chunks_and_crc():
    grid = np.array([[0.0, 5.0], [10.0, -1.0]])
    data = encode_png(grid, nodata=-1.0)
    kinds = [k for k, _ in _walk_chunks(data)]
    assert kinds == [b"IHDR", b"IDAT", b"IEND"]


def test_png_stretch_and_alpha():
    grid = np.array([[0.0, 5.0], [10.0, -1.0]])
    img = Image.open(io.BytesIO(encode_png(grid, nodata=-1.0)))
    assert img.mode == "LA"
    px = np.asarray(img)
    assert px[0, 0].tolist() == [0, 255]
    assert px[0, 1].tolist() == [128, 255]  # midpoint of the stretch
    assert px[1, 0].tolist() == [255, 255]
    assert px[1, 1, 1] == 0  # NoData pixel is transparent
    const = Image.open(io.BytesIO(encode_png(np.full((2, 2), 3.0))))
    assert np.asarray(const)[..., 0].tolist() == [[128, 128], [128, 128]]


def test_png_rejects_empty():
    with pytest.raises(EmptyGrid):
        encode_png(np.zeros((0, 3)))


# -- CSV ----------------------------------------------------------------------

def test_csv_numbers_reparse_bitwise():
    rng = np.random.default_rng(32)
    values = [float(v) for v in rng.uniform(-1e9, 1e9, 50)]
    values += [0.2347660847868792, 1.5616639843600204, 3.0, -0.0]
    rs = ResultSet([("v", "number")], [[v] for v in values], "csv")
    payload = encode_csv(rs)
    assert payload.media_type == "text/csv"
    text = payload.data.decode("utf-8")
    assert text.endswith("\r\n")
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    assert header == ["v"]
    back = [float(row[0]) for row in reader]
    assert back == values


def test_csv_composite_and_null_rendering():
    ts = datetime(2007, 7, 15, 10, 0, tzinfo=timezone.utc)
    rows = [[None, b"\x01\x02", Point(25, 15), ts,
             GeomVal(Point(1, 2), 9.5),
             SummaryStats(2, 3.0, 1.5, 0.5, 1.0, 2.0),
             Circle(Point(0, 0), 2.0), "a,b"]]
    rs = ResultSet([(c, "text") for c in
                    ["n", "b", "p", "t", "gv", "s", "c", "q"]], rows, "csv")
    text = encode_csv(rs).data.decode("utf-8")
    line = text.splitlines()[1]
    fields = next(csv.reader(io.StringIO(line)))
    assert fields[0] == ""
    assert fields[1] == "0102"
    assert fields[2] == "POINT(25 15)"
    assert fields[3] == "2007-07-15T10:00:00Z"
    assert fields[4] == "(POINT(1 2),9.5)"
    assert fields[5] == "(2,3,1.5,0.5,1,2)"
    assert fields[6] == "CIRCLE(0 0, 2)"
    assert fields[7] == "a,b"  # RFC 4180 quoting survives the round trip


# -- GML ----------------------------------------------------------------------

def test_gml_structure_parses_back():
    rows = [[Point(25, 15), 6.5, "station"], [Point(5, 15), None, "x"]]
    data = encode_gml(rows, ["the_geom", "value", "name"])
    root = ET.fromstring(data)
    assert root.tag == "FeatureCollection"
    members = root.findall("featureMember/Feature")
    assert len(members) == 2
    pos = members[0].find("geometry/Point/pos")
    assert pos.text == "25 15"
    assert members[0].find("geometry/Point").get("srsName") == "EPSG:4326"
    assert members[0].find("value").text == "6.5"
    assert members[1].find("value").text is None


def test_gml_rejects_circles():
    with pytest.raises(UnsupportedGeometry):
        encode_gml([[Circle(Point(0, 0), 1.0)]], ["g"])


# -- ASCII grid -----------------------------------------------------------------

ASC = """\
ncols 3
nrows 2
xllcorner 10
yllcorner 100
cellsize 5
NODATA_value -9999
1 2 3
4 -9999 6
"""


def test_parse_asc():
    grid, gt, nodata = parse_asc(ASC)
    assert grid.shape == (2, 3)
    assert grid[1, 1] == -9999.0
    assert gt == GeoTransform(10.0, 110.0, 5.0, -5.0)
    assert nodata == -9999.0


def test_asc_roundtrip():
    grid, gt, nodata = parse_asc(ASC)
    again, gt2, nodata2 = parse_asc(render_asc(grid, gt, nodata))
    assert np.array_equal(again, grid)
    assert gt2 == gt and nodata2 == nodata


def test_asc_errors_name_the_problem():
    with pytest.raises(HeaderError) as e:
        parse_asc("ncols 2\nnrows 2\nxllcorner 0\ncellsize 1\n1 2 3 4\n")
    assert "yllcorner" in str(e.value)
    with pytest.raises(CellCountMismatch):
        parse_asc("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n")
    with pytest.raises(HeaderError):
        parse_asc("ncols 0\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n")


# -- observation CSV ------------------------------------------------------------

SCHEMA = TableSchema(
    name="obs", srid=4326, key_column="id",
    columns=(("id", "number"), ("the_geom", "geometry"),
             ("val", "number"), ("seen", "timestamp")))


def test_obs_csv_with_xy_columns():
    text = "id,x,y,val,seen\n1,25,15,6.5,2007-07-15T10:00:00Z\n"
    rows, rejects = parse_obs_csv(text, SCHEMA)
    assert rejects == []
    assert rows == [[1.0, Point(25, 15), 6.5,
                     datetime(2007, 7, 15, 10, 0, tzinfo=timezone.utc)]]


def test_obs_csv_with_wkt_column_and_nulls():
    text = "id,the_geom,val,seen\n2,POINT(5 15),,\n"
    rows, rejects = parse_obs_csv(text, SCHEMA)
    assert rejects == []
    assert rows == [[2.0, Point(5, 15), None, None]]


def test_obs_csv_rejects_carry_line_numbers():
    text = ("id,x,y,val,seen\n"
            "1,25,15,6.5,2007-07-15T10:00:00Z\n"
            "2,oops,15,6.5,\n"
            "3,5,15,not-a-number,\n"
            "4,5\n"
            "5,5,15,1.5,yesterday\n")
    rows, rejects = parse_obs_csv(text, SCHEMA)
    assert [r[0] for r in rows] == [1.0]
    assert sorted(r.line for r in rejects) == [3, 4, 5, 6]


def test_obs_csv_header_mismatch():
    with pytest.raises(HeaderMismatch):
        parse_obs_csv("a,b,c\n1,2,3\n", SCHEMA)
    with pytest.raises(HeaderMismatch):
        parse_obs_csv("", SCHEMA)


def test_obs_csv_1000_rows_match_oracle():
    rng = np.random.default_rng(33)
    lines = ["id,x,y,val,seen"]
    expected = []
    for i in range(1000):
        x = round(float(rng.uniform(0, 100)), 6)
        y = round(float(rng.uniform(0, 100)), 6)
        v = round(float(rng.uniform(-50, 50)), 6)
        lines.append(f"{i},{x},{y},{v},")
        expected.append([float(i), Point(x, y), v, None])
    rows, rejects = parse_obs_csv("\n".join(lines) + "\n", SCHEMA)
    assert rejects == []
    assert rows == expected
