import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geosensordb import BandMeta, Database, GeoTransform, Point, RasterCoverageMeta
from geosensordb.errors import (
    DuplicateName,
    InvalidMeta,
    LengthMismatch,
    OutOfRange,
    SridMismatch,
    UnknownBand,
    UnknownCoverage,
)
from geosensordb.model import Envelope, envelopes_overlap
from geosensordb.rasterstore import (
    RasterStore,
    cell_to_world_center,
    grid_envelope,
    world_to_cell,
)

GT = GeoTransform(100.0, 200.0, 10.0, -10.0)


def _make(tmp_path, name="cov", width=7, height=5, tile_size=4, nodata=-9999.0,
          pixel_type="float64", gt=GT):
    store = RasterStore(tmp_path)
    store.create_coverage(RasterCoverageMeta(
        name=name, srid=4326, geotransform=gt, width=width, height=height,
        bands=(BandMeta(1, nodata=nodata, pixel_type=pixel_type),),
        tile_size=tile_size))
    return store


def test_world_to_cell_half_open_edges():
    # 3x2 grid from (100,200) to (130,180).
    assert world_to_cell(GT, Point(100.0, 200.0), 3, 2) == (0, 0)
    assert world_to_cell(GT, Point(109.999, 190.001), 3, 2) == (0, 0)
    assert world_to_cell(GT, Point(110.0, 200.0), 3, 2) == (1, 0)
    assert world_to_cell(GT, Point(100.0, 190.0), 3, 2) == (0, 1)
    # Right and bottom outer edges own no cell.
    assert world_to_cell(GT, Point(130.0, 190.0), 3, 2) is None
    assert world_to_cell(GT, Point(120.0, 180.0), 3, 2) is None
    assert world_to_cell(GT, Point(99.999, 190.0), 3, 2) is None


@given(st.integers(0, 30), st.integers(0, 19))
def test_cell_center_maps_back_to_cell(col, row):
    p = cell_to_world_center(GT, col, row)
    assert world_to_cell(GT, p, 31, 20) == (col, row)


def test_cell_to_world_center_range_check():
    with pytest.raises(OutOfRange):
        cell_to_world_center(GT, 5, 0, width=5, height=5)


def test_grid_envelope_south_up():
    gt = GeoTransform(0.0, 0.0, 1.0, 1.0)
    assert grid_envelope(gt, 4, 3, 4326) == Envelope(0, 0, 4, 3, 4326)


@pytest.mark.parametrize("tile_size", [1, 2, 16, 256])
def test_tiling_is_transparent(tmp_path, tile_size):
    rng = np.random.default_rng(tile_size)
    grid = rng.uniform(-100, 100, size=(5, 7))
    grid[1, 2] = -9999.0
    store = _make(tmp_path / str(tile_size), tile_size=tile_size)
    store.write_grid("cov", 1, grid)
    out = store.read_grid("cov", 1)
    valid = grid != -9999.0
    assert np.array_equal(out[valid], grid[valid])
    assert np.isnan(out[~valid]).all()
    for row in range(5):
        for col in range(7):
            v = store.read_cell("cov", 1, col, row)
            if grid[row, col] == -9999.0:
                assert v is None
            else:
                assert v == grid[row, col]


def test_float32_band_rounds_on_write(tmp_path):
    store = _make(tmp_path, pixel_type="float32", width=1, height=1, tile_size=1)
    store.write_grid("cov", 1, np.array([[0.1]]))
    v = store.read_cell("cov", 1, 0, 0)
    assert v == float(np.float32(0.1))
    assert v != 0.1


def test_unwritten_band_reads_as_nodata(tmp_path):
    store = _make(tmp_path)
    assert store.read_cell("cov", 1, 0, 0) is None
    assert np.isnan(store.read_grid("cov", 1)).all()
    assert store.written_tiles("cov", 1) == []


def test_value_at_checks_srid_and_extent(tmp_path):
    store = _make(tmp_path)
    store.write_grid("cov", 1, np.arange(35.0).reshape(5, 7))
    assert store.value_at("cov", 1, Point(105.0, 195.0)) == 0.0
    assert store.value_at("cov", 1, Point(0.0, 0.0)) is None
    with pytest.raises(SridMismatch):
        store.value_at("cov", 1, Point(105.0, 195.0, srid=3857))


def test_tiles_overlapping_matches_brute_force(tmp_path):
    store = _make(tmp_path, width=5, height=5, tile_size=2)
    meta = store.get_meta("cov")
    rng = np.random.default_rng(42)
    for _ in range(200):
        xs = np.sort(rng.uniform(60, 180, 2))
        ys = np.sort(rng.uniform(120, 230, 2))
        env = Envelope(xs[0], ys[0], xs[1], ys[1], 4326)
        expected = sorted(
            (tc, tr)
            for tr in range(meta.tiles_down)
            for tc in range(meta.tiles_across)
            if envelopes_overlap(meta.tile_footprint(tc, tr), env)
        )
        assert sorted(store.tiles_overlapping("cov", 1, env)) == expected


def test_tile_footprint_excludes_padding(tmp_path):
    store = _make(tmp_path, width=5, height=5, tile_size=4)
    meta = store.get_meta("cov")
    fp = meta.tile_footprint(1, 1)
    # Only one real row/column of cells in the corner tile.
    assert fp == Envelope(140.0, 150.0, 150.0, 160.0, 4326)
    with pytest.raises(OutOfRange):
        meta.tile_footprint(2, 0)


def test_write_grid_validates_length(tmp_path):
    store = _make(tmp_path)
    with pytest.raises(LengthMismatch):
        store.write_grid("cov", 1, np.zeros((4, 7)))


def test_meta_validation():
    with pytest.raises(InvalidMeta):
        RasterCoverageMeta("x", 4326, GT, 0, 5, (BandMeta(1),))
    with pytest.raises(InvalidMeta):
        RasterCoverageMeta("x", 4326, GT, 5, 5, (BandMeta(1), BandMeta(1)))
    with pytest.raises(InvalidMeta):
        BandMeta(1, pixel_type="int8")
    with pytest.raises(ValueError):
        GeoTransform(0, 0, -1.0, -1.0)


def test_unknown_names(tmp_path):
    store = _make(tmp_path)
    with pytest.raises(UnknownCoverage):
        store.get_meta("nope")
    with pytest.raises(UnknownBand):
        store.read_cell("cov", 9, 0, 0)
    with pytest.raises(DuplicateName):
        store.create_coverage(store.get_meta("cov"))
    with pytest.raises(DuplicateName):
        store.add_band("cov", BandMeta(1))


def test_persistence_through_catalog(tmp_path):
    root = tmp_path / "db"
    db = Database.init(root)
    grid = np.array([[1.5, -9999.0], [2.5, 3.5], [4.5, 5.5]])
    db.create_coverage(RasterCoverageMeta(
        name="cov", srid=4326, geotransform=GT, width=2, height=3,
        bands=(BandMeta(1, nodata=-9999.0),), tile_size=2))
    db.rasters.write_grid("cov", 1, grid)

    db2 = Database.open(root)
    assert db2.rasters.get_meta("cov") == db.rasters.get_meta("cov")
    out = db2.rasters.read_grid("cov", 1)
    assert out[0, 0] == 1.5 and math.isnan(out[0, 1]) and out[2, 1] == 5.5
    assert db2.rasters.written_tiles("cov", 1) == [(0, 0), (0, 1)]
